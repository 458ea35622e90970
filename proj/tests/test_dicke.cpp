#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "nlwg/dicke.hpp"
#include "nlwg/lindblad.hpp"

using namespace nlwg;

namespace {

std::vector<double> grid_for(LadderKind k, int n, double rate, int points = 2001) {
    return linspace(0.0, default_dicke_t_max(k, n, rate), points);
}

} // namespace

TEST(LadderRates, SuperradianceCoefficients) {
    const auto L = ladder_rates(LadderKind::superradiance, 4);
    const std::vector<double> expected{0.0, 4.0, 6.0, 6.0, 4.0};
    for (int k = 0; k <= 4; ++k) EXPECT_DOUBLE_EQ(L.coefficients[static_cast<std::size_t>(k)], expected[static_cast<std::size_t>(k)]);
}

TEST(LadderRates, SupercorrelatedCoefficientsAreProducts) {
    const auto L = ladder_rates(LadderKind::supercorrelated, 6);
    const double S = 3.0;
    for (int k = 0; k <= 6; ++k) {
        const double m = k - S;
        EXPECT_DOUBLE_EQ(L.coefficients[static_cast<std::size_t>(k)], dicke_b(S, m) * dicke_b(S, m - 1));
    }
    EXPECT_EQ(L.coefficients[0], 0.0);
    EXPECT_EQ(L.coefficients[1], 0.0);
}

TEST(LadderRates, SpinCap) {
    try {
        ladder_rates(LadderKind::superradiance, max_dicke_spins + 1);
        FAIL() << "expected dimension_cap";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), "dimension_cap");
    }
}

TEST(DickeEvolution, TwoSpinSupercorrelatedDecayIsExponential) {
    const double G = 0.7;
    const auto t = linspace(0.0, 3.0, 61);
    const auto r = dicke_evolve(LadderKind::supercorrelated, 2, G, t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(r.series.column("P_e")[i], std::exp(-4.0 * G * t[i]), 1e-9);
}

TEST(DickeEvolution, SingleSpinSuperradianceIsSpontaneousDecay) {
    const auto t = linspace(0.0, 5.0, 51);
    const auto r = dicke_evolve(LadderKind::superradiance, 1, 1.3, t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(r.series.column("P_e")[i], std::exp(-1.3 * t[i]), 1e-9);
}

TEST(DickeEvolution, AgreesWithCollectiveMasterEquation) {
    for (auto kind : {LadderKind::superradiance, LadderKind::supercorrelated}) {
        const int n = 5;
        const double G = 0.2;
        const auto t = grid_for(kind, n, G, 41);
        const auto ladder = dicke_evolve(kind, n, G, t);
        const auto L = kind == LadderKind::superradiance ? superradiance_liouvillian(n, G) : supercorrelated_liouvillian(n, G);
        const auto me = evolve_density_matrix(DensityMatrix::fully_excited(n), L, t);
        for (std::size_t i = 0; i < t.size(); ++i)
            EXPECT_NEAR(ladder.series.column("P_e")[i], me.series.column("P_e")[i], 1e-8) << to_string(kind);
    }
}

TEST(DickeEvolution, PopulationsNormalizedAndOddOffsetsEmpty) {
    const int n = 100;
    const auto t = grid_for(LadderKind::supercorrelated, n, 1.0);
    const auto base = dicke_evolve(LadderKind::supercorrelated, n, 1.0, t);
    const auto r = dicke_evolve(LadderKind::supercorrelated, n, 1.0, t, default_snapshot_times(base.series));
    ASSERT_EQ(r.snapshots.size(), default_snapshot_levels().size());
    for (const auto& s : r.snapshots) {
        EXPECT_NEAR(std::accumulate(s.populations.begin(), s.populations.end(), 0.0), 1.0, 1e-10);
        for (int k = 0; k <= n; ++k)
            if ((n - k) % 2 == 1) EXPECT_LE(s.populations[static_cast<std::size_t>(k)], 1e-14);
    }
    for (const auto& s : distribution_snapshot_report(r.snapshots)) EXPECT_LE(s.odd_offset_max, 1e-14);
}

TEST(DickeEvolution, SuperradianceMidDecayIsUnimodalInTheInterior) {
    const int n = 100;
    const auto t = grid_for(LadderKind::superradiance, n, 1.0);
    const auto base = dicke_evolve(LadderKind::superradiance, n, 1.0, t);
    const double half = half_emission_time(base.series);
    const auto r = dicke_evolve(LadderKind::superradiance, n, 1.0, t, std::vector<double>{half});
    const auto s = distribution_snapshot_report(r.snapshots).at(0);
    EXPECT_GT(s.argmax_m, -50.0);
    EXPECT_LT(s.argmax_m, 50.0);
    EXPECT_FALSE(s.bimodal);
    // Single peak: populations rise to the argmax and fall after it.
    const auto& p = r.snapshots[0].populations;
    const auto top = static_cast<std::size_t>(s.argmax_m + 50.0);
    for (std::size_t k = 1; k <= top; ++k) EXPECT_GE(p[k] + 1e-15, p[k - 1]);
    for (std::size_t k = top + 1; k < p.size(); ++k) EXPECT_LE(p[k], p[k - 1] + 1e-15);
}

TEST(DickeEvolution, SupercorrelatedEmitsFasterThanSuperradiance) {
    const int n = 100;
    const auto sc = dicke_evolve(LadderKind::supercorrelated, n, 1.0, grid_for(LadderKind::supercorrelated, n, 1.0));
    const auto sr = dicke_evolve(LadderKind::superradiance, n, 1.0, grid_for(LadderKind::superradiance, n, 1.0));
    EXPECT_GT(peak_emission_rate(sc.series), peak_emission_rate(sr.series));
    EXPECT_LT(half_emission_time(sc.series), half_emission_time(sr.series));
    double last = 0.0;
    for (int m : {10, 20, 50, 100}) {
        const auto a = dicke_evolve(LadderKind::supercorrelated, m, 1.0, grid_for(LadderKind::supercorrelated, m, 1.0));
        const auto b = dicke_evolve(LadderKind::superradiance, m, 1.0, grid_for(LadderKind::superradiance, m, 1.0));
        const double ratio = half_emission_time(b.series) / half_emission_time(a.series);
        EXPECT_GT(ratio, last);
        last = ratio;
    }
}

TEST(MeanField, FixedPoints) {
    const int n = 20;
    const double S = 10.0;
    const auto t = std::vector<double>{0.0, 50.0, 500.0};
    const auto sr = mean_field_evolve(LadderKind::superradiance, n, 1.0, t);
    EXPECT_NEAR(sr.column("W").back(), -S, 1e-6);
    // The second factor b(S, W-1) vanishes first, at W = -S + 1.
    const auto sc = mean_field_evolve(LadderKind::supercorrelated, n, 1.0, t);
    EXPECT_NEAR(sc.column("W").back(), -S + 1.0, 1e-6);
}

TEST(MeanField, ClosureIsWorseForSupercorrelatedRadiance) {
    const int n = 100;
    double dev[2];
    int i = 0;
    for (auto kind : {LadderKind::superradiance, LadderKind::supercorrelated}) {
        const auto t = grid_for(kind, n, 1.0);
        dev[i++] = mean_field_deviation(dicke_evolve(kind, n, 1.0, t).series, mean_field_evolve(kind, n, 1.0, t), n);
    }
    EXPECT_LT(dev[0], dev[1]);
}

TEST(Crossing, HalfTimeOfExponential) {
    TimeSeries ts;
    auto& y = ts.add_column("P_e");
    for (double t : linspace(0.0, 3.0, 30001)) {
        ts.times.push_back(t);
        y.push_back(std::exp(-t));
    }
    EXPECT_NEAR(half_emission_time(ts), std::log(2.0), 1e-8);
    try {
        crossing_time(ts, 0.01);
        FAIL() << "expected no_crossing";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), "no_crossing");
    }
}

TEST(Parsing, LadderKinds) {
    EXPECT_EQ(parse_ladder_kind("superradiance"), LadderKind::superradiance);
    EXPECT_EQ(parse_ladder_kind(to_string(LadderKind::supercorrelated)), LadderKind::supercorrelated);
    EXPECT_THROW(parse_ladder_kind("dicke"), Error);
}
