#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "nlwg/correlation.hpp"

using namespace nlwg;

namespace {

WaveguideParams ring(int n, double U) {
    WaveguideParams p;
    p.n_sites = n;
    p.nonlinearity = U;
    return p;
}

SpinEnsemble spins(std::vector<int> x, double omega_e, double g = 0.1) {
    SpinEnsemble e;
    e.positions = std::move(x);
    e.frequency = omega_e;
    e.coupling = g;
    return e;
}

// Real-space resummation: the Poisson kernel sinh/(cosh - cos q) = sum_d e^{-|d|/lambda} e^{iqd}
// and the lattice Green's function sum_k e^{ikx}/delta_k -> e^{-mu|x|}/(2J sinh mu) give an
// independent evaluation of the momentum sum.
double correlation_real_space(double K, int r, double omega_e, const WaveguideParams& p) {
    const double J = p.hopping;
    const double kappa = std::asinh(p.nonlinearity / (4.0 * J * std::abs(std::cos(K / 2.0))));
    const double phi0 = std::sqrt(std::tanh(kappa));
    const double mu = std::acosh((p.base_frequency - omega_e) / (2.0 * J));
    auto G = [&](int x) {
        return std::exp(-I * (K * x / 2.0)) * (std::exp(-mu * std::abs(x)) / (2.0 * J * std::sinh(mu)));
    };
    cplx acc = 0.0;
    for (int d = -2000; d <= 2000; ++d) acc += std::exp(-kappa * std::abs(d)) * 0.5 * (G(d + r) + G(d - r));
    return 2.0 * std::sqrt(2.0) * J * phi0 * acc.real();
}

} // namespace

TEST(Correlation, MatchesRealSpaceResummation) {
    for (double U : {1.0, 4.0}) {
        const auto p = ring(41, U);
        for (double omega_e : {-2.04, -2.5}) {
            const auto e = spins({0}, omega_e);
            for (double K : {0.0, 0.6, 1.445, 2.5})
                for (int r = 0; r <= 10; ++r) {
                    const double ref = correlation_real_space(K, r, omega_e, p);
                    const double f = two_phonon_correlation(K, r, e, p, {.k_points = 4001});
                    EXPECT_NEAR(f, ref, 1e-9 * std::max(1.0, std::abs(ref))) << U << " " << omega_e << " " << K << " " << r;
                }
        }
    }
}

TEST(Correlation, EvenInSeparation) {
    const auto p = ring(41, 4.0);
    const double K0 = 0.46 * pi;
    const auto e = spins({0}, resonant_spin_frequency(K0, p));
    for (int r = 0; r <= 10; ++r)
        EXPECT_NEAR(two_phonon_correlation(K0, r, e, p), two_phonon_correlation(K0, -r, e, p), 1e-12);
}

TEST(Correlation, VanishesAtSeparationThreeNearResonance) {
    const auto p = ring(41, 4.0);
    const double K0 = 0.46 * pi;
    const auto e = spins({0}, resonant_spin_frequency(K0, p));
    const double f0 = two_phonon_correlation(K0, 0, e, p);
    const double f3 = two_phonon_correlation(K0, 3, e, p);
    EXPECT_LT(std::abs(f3 / f0), 0.05);
}

TEST(Correlation, OscillatesInSignAwayFromZeroMomentum) {
    const auto p = ring(41, 4.0);
    const double K0 = 0.46 * pi;
    const auto e = spins({0}, resonant_spin_frequency(K0, p));
    bool pos = false, neg = false;
    for (int r = 0; r <= 10; ++r) {
        const double f = two_phonon_correlation(K0, r, e, p);
        pos = pos || f > 0.0;
        neg = neg || f < 0.0;
    }
    EXPECT_TRUE(pos && neg);
}

TEST(Correlation, DecreasesMonotonicallyAtZeroMomentum) {
    const auto p = ring(41, 4.0);
    const auto e = spins({0}, -2.5);
    double last = INFINITY;
    for (int r = 0; r <= 10; ++r) {
        const double f = two_phonon_correlation(0.0, r, e, p);
        EXPECT_GT(f, 0.0);
        EXPECT_LT(f, last);
        last = f;
    }
}

TEST(Correlation, CoarseGridFailsConvergenceCheck) {
    const auto p = ring(60, 0.7);
    const auto e = spins({0}, -2.03);
    try {
        two_phonon_correlation(0.04, 0, e, p, {.k_points = 5});
        FAIL() << "expected non_convergence";
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), "non_convergence");
    }
}

TEST(GroupVelocity, MatchesFiniteDifferenceOfBoundBand) {
    for (double U : {0.7, 1.0, 2.0, 4.0, 8.0}) {
        const auto p = ring(41, U);
        const double h = 1e-5;
        for (int i = 0; i <= 1000; ++i) {
            const double K = -pi + 2.0 * pi * i / 1000.0;
            const double fd = (bound_state_energy(K + h, p) - bound_state_energy(K - h, p)) / (2.0 * h);
            EXPECT_NEAR(group_velocity(K, p), fd, 1e-6) << "U=" << U << " K=" << K;
        }
        EXPECT_EQ(group_velocity(0.0, p), 0.0);
        EXPECT_NEAR(group_velocity(pi, p), 0.0, 1e-15);
    }
}

TEST(ResonantMomentum, MatchesClosedForm) {
    for (double U : {0.7, 1.0, 4.0}) {
        const auto p = ring(41, U);
        for (double omega_e : {-2.03, -2.1, -2.3, -2.5, -2.8}) {
            const double lo = 0.5 * bound_state_energy(0.0, p), hi = 0.5 * bound_state_energy(pi, p);
            if (!(omega_e > lo && omega_e < hi)) continue;
            const double c2 = (4.0 * omega_e * omega_e - U * U) / 16.0;
            const double K0 = solve_K0(spins({0}, omega_e), p);
            EXPECT_NEAR(K0, 2.0 * std::acos(std::sqrt(c2)), 1e-10);
            EXPECT_NEAR(bound_state_energy(K0, p), 2.0 * omega_e, 1e-12);
        }
    }
}

TEST(ResonantMomentum, BandEdgeAndOutOfBand) {
    const auto p = ring(41, 4.0);
    EXPECT_EQ(solve_K0(spins({0}, -2.0 - 1e-15), ring(41, 4.0)), pi);
    EXPECT_NEAR(solve_K0(spins({0}, resonant_spin_frequency(0.46 * pi, p)), p), 0.46 * pi, 1e-12);
    try {
        solve_K0(spins({0}, -3.0), p);
        FAIL() << "expected no_resonant_bound_state";
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), "no_resonant_bound_state");
    }
}

TEST(RateMatrix, TwoSpinRateIsGammaZeroTimesCorrelationSquared) {
    const auto p = ring(41, 4.0);
    const double K0 = 0.46 * pi;
    const double g = 0.2;
    for (int r : {0, 2, 3, 5}) {
        const auto e = spins({0, r}, resonant_spin_frequency(K0, p), g);
        const auto R = pairwise_rate_matrix(e, p);
        const double vg = 4.0 * std::sin(K0) / std::sqrt(16.0 + 16.0 * std::pow(std::cos(K0 / 2.0), 2));
        const double Gamma0 = 2.0 * std::pow(g, 4) / vg;
        EXPECT_NEAR(R.Gamma0, Gamma0, 1e-12 * Gamma0);
        EXPECT_NEAR(R.two_spin_rate(), Gamma0 * std::pow(two_phonon_correlation(K0, r, e, p), 2), 1e-12 * Gamma0);
        EXPECT_NEAR(R.ucoh(0, 1, 0, 1), 0.0, 1e-15);
    }
}

TEST(RateMatrix, PairSymmetries) {
    const auto p = ring(41, 1.0);
    const auto e = spins({0, 1, 3, 6}, -2.04);
    const auto R = pairwise_rate_matrix(e, p);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                for (int l = 0; l < 4; ++l) {
                    EXPECT_EQ(R.a(i, j, k, l), R.a(j, i, k, l));
                    EXPECT_EQ(R.a(i, j, k, l), R.a(i, j, l, k));
                    EXPECT_EQ(R.a(i, j, k, l), R.a(k, l, i, j));
                    EXPECT_NEAR(R.gamma(i, j, k, l), R.Gamma0 * R.a(i, j, k, l).real(), 1e-18);
                    EXPECT_NEAR(R.ucoh(i, j, k, l), 0.5 * R.Gamma0 * R.a(i, j, k, l).imag(), 1e-18);
                }
}

TEST(RateMatrix, SameSiteEnsembleIsUniformAndReal) {
    const auto p = ring(41, 1.0);
    const auto R = pairwise_rate_matrix(spins({5, 5, 5, 5}, -2.04), p);
    const double f0 = R.f_by_separation.at(0);
    for (std::size_t i = 0; i < R.A.size(); ++i) {
        EXPECT_EQ(R.A[i], cplx(f0 * f0, 0.0));
        EXPECT_EQ(R.Ucoh[i], 0.0);
    }
}

TEST(RateMatrix, FullWavelengthGroupPhaseIsExactlyOne) {
    const auto p = ring(41, 4.0);
    const auto e = spins({0, 0, 4, 4}, resonant_spin_frequency(pi / 2.0, p));
    const auto R = pairwise_rate_matrix(e, p);
    EXPECT_EQ(R.a(0, 1, 2, 3).imag(), 0.0);
    EXPECT_EQ(R.a(0, 1, 2, 3).real(), R.f_by_separation.at(0) * R.f_by_separation.at(0));
    EXPECT_EQ(R.ucoh(0, 1, 2, 3), 0.0);
    // Pairs (0,0) and (0,4) sit half a wavelength apart.
    EXPECT_NEAR(R.a(0, 1, 0, 2).real(), R.f_by_separation.at(0) * R.f_by_separation.at(4) * std::cos(pi), 1e-15);
}

TEST(RateMatrix, MarkovWarningNearBandBottom) {
    const auto slow = pairwise_rate_matrix(spins({0, 0}, -2.03), ring(60, 0.7));
    EXPECT_LT(slow.markov_ratio, markov_warning_ratio);
    EXPECT_FALSE(slow.warnings.empty());
    const auto p = ring(41, 4.0);
    const auto fast = pairwise_rate_matrix(spins({0, 0}, resonant_spin_frequency(0.46 * pi, p)), p);
    EXPECT_GT(fast.markov_ratio, markov_warning_ratio);
    EXPECT_TRUE(fast.warnings.empty());
}
