// dicke.hpp: Population rate equations on the symmetric Dicke ladder |S, m>, S = N/2.
//
// Supercorrelated radiance (jump S_-^2, rate G):  dp_m/dt = G (c_{m+2} p_{m+2} - c_m p_m)
// Dicke superradiance      (jump S_-,   rate G):  dp_m/dt = G (b_{m+1} p_{m+1} - b_m p_m)
// with b_m = S(S+1) - m(m-1) and c_m = b_m b_{m-1}. Starting from a ladder point mass the
// density matrix stays diagonal, so the population equations are exact.
// Populations are indexed by k = m + S (number of excitations).

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlwg/io.hpp"
#include "nlwg/ode.hpp"
#include "nlwg/types.hpp"

namespace nlwg {

enum class LadderKind { superradiance, supercorrelated };

inline std::string to_string(LadderKind k) {
    return k == LadderKind::superradiance ? "superradiance" : "supercorrelated";
}

inline LadderKind parse_ladder_kind(const std::string& s) {
    if (s == "superradiance") return LadderKind::superradiance;
    if (s == "supercorrelated") return LadderKind::supercorrelated;
    throw Error("validation", "dicke.kind must be 'superradiance' or 'supercorrelated' (got '" + s + "')");
}

inline constexpr int max_dicke_spins = 10'000;

struct LadderRates {
    LadderKind kind = LadderKind::superradiance;
    int n_spins = 0;
    double S = 0.0;
    int step = 1;                     // ladder steps per jump
    std::vector<double> coefficients; // b_m or c_m at index k = m + S

    double m(int k) const { return k - S; }
};

inline double dicke_b(double S, double m) { return S * (S + 1.0) - m * (m - 1.0); }

inline LadderRates ladder_rates(LadderKind kind, int n_spins) {
    require(n_spins >= 1 && n_spins <= max_dicke_spins,
            "dicke: N must be in [1, " + std::to_string(max_dicke_spins) + "] (got " + std::to_string(n_spins) + ")",
            "dimension_cap");
    LadderRates r;
    r.kind = kind;
    r.n_spins = n_spins;
    r.S = 0.5 * n_spins;
    r.step = kind == LadderKind::superradiance ? 1 : 2;
    for (int k = 0; k <= n_spins; ++k) {
        const double m = r.m(k);
        const double b = dicke_b(r.S, m);
        r.coefficients.push_back(kind == LadderKind::superradiance ? b : b * dicke_b(r.S, m - 1.0));
    }
    return r;
}

struct DickeDistribution {
    double S = 0.0;
    double time = 0.0;
    double excited_fraction = 0.0;
    std::vector<double> populations; // index k = m + S, clipped at 0

    double m(int k) const { return k - S; }
};

struct DickeResult {
    TimeSeries series; // S_z, P_e, emission_rate (= -dP_e/dt)
    std::vector<DickeDistribution> snapshots;
};

struct DickeOptions {
    OdeOptions ode{.rtol = 1e-10, .atol = 1e-14};
    int initial_k = -1; // initial point mass at k = m + S; -1: fully excited
};

namespace detail {

inline void ladder_rhs(const LadderRates& L, double rate, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
    const auto n = p.size();
    const auto& c = L.coefficients;
    for (Eigen::Index k = 0; k < n; ++k) {
        double v = -c[static_cast<std::size_t>(k)] * p(k);
        if (k + L.step < n) v += c[static_cast<std::size_t>(k + L.step)] * p(k + L.step);
        dp(k) = rate * v;
    }
}

} // namespace detail

// Expected passage time to the bottom of the ladder, tripled; a default run length.
inline double default_dicke_t_max(LadderKind kind, int n_spins, double rate) {
    const LadderRates L = ladder_rates(kind, n_spins);
    double t = 0.0;
    for (int k = n_spins; k >= 0; k -= L.step) {
        const double c = L.coefficients[static_cast<std::size_t>(k)];
        if (c <= 0.0) break;
        t += 1.0 / (rate * c);
    }
    return 3.0 * t;
}

inline DickeResult dicke_evolve(LadderKind kind, int n_spins, double rate, std::span<const double> t_grid,
                                std::span<const double> snapshot_times = {}, const DickeOptions& opt = {}) {
    require(rate >= 0.0 && std::isfinite(rate), "dicke: rate must be finite and >= 0");
    const LadderRates L = ladder_rates(kind, n_spins);
    const int k0 = opt.initial_k < 0 ? n_spins : opt.initial_k;
    require(k0 <= n_spins, "dicke: initial_k must be <= N");

    DickeResult res;
    res.series.metadata = {{"kind", to_string(kind)}, {"N", std::to_string(n_spins)}, {"rate", format_number(rate)}};
    auto& sz = res.series.add_column("S_z");
    auto& pe = res.series.add_column("P_e");
    auto& em = res.series.add_column("emission_rate");

    std::vector<double> times(t_grid.begin(), t_grid.end());
    std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
    std::sort(snaps.begin(), snaps.end());
    std::vector<double> all = times;
    all.insert(all.end(), snaps.begin(), snaps.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());

    Eigen::VectorXd m(n_spins + 1);
    for (int k = 0; k <= n_spins; ++k) m(k) = L.m(k);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_spins + 1);
    p(k0) = 1.0;
    Eigen::VectorXd dp(n_spins + 1);

    auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { detail::ladder_rhs(L, rate, y, dy); };
    auto observe = [&](double t, const Eigen::VectorXd& y) {
        const Eigen::VectorXd q = y.cwiseMax(0.0);
        const double s = q.dot(m);
        const double frac = (s + L.S) / n_spins;
        if (std::binary_search(snaps.begin(), snaps.end(), t))
            res.snapshots.push_back({L.S, t, frac, std::vector<double>(q.data(), q.data() + q.size())});
        if (!std::binary_search(times.begin(), times.end(), t)) return;
        detail::ladder_rhs(L, rate, y, dp);
        res.series.times.push_back(t);
        sz.push_back(s);
        pe.push_back(frac);
        em.push_back(-dp.dot(m) / n_spins);
    };
    integrate_adaptive(rhs, p, 0.0, all, observe, opt.ode);
    return res;
}

// Mean-field closure: m -> W = <S_z> inside the ladder rates.
inline TimeSeries mean_field_evolve(LadderKind kind, int n_spins, double rate, std::span<const double> t_grid,
                                    const OdeOptions& ode = {.rtol = 1e-10, .atol = 1e-12}) {
    require(rate >= 0.0, "mean_field: rate must be >= 0");
    const double S = 0.5 * n_spins;
    TimeSeries ts;
    ts.metadata = {{"kind", to_string(kind)}, {"N", std::to_string(n_spins)}, {"closure", "mean field"}};
    auto& w = ts.add_column("W");
    auto& pe = ts.add_column("P_e");
    auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const double W = y(0);
        dy(0) = kind == LadderKind::superradiance ? -rate * dicke_b(S, W)
                                                  : -2.0 * rate * dicke_b(S, W) * dicke_b(S, W - 1.0);
    };
    auto observe = [&](double t, const Eigen::VectorXd& y) {
        ts.times.push_back(t);
        w.push_back(y(0));
        pe.push_back((y(0) + S) / n_spins);
    };
    integrate_adaptive(rhs, Eigen::VectorXd::Constant(1, S), 0.0, t_grid, observe, ode);
    return ts;
}

// max_t |W_mf(t) - <S_z>(t)| / N over a shared grid.
inline double mean_field_deviation(const TimeSeries& master, const TimeSeries& mean_field, int n_spins) {
    const auto& a = master.column("S_z");
    const auto& b = mean_field.column("W");
    require(a.size() == b.size(), "mean_field_deviation: series must share the time grid");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d / n_spins;
}

// First time the column drops to `level`, linearly interpolated.
inline double crossing_time(const TimeSeries& ts, double level, const std::string& column = "P_e") {
    const auto& y = ts.column(column);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] > level) continue;
        if (i == 0) return ts.times[0];
        const double t0 = ts.times[i - 1], t1 = ts.times[i];
        return t0 + (y[i - 1] - level) / (y[i - 1] - y[i]) * (t1 - t0);
    }
    throw Error("no_crossing", column + " never drops to " + format_number(level) + " on the time grid");
}

inline double half_emission_time(const TimeSeries& ts, const std::string& column = "P_e") {
    return crossing_time(ts, 0.5, column);
}

inline const std::vector<double>& default_snapshot_levels() {
    static const std::vector<double> levels{0.999, 0.75, 0.5, 0.25};
    return levels;
}

// Times at which P_e crosses each level (levels not reached are skipped).
inline std::vector<double> default_snapshot_times(const TimeSeries& ts,
                                                  const std::vector<double>& levels = default_snapshot_levels()) {
    std::vector<double> out;
    for (double l : levels) {
        try {
            out.push_back(crossing_time(ts, l));
        } catch (const Error&) {
        }
    }
    return out;
}

inline double peak_emission_rate(const TimeSeries& ts) {
    const auto& e = ts.column("emission_rate");
    return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
}

struct SnapshotSummary {
    double time = 0.0;
    double excited_fraction = 0.0;
    double argmax_m = 0.0;
    double p_top = 0.0;    // p at m = S
    double p_bottom = 0.0; // p at m = -S
    double interior_mass = 0.0;
    double max_interior_ratio = 0.0; // largest interior p_m over max(p_top, p_bottom)
    bool bimodal = false;            // peaks at m = +-S, every interior p_m < 10% of the larger
    double odd_offset_max = 0.0;     // largest p_m with S - m odd
};

inline constexpr double bimodal_interior_fraction = 0.1;

inline std::vector<SnapshotSummary> distribution_snapshot_report(const std::vector<DickeDistribution>& snaps) {
    std::vector<SnapshotSummary> out;
    for (const auto& d : snaps) {
        SnapshotSummary s;
        s.time = d.time;
        s.excited_fraction = d.excited_fraction;
        const auto& p = d.populations;
        const auto n = static_cast<int>(p.size()) - 1;
        const auto it = std::max_element(p.begin(), p.end());
        s.argmax_m = d.m(static_cast<int>(it - p.begin()));
        s.p_top = p.back();
        s.p_bottom = p.front();
        double inner = 0.0;
        for (int k = 1; k < n; ++k) {
            s.interior_mass += p[static_cast<std::size_t>(k)];
            inner = std::max(inner, p[static_cast<std::size_t>(k)]);
        }
        for (int k = 0; k <= n; ++k)
            if ((n - k) % 2 == 1) s.odd_offset_max = std::max(s.odd_offset_max, p[static_cast<std::size_t>(k)]);
        const double big = std::max(s.p_top, s.p_bottom);
        s.max_interior_ratio = big > 0.0 ? inner / big : INFINITY;
        s.bimodal = n >= 2 && s.p_top > 0.0 && s.p_bottom > 0.0 && inner < bimodal_interior_fraction * big;
        out.push_back(s);
    }
    return out;
}

} // namespace nlwg
