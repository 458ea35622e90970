// dynamics.hpp: Ground-truth time evolution of spins + lattice and the reduced c_e / c_K model.

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nlwg/correlation.hpp"
#include "nlwg/io.hpp"
#include "nlwg/ode.hpp"
#include "nlwg/sector.hpp"
#include "nlwg/waveguide.hpp"

namespace nlwg {

struct FullOptions {
    std::optional<std::uint32_t> initial_mask; // default: every spin excited
    OdeOptions ode{.rtol = 1e-9, .atol = 1e-12};
    SectorOptions sector{};
};

// Columns: P_e (population of the initial bare state: excited spins, vacuum),
// P_e_spin_j, phonon_number, norm.
inline TimeSeries evolve_full(const SpinEnsemble& ens, const WaveguideParams& p, std::span<const double> t_grid,
                              const FullOptions& opt = {}) {
    p.validate();
    ens.validate(p);
    const int n = ens.size();
    require(n <= 16, "evolve_full: at most 16 spins");
    const std::uint32_t mask = opt.initial_mask.value_or((1u << n) - 1u);
    const int excitations = std::popcount(mask);
    require(excitations <= 2, "evolve_full: initial state may carry at most 2 excitations");

    const SectorBasis basis(n, p.n_sites, excitations);
    const SparseMatrixC H = build_sector_hamiltonian(ens, p, basis, opt.sector);
    const int D = basis.dimension();
    const int i0 = basis.index(mask, -1, -1);

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(D);
    psi(i0) = 1.0;

    TimeSeries ts;
    ts.metadata = {{"model", "full spin+lattice, no-jump phonon loss"},
                   {"n_sites", std::to_string(p.n_sites)},
                   {"sector_dimension", std::to_string(D)},
                   {"J", format_number(p.hopping)},
                   {"U", format_number(p.nonlinearity)},
                   {"kappa", format_number(p.phonon_loss)},
                   {"omega_e_minus_omega_r", format_number(ens.detuning(p))},
                   {"g", format_number(ens.coupling)}};
    auto& pe = ts.add_column("P_e");
    std::vector<std::vector<double>*> spin_cols;
    for (int j = 0; j < n; ++j) spin_cols.push_back(&ts.add_column("P_e_spin_" + std::to_string(j)));
    auto& nph = ts.add_column("phonon_number");
    auto& norm = ts.add_column("norm");

    std::vector<double> phonons(static_cast<std::size_t>(D));
    for (int i = 0; i < D; ++i) phonons[static_cast<std::size_t>(i)] = basis.state(i).phonons();

    auto rhs = [&H](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) { dy.noalias() = -I * (H * y); };
    auto observe = [&](double t, const Eigen::VectorXcd& y) {
        ts.times.push_back(t);
        pe.push_back(std::norm(y(i0)));
        double ph = 0.0;
        std::vector<double> spins(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < D; ++i) {
            const double w = std::norm(y(i));
            ph += phonons[static_cast<std::size_t>(i)] * w;
            const auto m = basis.state(i).spin_mask;
            for (int j = 0; j < n; ++j)
                if (m >> j & 1u) spins[static_cast<std::size_t>(j)] += w;
        }
        for (int j = 0; j < n; ++j) spin_cols[static_cast<std::size_t>(j)]->push_back(spins[static_cast<std::size_t>(j)]);
        nph.push_back(ph);
        norm.push_back(y.norm());
    };
    integrate_adaptive(rhs, psi, 0.0, t_grid, observe, opt.ode);
    return ts;
}

// Amplitudes of the reduced two-spin model: both spins excited (c_e) and dimers c_K.
struct AmplitudeState {
    cplx c_e{1.0, 0.0};
    Eigen::VectorXcd c_K; // over momentum_grid(n_sites); empty means vacuum
    double time = 0.0;
};

struct ReducedOptions {
    OdeOptions ode{.rtol = 1e-9, .atol = 1e-12};
    double regime_margin = 5.0; // warn unless min delta_k > margin * max(g, |Delta_K0 neighbourhood|)
};

struct ReducedModel {
    std::vector<double> k_grid;
    Eigen::VectorXd detuning;   // Delta_K = E_K - 2 omega_e
    Eigen::VectorXcd coupling;  // V_K = -(g^2 / (J sqrt(N_r))) e^{-iK(n1+n2)/2} f_K(n1 - n2)
    Eigen::MatrixXcd generator; // H_red with state (c_e, c_K...)
};

inline ReducedModel build_reduced_model(const SpinEnsemble& ens, const WaveguideParams& p) {
    p.validate();
    ens.validate(p);
    require(ens.size() == 2, "evolve_reduced: exactly 2 spins required");
    const int N = p.n_sites;
    const int r = ens.positions[0] - ens.positions[1];
    const double centre = 0.5 * (ens.positions[0] + ens.positions[1]);
    const double g = ens.coupling;
    // The reduced model lives on the same finite ring, so its k-sum uses the ring's own grid.
    const CorrelationOptions copt{.k_points = N, .check_convergence = false};

    ReducedModel m;
    m.k_grid = momentum_grid(N);
    m.detuning.resize(N);
    m.coupling.resize(N);
    for (int j = 0; j < N; ++j) {
        const double K = m.k_grid[static_cast<std::size_t>(j)];
        m.detuning(j) = bound_state_energy(K, p) - 2.0 * ens.frequency;
        const double f = two_phonon_correlation(K, r, ens, p, copt);
        m.coupling(j) = -(g * g / (p.hopping * std::sqrt(static_cast<double>(N)))) * std::exp(-I * K * centre) * f;
    }
    m.generator = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    m.generator.block(1, 1, N, N).diagonal() = m.detuning.cast<cplx>();
    m.generator.block(1, 0, N, 1) = m.coupling;
    m.generator.block(0, 1, 1, N) = m.coupling.adjoint();
    return m;
}

// Columns: P_e = |c_e|^2, bound_population = sum_K |c_K|^2, norm.
inline TimeSeries evolve_reduced(const AmplitudeState& state0, const SpinEnsemble& ens, const WaveguideParams& p,
                                 std::span<const double> t_grid, const ReducedOptions& opt = {}) {
    const ReducedModel m = build_reduced_model(ens, p);
    const int N = p.n_sites;

    TimeSeries ts;
    ts.metadata = {{"model", "reduced amplitude equations (c_e, c_K)"},
                   {"n_sites", std::to_string(N)},
                   {"U", format_number(p.nonlinearity)},
                   {"omega_e_minus_omega_r", format_number(ens.detuning(p))},
                   {"g", format_number(ens.coupling)}};

    double delta_min = INFINITY;
    for (double k : momentum_grid(N)) delta_min = std::min(delta_min, single_phonon_dispersion(k, p) - ens.frequency);
    double near = INFINITY;
    for (int j = 0; j < N; ++j) near = std::min(near, std::abs(m.detuning(j)));
    if (delta_min < opt.regime_margin * std::max(ens.coupling, near)) {
        ts.warnings.push_back("adiabatic elimination regime: min delta_k = " + format_number(delta_min) +
                              " is not >> max(g, |Delta_K|)");
    }

    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(N + 1);
    y(0) = state0.c_e;
    if (state0.c_K.size() == N) y.tail(N) = state0.c_K;
    else require(state0.c_K.size() == 0, "evolve_reduced: c_K must match the momentum grid");

    auto& pe = ts.add_column("P_e");
    auto& pb = ts.add_column("bound_population");
    auto& norm = ts.add_column("norm");
    // Arrow structure of the generator: c_e couples to every c_K, the c_K are diagonal.
    const Eigen::VectorXcd delta = m.detuning.cast<cplx>();
    const Eigen::VectorXcd& V = m.coupling;
    auto rhs = [&](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) {
        dv(0) = -I * V.dot(v.tail(N));
        dv.tail(N) = -I * (delta.cwiseProduct(v.tail(N)) + V * v(0));
    };
    auto observe = [&](double t, const Eigen::VectorXcd& v) {
        ts.times.push_back(t + state0.time);
        pe.push_back(std::norm(v(0)));
        pb.push_back(v.tail(N).squaredNorm());
        norm.push_back(v.norm());
    };
    integrate_adaptive(rhs, y, 0.0, t_grid, observe, opt.ode);
    return ts;
}

struct ExponentialFit {
    double rate = 0.0;      // P(t) ~ exp(-rate t)
    double intercept = 0.0; // log P at t = 0
    double r_squared = 1.0;
    int points = 0;
    bool exponential = true; // r_squared >= 0.98
};

inline constexpr double min_exponential_r_squared = 0.98;

// Least-squares slope of log(column) over t in [t_from, t_to].
inline ExponentialFit fit_exponential_rate(const TimeSeries& ts, double t_from, double t_to,
                                           const std::string& column = "P_e") {
    const auto& y = ts.column(column);
    std::vector<double> xs, ls;
    for (std::size_t i = 0; i < ts.times.size(); ++i) {
        const double t = ts.times[i];
        if (t < t_from || t > t_to) continue;
        if (!(y[i] > 0.0)) throw Error("fit_window", "fit_exponential_rate: non-positive value at t=" + format_number(t));
        xs.push_back(t);
        ls.push_back(std::log(y[i]));
    }
    if (xs.size() < 2) throw Error("fit_window", "fit_exponential_rate: fewer than 2 points in window");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ls[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ls[i] - my);
        syy += (ls[i] - my) * (ls[i] - my);
    }
    ExponentialFit fit;
    fit.points = static_cast<int>(xs.size());
    const double slope = sxy / sxx;
    fit.rate = -slope;
    fit.intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ls[i] - (fit.intercept + slope * xs[i]);
        ss_res += e * e;
    }
    // A flat series is a perfect (zero-rate) exponential.
    fit.r_squared = syy > 1e-300 ? 1.0 - ss_res / syy : 1.0;
    fit.exponential = fit.r_squared >= min_exponential_r_squared;
    return fit;
}

} // namespace nlwg
