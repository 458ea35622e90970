// correlation.hpp: Two-phonon correlation f_K(r), resonant momentum K0, group velocity,
// and the pair decay/coupling tensors of the Markovian master equation.
//
// f_K(r) = (2 sqrt2 / N_k) sum_k  J cos[(k - K/2) r] / delta_k
//                                 * sinh(1/lambda_K) / (cosh(1/lambda_K) - cos(k - K/2)) * phi_K(0)
// with delta_k = omega_k - omega_e > 0 and phi_K(0) = sqrt(tanh(1/lambda_K)).

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "nlwg/types.hpp"
#include "nlwg/waveguide.hpp"

namespace nlwg {

struct CorrelationOptions {
    int k_points = 401;
    bool check_convergence = true;
    double convergence_tol = 1e-4;
};

namespace detail {

inline double correlation_sum(double K, int r, const SpinEnsemble& ens, const WaveguideParams& p, int n_k) {
    const double inv_lambda = inverse_localization_length(K, p);
    require(std::isfinite(inv_lambda), "two_phonon_correlation: lambda_K must be finite (|K| < pi)");
    const double phi0 = std::sqrt(std::tanh(inv_lambda));
    const double sh = std::sinh(inv_lambda);
    const double ch = std::cosh(inv_lambda);
    double acc = 0.0;
    for (double k : momentum_grid(n_k)) {
        const double delta = single_phonon_dispersion(k, p) - ens.frequency;
        require(delta > 0.0, "two_phonon_correlation: delta_k <= 0 (spin inside the single-phonon band)");
        const double q = k - K / 2.0;
        acc += p.hopping * std::cos(q * r) / delta * sh / (ch - std::cos(q)) * phi0;
    }
    return 2.0 * std::sqrt(2.0) / n_k * acc;
}

} // namespace detail

inline double two_phonon_correlation(double K, int r, const SpinEnsemble& ens, const WaveguideParams& p,
                                     const CorrelationOptions& opt = {}) {
    const double f = detail::correlation_sum(K, r, ens, p, opt.k_points);
    if (opt.check_convergence) {
        const int n2 = 2 * opt.k_points + 1;
        const double f2 = detail::correlation_sum(K, r, ens, p, n2);
        // Scale by the contact value so that zeros of f_K(r) are not reported as divergent.
        const double scale = std::max(std::abs(f2), std::abs(detail::correlation_sum(K, 0, ens, p, n2)));
        if (std::abs(f - f2) > opt.convergence_tol * scale) {
            throw Error("non_convergence", "two_phonon_correlation: k-grid doubling changed f_K(r) by " +
                                               std::to_string(std::abs(f - f2) / scale) + " (relative)");
        }
    }
    return f;
}

inline double group_velocity(double K, const WaveguideParams& p) {
    require(p.nonlinearity > 0.0, "group_velocity: U must be > 0");
    const double J = p.hopping;
    const double c = std::cos(K / 2.0);
    return 4.0 * J * J * std::sin(K) / std::sqrt(p.nonlinearity * p.nonlinearity + 16.0 * J * J * c * c);
}

// Resonant centre-of-mass momentum K0 in (0, pi] with E_{K0} = 2 omega_e, by bisection.
inline double solve_K0(const SpinEnsemble& ens, const WaveguideParams& p) {
    require(p.nonlinearity > 0.0, "solve_K0: U must be > 0");
    const double target = 2.0 * ens.frequency;
    const double e_lo = bound_state_energy(0.0, p);
    const double e_hi = bound_state_energy(pi, p);
    const double scale = std::max(1.0, std::abs(target));
    if (std::abs(target - e_hi) <= 1e-14 * scale) return pi;
    if (!(target > e_lo && target < e_hi)) {
        throw Error("no_resonant_bound_state",
                    "solve_K0: 2 omega_e = " + std::to_string(target) + " outside the bound band (" +
                        std::to_string(e_lo) + ", " + std::to_string(e_hi) + "]: no resonant bound state");
    }
    double lo = 0.0;
    double hi = pi;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bound_state_energy(mid, p) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Pair tensors indexed (i, j, k, l) over spins, flattened row-major.
struct RateMatrix {
    int n_spins = 0;
    double K0 = 0.0;
    double vg = 0.0;
    double Gamma0 = 0.0;
    double markov_ratio = 0.0; // v_g(K0) / (g^2 / J)
    std::map<int, double> f_by_separation; // |n_i - n_j| -> f_{K0}
    std::vector<cplx> A;
    std::vector<double> Gamma;
    std::vector<double> Ucoh;
    std::vector<std::string> warnings;

    std::size_t flat(int i, int j, int k, int l) const {
        const auto n = static_cast<std::size_t>(n_spins);
        return ((static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n + static_cast<std::size_t>(k)) *
                   n +
               static_cast<std::size_t>(l);
    }
    cplx a(int i, int j, int k, int l) const { return A[flat(i, j, k, l)]; }
    double gamma(int i, int j, int k, int l) const { return Gamma[flat(i, j, k, l)]; }
    double ucoh(int i, int j, int k, int l) const { return Ucoh[flat(i, j, k, l)]; }

    // Two-spin decay rate Gamma0 f^2 (meaningful for n_spins == 2).
    double two_spin_rate() const { return Gamma[flat(0, 1, 0, 1)]; }
};

inline constexpr double markov_warning_ratio = 5.0;

inline RateMatrix pairwise_rate_matrix(const SpinEnsemble& ens, const WaveguideParams& p,
                                       const CorrelationOptions& opt = {}) {
    p.validate();
    ens.validate(p);
    RateMatrix R;
    R.n_spins = ens.size();
    R.K0 = solve_K0(ens, p);
    R.vg = group_velocity(R.K0, p);
    const double g = ens.coupling;
    const double J = p.hopping;
    R.Gamma0 = 2.0 * g * g * g * g / (J * J * R.vg);
    R.markov_ratio = (g > 0.0) ? R.vg / (g * g / J) : INFINITY;
    if (R.markov_ratio < markov_warning_ratio) {
        R.warnings.push_back("Markov validity: v_g(K0)/(g^2/J) = " + std::to_string(R.markov_ratio) + " < 5");
    }

    const int N = R.n_spins;
    const auto& x = ens.positions;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const int r = std::abs(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]);
            if (!R.f_by_separation.count(r)) R.f_by_separation[r] = two_phonon_correlation(R.K0, r, ens, p, opt);
        }

    const std::size_t n4 = static_cast<std::size_t>(N) * N * N * N;
    R.A.resize(n4);
    R.Gamma.resize(n4);
    R.Ucoh.resize(n4);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < N; ++l) {
                    const auto xi = x[static_cast<std::size_t>(i)], xj = x[static_cast<std::size_t>(j)];
                    const auto xk = x[static_cast<std::size_t>(k)], xl = x[static_cast<std::size_t>(l)];
                    const double fij = R.f_by_separation.at(std::abs(xi - xj));
                    const double fkl = R.f_by_separation.at(std::abs(xk - xl));
                    const double phase = R.K0 * std::abs((xk + xl) - (xi + xj)) / 2.0;
                    // e^{i 2 pi n} must be exactly 1 for commensurate group spacings.
                    const double rem = std::remainder(phase, 2.0 * pi);
                    const cplx e = std::abs(rem) < 1e-12 ? cplx{1.0, 0.0} : std::exp(I * phase);
                    const cplx a = fij * fkl * e;
                    const auto idx = R.flat(i, j, k, l);
                    R.A[idx] = a;
                    R.Gamma[idx] = R.Gamma0 * a.real();
                    R.Ucoh[idx] = 0.5 * R.Gamma0 * a.imag();
                }
    return R;
}

// Frequency omega_e that places K0 at the requested momentum: omega_e = E_{K0} / 2.
inline double resonant_spin_frequency(double K0, const WaveguideParams& p) { return 0.5 * bound_state_energy(K0, p); }

} // namespace nlwg
