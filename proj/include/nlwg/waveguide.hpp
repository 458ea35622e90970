// waveguide.hpp: Closed-form band structure of the Kerr-nonlinear phononic waveguide.
//
// Single-phonon band, two-phonon scattering continuum, the two-phonon bound-state
// band and the dimer's relative wavefunction phi_K(d) = sqrt(tanh(1/lambda_K)) e^{-|d|/lambda_K},
// normalized so that sum_d |phi_K(d)|^2 = 1 over the infinite lattice.

#pragma once

#include <cmath>
#include <vector>

#include "nlwg/types.hpp"

namespace nlwg {

// PBC momenta 2*pi*j/n folded into (-pi, pi], ordered by j.
inline std::vector<double> momentum_grid(int n) {
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double kj = 2.0 * pi * j / n;
        if (kj > pi) kj -= 2.0 * pi;
        k[static_cast<std::size_t>(j)] = kj;
    }
    return k;
}

inline double single_phonon_dispersion(double k, const WaveguideParams& p) {
    return p.base_frequency - 2.0 * p.hopping * std::cos(k);
}

inline double two_phonon_scattering_energy(double K, double q, const WaveguideParams& p) {
    return 2.0 * p.base_frequency - 4.0 * p.hopping * std::cos(K / 2.0) * std::cos(q);
}

// Lower edge of the scattering continuum at centre-of-mass momentum K.
inline double scattering_band_bottom(double K, const WaveguideParams& p) {
    return 2.0 * p.base_frequency - 4.0 * p.hopping * std::abs(std::cos(K / 2.0));
}

inline double bound_state_energy(double K, const WaveguideParams& p) {
    require(p.nonlinearity > 0.0, "bound_state_energy: U must be > 0 (no bound band for U <= 0)");
    const double c = std::cos(K / 2.0);
    const double J = p.hopping;
    return 2.0 * p.base_frequency - std::sqrt(p.nonlinearity * p.nonlinearity + 16.0 * J * J * c * c);
}

// Inverse localization length 1/lambda_K = arcsinh(U / (4 J |cos(K/2)|)); +inf at |K| = pi.
inline double inverse_localization_length(double K, const WaveguideParams& p) {
    require(p.nonlinearity > 0.0, "localization_length: U must be > 0");
    // |cos(K/2)| written so that it is exactly zero at K = +-pi.
    const double c = std::abs(std::sin(0.5 * (pi - std::abs(std::remainder(K, 2.0 * pi)))));
    if (c == 0.0) return INFINITY;
    return std::asinh(p.nonlinearity / (4.0 * p.hopping * c));
}

// lambda_K in sites; returns 0 in the fully localized limit K = +-pi.
inline double localization_length(double K, const WaveguideParams& p) {
    const double inv = inverse_localization_length(K, p);
    return std::isinf(inv) ? 0.0 : 1.0 / inv;
}

inline double relative_wavefunction(double K, int d, const WaveguideParams& p) {
    const double inv = inverse_localization_length(K, p);
    if (std::isinf(inv)) return d == 0 ? 1.0 : 0.0;
    return std::sqrt(std::tanh(inv)) * std::exp(-std::abs(d) * inv);
}

inline double bound_state_amplitude_at_contact(double K, const WaveguideParams& p) {
    return relative_wavefunction(K, 0, p);
}

struct BoundStateBand {
    std::vector<double> k_grid;
    std::vector<double> energies;
    std::vector<double> loc_lengths;
    int d_max = 0;
    // rel_wavefunction[iK][d + d_max] = phi_K(d), d in [-d_max, d_max]
    std::vector<std::vector<double>> rel_wavefunction;

    double phi(std::size_t iK, int d) const {
        return rel_wavefunction.at(iK).at(static_cast<std::size_t>(d + d_max));
    }
};

inline BoundStateBand make_bound_state_band(const WaveguideParams& p, int d_max = 10) {
    p.validate();
    require(p.nonlinearity > 0.0, "make_bound_state_band: U must be > 0");
    BoundStateBand band;
    band.k_grid = momentum_grid(p.n_sites);
    band.d_max = d_max;
    for (double K : band.k_grid) {
        band.energies.push_back(bound_state_energy(K, p));
        band.loc_lengths.push_back(localization_length(K, p));
        std::vector<double> row;
        for (int d = -d_max; d <= d_max; ++d) row.push_back(relative_wavefunction(K, d, p));
        band.rel_wavefunction.push_back(std::move(row));
    }
    return band;
}

} // namespace nlwg
