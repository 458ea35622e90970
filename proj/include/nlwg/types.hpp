// types.hpp: Parameter types shared by every module: waveguide, spin ensemble, errors.

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlwg {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Errors carry a short machine-readable kind ("validation", "no_resonant_bound_state",
// "dimension_cap", "non_convergence", "integrator_failure", "positivity", "no_crossing",
// "fit_window", "io") next to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

inline void require(bool ok, const std::string& message, const char* kind = "validation") {
    if (!ok) throw Error(kind, message);
}

enum class Boundary { periodic };

// Nonlinear phononic waveguide: ring of coupled resonators with on-site attraction.
// Energies in units of the hopping J (default J=1, base frequency 0).
struct WaveguideParams {
    int n_sites = 41;
    double hopping = 1.0;        // J
    double nonlinearity = 4.0;   // U
    double phonon_loss = 0.0;    // kappa
    double base_frequency = 0.0; // omega_r
    Boundary boundary = Boundary::periodic;

    void validate() const {
        require(n_sites >= 3, "waveguide.n_sites must be >= 3 (got " + std::to_string(n_sites) + ")");
        require(hopping > 0.0, "waveguide.hopping J must be > 0");
        require(nonlinearity >= 0.0, "waveguide.nonlinearity U must be >= 0");
        require(phonon_loss >= 0.0, "waveguide.phonon_loss kappa must be >= 0");
        require(boundary == Boundary::periodic, "waveguide.boundary must be periodic");
    }
};

// Two-level emitters at integer lattice sites.
struct SpinEnsemble {
    std::vector<int> positions;
    double frequency = -2.5; // omega_e (same frame as omega_r)
    double coupling = 0.1;   // g

    int size() const noexcept { return static_cast<int>(positions.size()); }

    double detuning(const WaveguideParams& wg) const noexcept { return frequency - wg.base_frequency; }

    // Spin frequency must lie below the single-phonon band so that delta_k > 0 on every k.
    void validate(const WaveguideParams& wg) const {
        require(!positions.empty(), "spins.positions must not be empty");
        for (int p : positions) {
            require(p >= 0 && p < wg.n_sites,
                    "spins.positions: site " + std::to_string(p) + " outside [0, n_sites)");
        }
        require(coupling >= 0.0, "spins.coupling g must be >= 0");
        require(detuning(wg) < -2.0 * wg.hopping,
                "spins.frequency: omega_e - omega_r = " + std::to_string(detuning(wg)) +
                    " violates invariant omega_e - omega_r < -2J (spin must lie below the single-phonon band)");
    }
};

} // namespace nlwg
