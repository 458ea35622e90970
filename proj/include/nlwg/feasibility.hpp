// feasibility.hpp: Physical-units conversion for a diamond-beam phononic waveguide.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nlwg/types.hpp"

namespace nlwg {

namespace constants {
inline constexpr double hbar = 1.054571817e-34; // J s
inline constexpr double k_B = 1.380649e-23;     // J / K
} // namespace constants

struct PhysicalUnits {
    double length = 850e-9; // beam L (m)
    double width = 80e-9;   // w (m)
    double height = 80e-9;  // h (m)
    double youngs_modulus = 1200e9; // Pa
    double density = 3500.0;        // kg / m^3
    double quality_factor = 1e6;
    double temperature = 10e-3; // K
    double J_over_2pi = 10e3;   // Hz
    double g_over_2pi = 1e3;    // Hz
    double stated_evolution_time = 500e-6;   // s, quoted for t = 5/J
    double stated_evolution_time_in_J = 5.0; // the same time in units of 1/J
    double reference_omega_r_over_2pi = 2e9; // Hz
    double T1 = 1.0;    // s, pass-through
    double T2 = 1e-3;   // s, pass-through

    void validate() const {
        for (double v : {length, width, height, youngs_modulus, density, quality_factor, temperature, J_over_2pi,
                         stated_evolution_time, stated_evolution_time_in_J, reference_omega_r_over_2pi})
            require(v > 0.0 && std::isfinite(v), "feasibility: physical inputs must be positive and finite");
    }
};

// Dimensionless quantities (units of J and 1/J) to be converted.
struct DimensionlessInputs {
    double coupling = 0.1;     // g / J
    double nonlinearity = 0.7; // U / J
    double phonon_loss = 0.2;  // kappa / J
    double t_max = 5.0;        // J t
    double decay_rate = 0.0;   // Gamma / J, optional
};

struct JReading {
    std::string label;
    double J = 0.0;           // rad / s
    double J_over_2pi = 0.0;  // Hz
    double t_max = 0.0;       // s
    double g = 0.0, U = 0.0, kappa = 0.0, decay_rate = 0.0; // rad / s
};

struct FeasibilityReport {
    double omega_r = 0.0;      // rad / s
    double omega_r_over_2pi = 0.0;
    double omega_r_relative_error = 0.0; // vs the reference value
    double kappa = 0.0;                  // omega_r / Q, rad / s
    double kappa_over_2pi = 0.0;
    double mass = 0.0;                   // kg
    double zero_point_motion = 0.0;      // m
    double thermal_occupation = 0.0;
    double T1 = 0.0, T2 = 0.0;
    JReading from_frequency; // J / 2pi as quoted
    JReading from_time;      // J from "t = 5/J = 500 us"
    double J_ratio = 0.0;    // from_frequency.J / from_time.J
    bool J_consistent = false;
    double g_over_J_physical = 0.0; // quoted g / quoted J
    std::vector<std::string> flags;
};

inline FeasibilityReport feasibility_report(const PhysicalUnits& u, const DimensionlessInputs& d = {}) {
    u.validate();
    FeasibilityReport r;
    r.omega_r = 4.73 * 4.73 * (u.height / (u.length * u.length)) * std::sqrt(u.youngs_modulus / (12.0 * u.density));
    r.omega_r_over_2pi = r.omega_r / (2.0 * pi);
    r.omega_r_relative_error = std::abs(r.omega_r_over_2pi - u.reference_omega_r_over_2pi) / u.reference_omega_r_over_2pi;
    r.kappa = r.omega_r / u.quality_factor;
    r.kappa_over_2pi = r.kappa / (2.0 * pi);
    r.mass = u.density * u.length * u.width * u.height;
    r.zero_point_motion = std::sqrt(constants::hbar / (2.0 * r.mass * r.omega_r));
    const double x = constants::hbar * r.omega_r / (constants::k_B * u.temperature);
    r.thermal_occupation = 1.0 / std::expm1(x);
    r.T1 = u.T1;
    r.T2 = u.T2;

    auto reading = [&](std::string label, double J) {
        JReading j;
        j.label = std::move(label);
        j.J = J;
        j.J_over_2pi = J / (2.0 * pi);
        j.t_max = d.t_max / J;
        j.g = d.coupling * J;
        j.U = d.nonlinearity * J;
        j.kappa = d.phonon_loss * J;
        j.decay_rate = d.decay_rate * J;
        return j;
    };
    r.from_frequency = reading("J/2pi as quoted", 2.0 * pi * u.J_over_2pi);
    r.from_time = reading("J from quoted evolution time", u.stated_evolution_time_in_J / u.stated_evolution_time);
    r.J_ratio = r.from_frequency.J / r.from_time.J;
    r.J_consistent = std::abs(r.J_ratio - 1.0) < 0.05;
    r.g_over_J_physical = u.g_over_2pi / u.J_over_2pi;

    if (!r.J_consistent) {
        r.flags.push_back("J inconsistency: J/2pi = " + std::to_string(u.J_over_2pi) + " Hz gives t = " +
                          std::to_string(u.stated_evolution_time_in_J) + "/J = " +
                          std::to_string(1e6 * u.stated_evolution_time_in_J / r.from_frequency.J) +
                          " us, but the quoted time " + std::to_string(u.stated_evolution_time * 1e6) +
                          " us implies J = " + std::to_string(r.from_time.J) + " 1/s (ratio " +
                          std::to_string(r.J_ratio) + ")");
    }
    if (r.omega_r_relative_error > 0.05)
        r.flags.push_back("omega_r/2pi = " + std::to_string(r.omega_r_over_2pi * 1e-9) + " GHz differs from the quoted " +
                          std::to_string(u.reference_omega_r_over_2pi * 1e-9) + " GHz by " +
                          std::to_string(100.0 * r.omega_r_relative_error) + "%");
    if (std::abs(r.g_over_J_physical - d.coupling) > 0.05 * std::max(d.coupling, 1e-300))
        r.flags.push_back("dimensionless g/J = " + std::to_string(d.coupling) + " differs from quoted g/J = " +
                          std::to_string(r.g_over_J_physical));
    if (r.thermal_occupation >= 1e-4)
        r.flags.push_back("thermal occupation " + std::to_string(r.thermal_occupation) + " is not negligible");
    if (r.from_frequency.t_max > u.T2)
        r.flags.push_back("evolution time exceeds T2 under the quoted J");
    return r;
}

} // namespace nlwg
