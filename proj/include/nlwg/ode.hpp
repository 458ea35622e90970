// ode.hpp: Adaptive Dormand-Prince 5(4) and fixed-step RK4 integrators for Eigen states.
//
// State is any Eigen dense type (vector or matrix, real or complex). The adaptive driver
// steps exactly onto every requested output time; no dense-output interpolation is used.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "nlwg/types.hpp"

namespace nlwg {

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 0.0; // 0: pick from the first derivative
    double min_step = 1e-14;
    double max_step = INFINITY;
    long max_steps = 50'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, const OdeOptions& o) {
    const auto scale = o.atol + o.rtol * y0.array().abs().max(y1.array().abs());
    return (err.array().abs() / scale).maxCoeff();
}

} // namespace detail

// Integrates dy/dt = rhs(t, y) from t0 through each time in t_out (ascending, >= t0),
// calling observe(t, y) at each output time. rhs(t, y, dydt) writes into dydt.
template <class Init, class Rhs, class Observer>
OdeStats integrate_adaptive(Rhs&& rhs, const Init& y0, double t0, std::span<const double> t_out, Observer&& observe,
                            const OdeOptions& o = {}) {
    // Dormand-Prince tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    using State = typename Init::PlainObject;
    State y = y0;
    OdeStats stats;
    double t = t0;
    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, tmp = y, ynew = y, err = y;
    rhs(t, y, k1);

    double h = o.initial_step;
    if (h <= 0.0) {
        const double d0 = (y.array().abs() / (o.atol + o.rtol * y.array().abs())).maxCoeff();
        const double d1 = (k1.array().abs() / (o.atol + o.rtol * y.array().abs())).maxCoeff();
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    }

    for (double target : t_out) {
        if (target < t) throw Error("validation", "integrate_adaptive: output times must be ascending");
        while (t < target) {
            if (stats.accepted + stats.rejected > o.max_steps)
                throw Error("integrator_failure", "integrator exceeded max_steps at t=" + std::to_string(t));
            h = std::min(h, o.max_step);
            const double dt = std::min(h, target - t);
            const bool last = (dt >= target - t);

            tmp = y + dt * a21 * k1;
            rhs(t + c2 * dt, tmp, k2);
            tmp = y + dt * (a31 * k1 + a32 * k2);
            rhs(t + c3 * dt, tmp, k3);
            tmp = y + dt * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs(t + c4 * dt, tmp, k4);
            tmp = y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs(t + c5 * dt, tmp, k5);
            tmp = y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs(t + dt, tmp, k6);
            ynew = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs(t + dt, ynew, k7);
            err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double en = detail::error_norm(err, y, ynew, o);
            if (!std::isfinite(en)) throw Error("integrator_failure", "non-finite state at t=" + std::to_string(t));
            if (en <= 1.0) {
                t = last ? target : t + dt;
                y = ynew;
                k1 = k7; // FSAL
                ++stats.accepted;
            } else {
                ++stats.rejected;
            }
            const double factor = (en == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            // An accepted step clipped onto an output time says nothing about the natural step size.
            if (!(dt < h && en <= 1.0)) h = dt * factor;
            if (h < o.min_step && t < target)
                throw Error("integrator_failure", "step size underflow at t=" + std::to_string(t));
        }
        observe(t, y);
    }
    return stats;
}

// Classical RK4 with fixed step h (output times must be multiples of h from t0 up to rounding).
template <class Init, class Rhs, class Observer>
void integrate_fixed_rk4(Rhs&& rhs, const Init& y0, double t0, std::span<const double> t_out, double h, Observer&& observe) {
    using State = typename Init::PlainObject;
    State y = y0;
    double t = t0;
    State k1 = y, k2 = y, k3 = y, k4 = y, tmp = y;
    for (double target : t_out) {
        while (t < target - 1e-12 * std::max(1.0, std::abs(target))) {
            const double step = std::min(h, target - t);
            rhs(t, y, k1);
            tmp = y + 0.5 * step * k1;
            rhs(t + 0.5 * step, tmp, k2);
            tmp = y + 0.5 * step * k2;
            rhs(t + 0.5 * step, tmp, k3);
            tmp = y + step * k3;
            rhs(t + step, tmp, k4);
            y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += step;
        }
        observe(target, y);
    }
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = (n == 1) ? a : a + (b - a) * i / (n - 1);
    return v;
}

} // namespace nlwg
