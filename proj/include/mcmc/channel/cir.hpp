#pragma once
//
// Channel impulse response of an absorbing sphere seen from a point source at
// fixed distance r, and its integral over one bit interval.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mcmc/channel/env_params.hpp"
#include "mcmc/numerics/special.hpp"

namespace mcmc::channel {

namespace detail {

inline void require_outside(const EnvParams& env, double r, const char* who) {
    if (!(r >= env.a_rx)) {
        throw std::domain_error(std::string(who) + ": r must be >= a_rx");
    }
}

}  // namespace detail

/// Hitting rate formula evaluated for any r > 0, including r < a_rx where it
/// is negative. The closed-form moments integrate this extension over the
/// whole distance density, so Monte Carlo estimates use it too.
inline double cir_extended(const EnvParams& env, double r, double tau) {
    if (!(tau > 0.0)) return 0.0;
    const double a = env.a_rx;
    const double four_d1_tau = 4.0 * env.D1() * tau;
    const double d = r - a;
    return a / std::sqrt(std::numbers::pi * four_d1_tau * tau * tau) * (1.0 - a / r) *
           std::exp(-d * d / four_d1_tau);
}

/// h(r, tau) [1/s]; zero for tau <= 0.
inline double cir(const EnvParams& env, double r, double tau) {
    detail::require_outside(env, r, "cir");
    return cir_extended(env, r, tau);
}

/// d h / d r.
inline double cir_derivative_r(const EnvParams& env, double r, double tau) {
    detail::require_outside(env, r, "cir_derivative_r");
    if (!(tau > 0.0)) throw std::domain_error("cir_derivative_r: tau must be > 0");
    const double a = env.a_rx;
    const double two_d1_tau = 2.0 * env.D1() * tau;
    const double d = r - a;
    const double g = a / std::sqrt(2.0 * std::numbers::pi * two_d1_tau * tau * tau) *
                     std::exp(-d * d / (2.0 * two_d1_tau));
    return g * (a / (r * r) - d / two_d1_tau * (1.0 - a / r));
}

struct CirPeak {
    double r_star;  ///< maximiser of h(., tau) on (a_rx, inf)
    double h_star;  ///< h(r_star, tau)
};

/// Location and height of the maximum of h(., tau).
///
/// The stationarity condition reduces to r (r - a)^2 = 2 D1 tau a, whose left
/// side is increasing on (a, inf), so exactly one root lies above a_rx. The
/// cubic is solved with Cardano (trigonometric branch when all roots are real)
/// and then polished by Newton in x = r - a to recover the relative accuracy
/// that the shift r = y + 2a/3 loses when x << a.
inline CirPeak cir_peak(const EnvParams& env, double tau) {
    if (!(tau > 0.0)) throw std::domain_error("cir_peak: tau must be > 0");
    const double a = env.a_rx;
    const double c = 2.0 * env.D1() * tau * a;
    const double p = -a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - c;
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    double y;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        y = std::cbrt(-0.5 * q + s) + std::cbrt(-0.5 * q - s);
    } else {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        y = m * std::cos(std::acos(arg) / 3.0);
    }
    double x = y + 2.0 * a / 3.0 - a;
    if (!(x > 0.0)) x = std::sqrt(c / a);
    for (int it = 0; it < 8; ++it) {
        const double f = (a + x) * x * x - c;
        const double df = x * (2.0 * a + 3.0 * x);
        const double step = f / df;
        x -= step;
        if (std::abs(step) <= 1e-16 * x) break;
    }
    const double r = a + x;
    return {r, cir_extended(env, r, tau)};
}

/// Probability that a molecule released at distance r is absorbed within T_b.
inline double absorption_probability(const EnvParams& env, double r, double T_b) {
    detail::require_outside(env, r, "absorption_probability");
    if (!(T_b > 0.0)) throw std::domain_error("absorption_probability: T_b must be > 0");
    const double a = env.a_rx;
    const double p = a / r * numerics::erfc((r - a) / (2.0 * std::sqrt(env.D1() * T_b)));
    return std::min(1.0, p);
}

/// d p / d r; strictly negative.
inline double absorption_probability_derivative(const EnvParams& env, double r, double T_b) {
    if (!(r > env.a_rx)) throw std::domain_error("absorption_probability_derivative: r must be > a_rx");
    if (!(T_b > 0.0)) throw std::domain_error("absorption_probability_derivative: T_b must be > 0");
    const double a = env.a_rx;
    const double d1tb = env.D1() * T_b;
    const double d = r - a;
    return -a / (r * r) * numerics::erfc(d / (2.0 * std::sqrt(d1tb))) -
           a / (r * std::sqrt(std::numbers::pi * d1tb)) * std::exp(-d * d / (4.0 * d1tb));
}

}  // namespace mcmc::channel
