#pragma once
//
// Statistics of h(t, tau) = h(r(t), tau) and p(t, T_b) = p(r(t), T_b) induced
// by the random transceiver distance r(t).
//
// The moments integrate the hitting-rate formula over the whole distance
// density on (0, inf), i.e. they use cir_extended below a_rx. That is what
// the closed-form mean evaluates to; the mass below a_rx is negligible for
// every scenario of interest.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mcmc/channel/cir.hpp"
#include "mcmc/channel/distance_law.hpp"
#include "mcmc/channel/env_params.hpp"
#include "mcmc/numerics/quadrature.hpp"
#include "mcmc/numerics/roots.hpp"
#include "mcmc/numerics/special.hpp"

namespace mcmc::stats {

using channel::DistanceLaw;
using channel::EnvParams;

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Pair of distances where h(., tau) crosses a level h in (0, h_star).
struct LevelRoots {
    double r1;  ///< on the rising branch, in [a_rx, r_star]
    double r2;  ///< on the falling branch, in [r_star, inf)
};

class CirStatistics {
public:
    explicit CirStatistics(const EnvParams& env, numerics::QuadratureSpec quad = {})
        : env_(env), quad_(quad) {
        env_.validate();
        quad_.validate();
    }

    const EnvParams& env() const { return env_; }
    const numerics::QuadratureSpec& quadrature() const { return quad_; }

    // ----- moments ---------------------------------------------------------

    /// E{h(t, tau)} in closed form.
    ///
    /// Completing the square in the product of the hitting-rate Gaussian
    /// (variance 2 D1 tau) and the two Gaussians of the distance density
    /// (variance 2 D2 t) gives erfc terms. Written with S = D1 tau + D2 t so
    /// nothing overflows as D2 t -> 0; the second erfc term is evaluated via
    /// erfcx when its argument is large.
    double mean(double t, double tau) const {
        check_times(t, tau);
        const DistanceLaw law(env_, t);
        if (law.deterministic()) return channel::cir_extended(env_, env_.r0, tau);
        const double a = env_.a_rx;
        const double r0 = env_.r0;
        const double d1tau = env_.D1() * tau;
        const double d2t = law.spread();
        const double S = d1tau + d2t;
        const double root = 2.0 * std::sqrt(d1tau * d2t * S);
        const double pref = a / (4.0 * r0 * tau * std::sqrt(std::numbers::pi * S)) * (d1tau / S);

        const double xv = -(a * d2t + r0 * d1tau) / root;
        const double dv = r0 - a;
        const double term_v = std::exp(-dv * dv / (4.0 * S)) * dv * numerics::erfc(xv);

        const double xw = (r0 * d1tau - a * d2t) / root;
        const double dw = r0 + a;
        const double ew = -dw * dw / (4.0 * S);
        const double term_w = xw > 0.0 ? dw * std::exp(ew - xw * xw) * numerics::erfcx(xw)
                                       : dw * std::exp(ew) * numerics::erfc(xw);
        return pref * (term_v + term_w);
    }

    /// E{h^2(t, tau)} by adaptive quadrature of h^2 against the distance
    /// density. The product reduces to c (r - a)^2 / r * exp(-u r^2 - v r)
    /// (1 - e^{-(w - v) r}), which has no elementary antiderivative because of
    /// the 1/r factor.
    double second_moment(double t, double tau) const {
        check_times(t, tau);
        const DistanceLaw law(env_, t);
        if (law.deterministic()) {
            const double h = channel::cir_extended(env_, env_.r0, tau);
            return h * h;
        }
        const auto cuts = breakpoints(tau);
        return numerics::integrate_semi_infinite(
            [&](double r) {
                const double h = channel::cir_extended(env_, r, tau);
                return h * h * law.pdf(r);
            },
            law.mean(), law.stddev(), quad_, cuts);
    }

    /// Var{h(t, tau)}, integrated as the central moment (h - m)^2 so no
    /// cancellation between E{h^2} and m^2 occurs. Never negative.
    double variance(double t, double tau) const {
        check_times(t, tau);
        const DistanceLaw law(env_, t);
        if (law.deterministic()) return 0.0;
        const double m = mean(t, tau);
        const auto cuts = breakpoints(tau);
        const double v = numerics::integrate_semi_infinite(
            [&](double r) {
                const double d = channel::cir_extended(env_, r, tau) - m;
                return d * d * law.pdf(r);
            },
            law.mean(), law.stddev(), quad_, cuts);
        return std::max(0.0, v);
    }

    double stddev(double t, double tau) const { return std::sqrt(variance(t, tau)); }

    /// Mean (closed form) and standard deviation from a fixed composite
    /// Gauss-Legendre rule sized to the two length scales of the integrand.
    /// Used for bulk coefficient tables; agrees with variance() to ~1e-7
    /// relative (see the unit tests).
    MeanStd moments_fast(double t, double tau) const {
        check_times(t, tau);
        MeanStd out;
        out.mean = mean(t, tau);
        const DistanceLaw law(env_, t);
        if (law.deterministic()) return out;

        const double a = env_.a_rx;
        const double r0 = env_.r0;
        const double d2t = law.spread();
        const double d1tau = env_.D1() * tau;
        const double mu = law.mean();
        const double sd = law.stddev();
        const double lo = std::max(0.0, mu - 10.0 * sd);
        const double hi = mu + 10.0 * sd;
        const double scale = std::min(std::sqrt(2.0 * d2t), std::sqrt(2.0 * d1tau));
        const int panels = std::clamp(static_cast<int>(std::ceil((hi - lo) / (2.0 * scale))), 2, 64);

        const double h_pref = a / std::sqrt(4.0 * std::numbers::pi * d1tau * tau * tau);
        const double h_rate = 1.0 / (4.0 * d1tau);
        const double f_pref = 1.0 / (2.0 * r0 * std::sqrt(std::numbers::pi * d2t));
        const double f_rate = 1.0 / (4.0 * d2t);
        const double f_cut = r0 / d2t;
        const double m = out.mean;
        const double var = numerics::integrate_fixed(
            [&](double r) {
                const double dh = r - a;
                const double df = r - r0;
                const double h = h_pref * (1.0 - a / r) * std::exp(-dh * dh * h_rate);
                const double f = f_pref * r * std::exp(-df * df * f_rate) * (-std::expm1(-r * f_cut));
                const double d = h - m;
                return d * d * f;
            },
            lo, hi, panels);
        out.stddev = std::sqrt(std::max(0.0, var));
        return out;
    }

    // ----- distribution of h -----------------------------------------------

    channel::CirPeak peak(double tau) const { return channel::cir_peak(env_, tau); }

    /// Distances r1 <= r_star <= r2 with h(r1, tau) = h(r2, tau) = level.
    /// For level <= 0, r1 = a_rx and r2 = +inf.
    LevelRoots level_roots(double tau, double level) const {
        const auto pk = peak(tau);
        if (!(level > 0.0)) return {env_.a_rx, std::numeric_limits<double>::infinity()};
        if (!(level < pk.h_star)) return {pk.r_star, pk.r_star};
        auto g = [&](double r) { return channel::cir_extended(env_, r, tau) - level; };
        const double tol = 1e-14 * pk.r_star;
        const double r1 = numerics::find_root(g, {env_.a_rx, pk.r_star}, tol);
        double hi = std::max(2.0 * pk.r_star, pk.r_star + 10.0 * std::sqrt(2.0 * env_.D1() * tau));
        int guard = 0;
        while (g(hi) > 0.0) {
            hi *= 2.0;
            if (++guard > 200) throw non_convergence("level_roots: cannot bracket r2");
        }
        const double r2 = numerics::find_root(g, {pk.r_star, hi}, tol);
        return {r1, r2};
    }

    /// Density of h(t, tau) at level h. +inf at h == h_star (integrable
    /// singularity), zero outside [0, h_star].
    double pdf(double t, double tau, double h) const {
        check_times(t, tau);
        const auto pk = peak(tau);
        if (h < 0.0 || h > pk.h_star) return 0.0;
        if (h == pk.h_star) return std::numeric_limits<double>::infinity();
        const DistanceLaw law(env_, t);
        if (law.deterministic()) {
            return h == channel::cir_extended(env_, env_.r0, tau)
                       ? std::numeric_limits<double>::infinity()
                       : 0.0;
        }
        const auto rr = level_roots(tau, h);
        double f = law.pdf(rr.r1) / channel::cir_derivative_r(env_, rr.r1, tau);
        if (std::isfinite(rr.r2)) {
            f -= law.pdf(rr.r2) / channel::cir_derivative_r(env_, rr.r2, tau);
        }
        return f;
    }

    /// Pr{h(t, tau) <= h}. Zero below 0; F(0) is the probability that r(t)
    /// lies inside the receiver radius; one at and above h_star.
    double cdf(double t, double tau, double h) const {
        check_times(t, tau);
        if (h < 0.0) return 0.0;
        const auto pk = peak(tau);
        if (h >= pk.h_star) return 1.0;
        const DistanceLaw law(env_, t);
        if (law.deterministic()) {
            return channel::cir_extended(env_, env_.r0, tau) <= h ? 1.0 : 0.0;
        }
        const auto rr = level_roots(tau, h);
        return std::min(1.0, law.cdf(rr.r1) + law.ccdf(rr.r2));
    }

    // ----- distribution of p -----------------------------------------------

    /// Distance at which the absorption probability over T_b equals p.
    double absorption_radius(double T_b, double p) const {
        if (!(p > 0.0 && p < 1.0)) throw std::domain_error("absorption_radius: p must be in (0,1)");
        // below a_rx the molecule starts inside the receiver: absorbed surely
        auto g = [&](double r) {
            return (r > env_.a_rx ? channel::absorption_probability(env_, r, T_b) : 1.0) - p;
        };
        double hi = env_.a_rx + 10.0 * std::sqrt(env_.D1() * T_b);
        int guard = 0;
        while (g(hi) > 0.0) {
            hi = env_.a_rx + 2.0 * (hi - env_.a_rx);
            if (++guard > 200) throw non_convergence("absorption_radius: cannot bracket");
        }
        return numerics::find_root(g, {env_.a_rx, hi}, 1e-15 * hi);
    }

    /// Density of p(t, T_b) at p in (0, 1).
    double absorption_prob_pdf(double t, double T_b, double p) const {
        check_prob_args(t, T_b, p);
        const DistanceLaw law(env_, t);
        const double r = absorption_radius(T_b, p);
        if (law.deterministic() || !(r > env_.a_rx)) return 0.0;
        return -law.pdf(r) / channel::absorption_probability_derivative(env_, r, T_b);
    }

    /// Pr{p(t, T_b) <= p} = Pr{r(t) >= r~(p)}.
    double absorption_prob_cdf(double t, double T_b, double p) const {
        check_prob_args(t, T_b, p);
        const DistanceLaw law(env_, t);
        return law.ccdf(absorption_radius(T_b, p));
    }

    /// Pr{p(t, T_b) > psi} = F_r(r~(psi)).
    double absorption_exceedance(double t, double T_b, double psi) const {
        check_prob_args(t, T_b, psi);
        const DistanceLaw law(env_, t);
        return law.cdf(absorption_radius(T_b, psi));
    }

private:
    static void check_times(double t, double tau) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("CirStatistics: t must be >= 0");
        if (!(tau > 0.0) || !std::isfinite(tau)) throw std::domain_error("CirStatistics: tau must be > 0");
    }

    static void check_prob_args(double t, double T_b, double p) {
        if (!(t >= 0.0)) throw std::domain_error("CirStatistics: t must be >= 0");
        if (!(T_b > 0.0)) throw std::domain_error("CirStatistics: T_b must be > 0");
        if (!(p > 0.0 && p < 1.0)) throw std::domain_error("CirStatistics: p must be in (0,1)");
    }

    // Features of h(., tau): the receiver surface, the peak and the decay.
    std::vector<double> breakpoints(double tau) const {
        const auto pk = peak(tau);
        const double w = std::sqrt(2.0 * env_.D1() * tau);
        std::vector<double> cuts{env_.a_rx, pk.r_star};
        for (int k = 1; k <= 8; ++k) cuts.push_back(pk.r_star + k * w);
        return cuts;
    }

    EnvParams env_;
    numerics::QuadratureSpec quad_;
};

}  // namespace mcmc::stats
