#pragma once
//
// Law of the transceiver distance r(t). Each Cartesian component of the
// relative position performs Brownian motion with variance 2 D2 t, so
// r(t) / sqrt(2 D2 t) is noncentral chi with three degrees of freedom and
// noncentrality lambda = r0 / sqrt(2 D2 t).
//
// When D2 t = 0 the distance is deterministic and equal to r0; every function
// below handles that case explicitly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mcmc/channel/env_params.hpp"
#include "mcmc/numerics/special.hpp"

namespace mcmc::channel {

class DistanceLaw {
public:
    DistanceLaw(const EnvParams& env, double t) : r0_(env.r0), t_(t), d2t_(env.D2() * t) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw std::domain_error("DistanceLaw: t must be finite and >= 0");
        }
        env.validate();
    }

    double r0() const { return r0_; }
    double t() const { return t_; }
    /// D2 * t [m^2]
    double spread() const { return d2t_; }
    bool deterministic() const { return !(d2t_ > 0.0); }

    /// Noncentrality r0 / sqrt(2 D2 t); +inf when deterministic.
    double lambda() const {
        return deterministic() ? std::numeric_limits<double>::infinity()
                               : r0_ / std::sqrt(2.0 * d2t_);
    }

    double mean() const {
        if (deterministic()) return r0_;
        return r0_ + mean_excess();
    }

    /// E{r^2} - E{r}^2 with E{r^2} = r0^2 + 6 D2 t, arranged so the r0^2 terms
    /// cancel analytically: 6 D2 t - delta (2 r0 + delta), delta = E{r} - r0.
    double variance() const {
        if (deterministic()) return 0.0;
        const double delta = mean_excess();
        return std::max(0.0, 6.0 * d2t_ - delta * (2.0 * r0_ + delta));
    }

    double stddev() const { return std::sqrt(variance()); }

    double second_moment() const { return r0_ * r0_ + 6.0 * d2t_; }

    /// Density; the difference of Gaussians is written as one exponential times
    /// -expm1 so neither term overflows or cancels at small D2 t.
    double pdf(double r) const {
        if (deterministic()) {
            return r == r0_ ? std::numeric_limits<double>::infinity() : 0.0;
        }
        if (!(r > 0.0)) return 0.0;
        const double d = r - r0_;
        return r / (2.0 * r0_ * std::sqrt(std::numbers::pi * d2t_)) *
               std::exp(-d * d / (4.0 * d2t_)) * (-std::expm1(-r * r0_ / d2t_));
    }

    double cdf(double r) const {
        if (deterministic()) return r >= r0_ ? 1.0 : 0.0;
        if (!(r > 0.0)) return 0.0;
        if (std::isinf(r)) return 1.0;
        return numerics::marcum_p_3_2(lambda(), r / std::sqrt(2.0 * d2t_));
    }

    /// 1 - cdf(r), accurate in the upper tail.
    double ccdf(double r) const {
        if (deterministic()) return r >= r0_ ? 0.0 : 1.0;
        if (!(r > 0.0)) return 1.0;
        if (std::isinf(r)) return 0.0;
        return numerics::marcum_q_3_2(lambda(), r / std::sqrt(2.0 * d2t_));
    }

private:
    // E{r} - r0 = sqrt(4 D2 t / pi) e^{-s^2} + (2 D2 t / r0) erf(s) - r0 erfc(s),
    // s = r0 / sqrt(4 D2 t).
    double mean_excess() const {
        const double w = std::sqrt(4.0 * d2t_);
        const double s = r0_ / w;
        return w / std::sqrt(std::numbers::pi) * std::exp(-s * s) +
               2.0 * d2t_ / r0_ * numerics::erf(s) - r0_ * numerics::erfc(s);
    }

    double r0_;
    double t_;
    double d2t_;
};

inline double distance_mean(const DistanceLaw& law) { return law.mean(); }
inline double distance_variance(const DistanceLaw& law) { return law.variance(); }
inline double distance_pdf(const DistanceLaw& law, double r) { return law.pdf(r); }
inline double distance_cdf(const DistanceLaw& law, double r) { return law.cdf(r); }

}  // namespace mcmc::channel
