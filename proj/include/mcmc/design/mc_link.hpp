#pragma once
//
// On-off keying link with a threshold detector and outdated CSI: the
// distance at each bit's release is known only through its law. Per-bit BER,
// the min-max threshold for uniform release, the min-max release profile for
// a fixed threshold, and the longest frame meeting an efficiency floor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmc/channel/cir.hpp"
#include "mcmc/channel/distance_law.hpp"
#include "mcmc/channel/env_params.hpp"
#include "mcmc/error.hpp"
#include "mcmc/numerics/quadrature.hpp"
#include "mcmc/numerics/roots.hpp"
#include "mcmc/numerics/special.hpp"
#include "mcmc/sim/parallel.hpp"
#include "mcmc/stats/cir_statistics.hpp"

namespace mcmc::design {

using channel::EnvParams;

struct McLinkConfig {
    EnvParams env = EnvParams::link_scenario();
    std::int64_t I = 30;  ///< bits per frame
    double T_b = 10.0;    ///< bit interval [s]
    double eta = 1.0;     ///< noise mean (= variance) [molecules]
    double A = 1e4;       ///< molecules per frame
    double psi = 0.02;    ///< efficiency floor on p(t, T_b)
    double P = 0.8;       ///< confidence for the efficiency floor
    double horizon = 1e5; ///< longest release time searched for the frame duration [s]

    double T() const { return static_cast<double>(I) * T_b; }
    /// Release time of bit i (1-based).
    double release_time(std::int64_t i) const { return static_cast<double>(i - 1) * T_b; }

    void validate() const {
        env.validate();
        auto fail = [](const char* m) { throw std::invalid_argument(std::string("McLinkConfig: ") + m); };
        if (I < 1) fail("I must be >= 1");
        if (!(T_b > 0.0)) fail("T_b must be > 0");
        if (!(eta >= 0.0) || !std::isfinite(eta)) fail("eta must be >= 0");
        if (!(A >= static_cast<double>(I)) || !std::isfinite(A)) fail("A must be >= I");
        if (!(psi > 0.0 && psi < 1.0)) fail("psi must be in (0,1)");
        if (!(P > 0.0 && P < 1.0)) fail("P must be in (0,1)");
        if (!(horizon > 0.0)) fail("horizon must be > 0");
    }
};

namespace detail {

/// Absorption probability over T_b, clamped to 1 inside the receiver.
inline double absorption_clamped(const EnvParams& env, double r, double T_b) {
    return r > env.a_rx ? channel::absorption_probability(env, r, T_b) : 1.0;
}

/// 2 Pr{q <= xi} for q ~ N(mean, var); a point mass when var = 0.
inline double twice_below(double mean, double var, double xi) {
    if (!(var > 0.0)) return xi >= mean ? 2.0 : 0.0;
    return numerics::erfc((mean - xi) / std::sqrt(2.0 * var));
}

/// 2 Pr{q > xi | b = 0}.
inline double twice_false_alarm(double eta, double xi) { return 2.0 - twice_below(eta, eta, xi); }

/// 2 Pr{q <= xi | b = 1, p}.
inline double twice_miss(double eta, double xi, double alpha, double p) {
    return twice_below(alpha * p + eta, alpha * p * (1.0 - p) + eta, xi);
}

}  // namespace detail

/// BER of bit i (1-based) for threshold xi and alpha_i molecules, averaged
/// over the distance at the bit's release by adaptive quadrature. The first
/// bit sees the known distance r0.
///
///   P_b = 1/4 erfc((xi - eta)/sqrt(2 eta)) + 1/4 E{erfc(-zeta_i)}
///
/// which equals the usual 1/2 - 1/4 erf(.) + 1/4 E{erf(zeta_i)} but keeps
/// precision when both error terms are small.
inline double bit_error_probability(const McLinkConfig& cfg, std::int64_t i, double xi, double alpha,
                                    const numerics::QuadratureSpec& quad = {}) {
    cfg.validate();
    if (i < 1 || i > cfg.I) throw std::out_of_range("bit_error_probability: bit index");
    if (!(alpha >= 0.0)) throw std::invalid_argument("bit_error_probability: alpha must be >= 0");
    if (alpha == 0.0) return 0.5;
    const double fa = detail::twice_false_alarm(cfg.eta, xi);
    const channel::DistanceLaw law(cfg.env, cfg.release_time(i));
    if (law.deterministic()) {
        const double p = detail::absorption_clamped(cfg.env, cfg.env.r0, cfg.T_b);
        return 0.25 * (fa + detail::twice_miss(cfg.eta, xi, alpha, p));
    }
    const double cut[] = {cfg.env.a_rx};
    const double miss = numerics::integrate_semi_infinite(
        [&](double r) {
            const double p = detail::absorption_clamped(cfg.env, r, cfg.T_b);
            return law.pdf(r) * detail::twice_miss(cfg.eta, xi, alpha, p);
        },
        law.mean(), law.stddev(), quad, cut);
    return 0.25 * (fa + miss);
}

/// Fixed quadrature rules over the distance law of every bit, for the
/// optimizers, which evaluate the BER many thousands of times.
///
/// Nodes are sorted by absorption probability (descending) with cumulative
/// weights, so the tail where alpha * p is negligible is summed in one go.
class LinkModel {
public:
    explicit LinkModel(const McLinkConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        rules_.resize(static_cast<std::size_t>(cfg_.I));
        sim::parallel_for(rules_.size(), [&](std::size_t k) { rules_[k] = build(static_cast<std::int64_t>(k) + 1); });
    }

    const McLinkConfig& config() const { return cfg_; }
    std::size_t bits() const { return rules_.size(); }

    /// E{p(t_i, T_b)} for bit i (0-based).
    double mean_absorption(std::size_t i) const {
        const auto& r = rules_.at(i);
        double s = 0.0;
        for (std::size_t k = 0; k < r.p.size(); ++k) s += r.w[k] * r.p[k];
        return s;
    }

    /// Mean signal level under bit 1, alpha E{p} + eta.
    double mean_signal(std::size_t i, double alpha) const { return alpha * mean_absorption(i) + cfg_.eta; }

    /// BER of bit i (0-based).
    double ber(std::size_t i, double xi, double alpha) const {
        if (alpha == 0.0) return 0.5;
        const auto& r = rules_[i];
        // beyond this node alpha * p is below 1e-14 of the noise floor
        const double negligible = 1e-14 * std::max(cfg_.eta, 1e-300) / alpha;
        const auto stop = static_cast<std::size_t>(
            std::partition_point(r.p.begin(), r.p.end(), [&](double p) { return p > negligible; }) - r.p.begin());
        double miss = 0.0;
        for (std::size_t k = 0; k < stop; ++k) miss += r.w[k] * detail::twice_miss(cfg_.eta, xi, alpha, r.p[k]);
        miss += r.tail[stop] * detail::twice_miss(cfg_.eta, xi, 0.0, 0.0);
        return 0.25 * (detail::twice_false_alarm(cfg_.eta, xi) + miss);
    }

    std::vector<double> ber(double xi, const std::vector<double>& alphas) const {
        if (alphas.size() != bits()) throw std::invalid_argument("LinkModel::ber: one alpha per bit");
        std::vector<double> out(bits());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = ber(i, xi, alphas[i]);
        return out;
    }

private:
    struct Rule {
        std::vector<double> w, p;
        std::vector<double> tail;  ///< tail[k] = sum of w[k..]
    };

    Rule build(std::int64_t i) const {
        Rule out;
        const channel::DistanceLaw law(cfg_.env, cfg_.release_time(i));
        if (law.deterministic()) {
            out.w = {1.0};
            out.p = {detail::absorption_clamped(cfg_.env, cfg_.env.r0, cfg_.T_b)};
        } else {
            // panels no wider than the scale on which the density or p(r) change
            const double lo = std::max(0.0, law.mean() - 10.0 * law.stddev());
            const double hi = law.mean() + 10.0 * law.stddev();
            const double scale = std::min(law.stddev(), std::sqrt(cfg_.env.D1() * cfg_.T_b)) / 2.0;
            std::vector<double> cuts{lo};
            // p ~ a/r bends on the scale of r itself near the surface: grade geometrically
            for (double c = cfg_.env.a_rx; c < hi && c < cfg_.env.a_rx + scale; c *= 2.0) {
                if (c > lo) cuts.push_back(c);
            }
            cuts.push_back(hi);
            for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
                const int panels = std::clamp(static_cast<int>(std::ceil((cuts[s + 1] - cuts[s]) / scale)), 1, 400);
                const double width = (cuts[s + 1] - cuts[s]) / panels;
                for (int k = 0; k < panels; ++k) {
                    const double c = cuts[s] + (k + 0.5) * width;
                    for (std::size_t j = 0; j < numerics::detail::gl10_nodes.size(); ++j) {
                        for (double sign : {-1.0, 1.0}) {
                            const double r = c + sign * 0.5 * width * numerics::detail::gl10_nodes[j];
                            const double w = 0.5 * width * numerics::detail::gl10_weights[j] * law.pdf(r);
                            if (!(w > 0.0)) continue;
                            out.w.push_back(w);
                            out.p.push_back(detail::absorption_clamped(cfg_.env, r, cfg_.T_b));
                        }
                    }
                }
            }
            // the truncated mass is ~1e-20; normalizing makes alpha = 0 give exactly 1/2
            const double mass = std::accumulate(out.w.begin(), out.w.end(), 0.0);
            for (double& w : out.w) w /= mass;
            std::vector<std::size_t> order(out.p.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.p[a] > out.p[b]; });
            Rule sorted;
            for (std::size_t k : order) {
                sorted.w.push_back(out.w[k]);
                sorted.p.push_back(out.p[k]);
            }
            out = std::move(sorted);
        }
        out.tail.assign(out.w.size() + 1, 0.0);
        for (std::size_t k = out.w.size(); k-- > 0;) out.tail[k] = out.tail[k + 1] + out.w[k];
        return out;
    }

    McLinkConfig cfg_;
    std::vector<Rule> rules_;
};

struct ThresholdResult {
    double xi = 0.0;
    double max_ber = 0.0;
    double lo = 0.0, hi = 0.0;  ///< search interval (eta, min_i mu_i1)
};

/// Threshold minimizing the largest per-bit BER when every bit gets A / I.
/// The search runs over (eta, min_i mu_{i,1}), where each BER is convex.
inline ThresholdResult optimize_threshold_uniform(const LinkModel& model) {
    const auto& cfg = model.config();
    const double alpha = cfg.A / static_cast<double>(cfg.I);
    ThresholdResult out;
    out.lo = cfg.eta;
    out.hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.bits(); ++i) out.hi = std::min(out.hi, model.mean_signal(i, alpha));
    if (!(out.hi > out.lo)) {
        throw infeasible_design("optimize_threshold_uniform: mean signal of some bit does not exceed the noise mean");
    }
    auto worst = [&](double xi) {
        double m = 0.0;
        for (std::size_t i = 0; i < model.bits(); ++i) m = std::max(m, model.ber(i, xi, alpha));
        return m;
    };
    const auto best = numerics::minimize_scalar_convex(worst, {out.lo, out.hi}, 1e-10 * (out.hi - out.lo));
    out.xi = best.x;
    out.max_ber = best.fx;
    return out;
}

inline ThresholdResult optimize_threshold_uniform(const McLinkConfig& cfg) {
    return optimize_threshold_uniform(LinkModel(cfg));
}

struct ReleaseDesign {
    double xi = 0.0;
    std::vector<double> alphas;       ///< integers summing to round(A)
    std::vector<double> real_alphas;  ///< before rounding
    double level = 0.0;               ///< common BER before rounding
    std::vector<double> real_ber;     ///< per-bit BER before rounding
    std::vector<double> per_bit_ber;  ///< after rounding
    double max_ber = 0.0;             ///< after rounding
};

/// Integer profile with the given total: every alpha_i starts at the floor of
/// its real value and the remaining molecules go one at a time to the bit
/// whose BER is currently worst (ties to the lower index). Unlike
/// largest-remainder rounding this never leaves a bit with alpha < 1/2 at
/// zero while others are rounded up.
inline std::vector<double> round_min_max(const LinkModel& model, double xi, const std::vector<double>& x,
                                         double total) {
    std::vector<double> out(x.size());
    double used = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::floor(x[i]);
        used += out[i];
    }
    auto ber = model.ber(xi, out);
    for (auto left = std::llround(total - used); left > 0; --left) {
        const auto k = static_cast<std::size_t>(std::max_element(ber.begin(), ber.end()) - ber.begin());
        out[k] += 1.0;
        ber[k] = model.ber(k, xi, out[k]);
    }
    return out;
}

/// Release profile minimizing the largest per-bit BER for a fixed threshold
/// and budget. Each BER falls strictly with its alpha when xi > eta, so the
/// min-max point equalizes them: find the level L whose per-bit inverses
/// alpha_i(L) add up to A.
inline ReleaseDesign optimize_release(const LinkModel& model, double xi) {
    const auto& cfg = model.config();
    if (!(xi > cfg.eta)) throw std::invalid_argument("optimize_release: xi must exceed the noise mean");
    const std::size_t n = model.bits();
    const double A = cfg.A;

    // The best any bit can do is to take the whole budget.
    double floor_level = 0.0;
    for (std::size_t i = 0; i < n; ++i) floor_level = std::max(floor_level, model.ber(i, xi, A));
    if (!(floor_level < 0.5)) {
        throw infeasible_design("optimize_release: some bit stays at BER 1/2 even with the whole budget");
    }

    std::vector<double> alpha(n);
    auto invert = [&](double level) {
        sim::parallel_for(n, [&](std::size_t i) {
            const double f_hi = model.ber(i, xi, A) - level;
            if (f_hi >= 0.0) {
                alpha[i] = A;  // unreachable within the budget
                return;
            }
            alpha[i] = numerics::find_root([&](double a) { return model.ber(i, xi, a) - level; }, {0.0, A},
                                           1e-12 * A);
        });
        return std::accumulate(alpha.begin(), alpha.end(), 0.0);
    };

    ReleaseDesign out;
    out.xi = xi;
    if (n == 1) {
        alpha[0] = A;
        out.level = model.ber(0, xi, A);
    } else {
        // sum alpha_i(L) - A falls from >= 0 at the floor to -A at L = 1/2
        out.level = numerics::find_root([&](double level) { return invert(level) - A; }, {floor_level, 0.5},
                                        1e-13 * floor_level);
        invert(out.level);
        // spread the residual of the level search proportionally
        const double s = std::accumulate(alpha.begin(), alpha.end(), 0.0);
        for (double& a : alpha) a *= A / s;
    }
    out.real_alphas = alpha;
    out.real_ber = model.ber(xi, alpha);
    out.alphas = round_min_max(model, xi, alpha, A);
    out.per_bit_ber = model.ber(xi, out.alphas);
    out.max_ber = *std::max_element(out.per_bit_ber.begin(), out.per_bit_ber.end());
    return out;
}

inline ReleaseDesign optimize_release(const McLinkConfig& cfg, double xi) {
    return optimize_release(LinkModel(cfg), xi);
}

enum class FrameStatus {
    solved,   ///< Pr{p(t, T_b) > psi} = P at t = T_star - T_b
    zero,     ///< the floor fails already for the first bit
    horizon,  ///< the floor holds up to the search horizon
};

struct FrameDuration {
    double T_star = 0.0;
    double t = 0.0;  ///< last admissible release time
    FrameStatus status = FrameStatus::solved;
};

/// Longest frame such that every release time t <= T_star - T_b has
/// Pr{p(t, T_b) > psi} >= P. That probability is F_r(t)(r~(psi)), which
/// decreases with t, so the crossing is found by bisection.
inline FrameDuration optimal_frame_duration(const McLinkConfig& cfg) {
    cfg.validate();
    const stats::CirStatistics cs(cfg.env);
    FrameDuration out;
    const double p0 = detail::absorption_clamped(cfg.env, cfg.env.r0, cfg.T_b);
    if (!(p0 > cfg.psi)) {
        out.status = FrameStatus::zero;
        return out;
    }
    const double r_tilde = cs.absorption_radius(cfg.T_b, cfg.psi);
    auto excess = [&](double t) { return channel::DistanceLaw(cfg.env, t).cdf(r_tilde) - cfg.P; };
    if (excess(cfg.horizon) >= 0.0) {
        out.status = FrameStatus::horizon;
        out.t = cfg.horizon;
        out.T_star = cfg.horizon + cfg.T_b;
        return out;
    }
    // F_r(0+) is 1 (deterministic r0 < r~), so the bracket is valid
    out.t = numerics::find_root(excess, {0.0, cfg.horizon}, 1e-12 * cfg.horizon);
    out.T_star = out.t + cfg.T_b;
    return out;
}

struct EfficiencyRow {
    double psi = 0.0;
    double t = 0.0;
    double probability = 0.0;  ///< Pr{p(t, T_b) > psi}
};

inline std::vector<EfficiencyRow> efficiency_curve(const McLinkConfig& cfg, const std::vector<double>& psis,
                                                   const std::vector<double>& times) {
    cfg.validate();
    const stats::CirStatistics cs(cfg.env);
    std::vector<EfficiencyRow> out;
    for (double psi : psis) {
        if (!(psi > 0.0 && psi < 1.0)) throw std::invalid_argument("efficiency_curve: psi must be in (0,1)");
        const double r_tilde = cs.absorption_radius(cfg.T_b, psi);
        const double p0 = detail::absorption_clamped(cfg.env, cfg.env.r0, cfg.T_b);
        for (double t : times) {
            if (!(t >= 0.0)) throw std::invalid_argument("efficiency_curve: t must be >= 0");
            const channel::DistanceLaw law(cfg.env, t);
            // a point mass at r0 when the transceivers have not moved yet
            const double pr = law.deterministic() ? (p0 > psi ? 1.0 : 0.0) : law.cdf(r_tilde);
            out.push_back({psi, t, pr});
        }
    }
    return out;
}

struct McDesignResult {
    double xi = 0.0;
    std::vector<double> alphas;
    std::vector<double> per_bit_ber;
    double max_ber = 0.0;
    double uniform_max_ber = 0.0;  ///< max BER of uniform release at the same xi
    double T_star = 0.0;
    FrameStatus frame_status = FrameStatus::solved;
};

/// All three designs: threshold for uniform release, release profile at that
/// threshold, and the frame duration.
inline McDesignResult design_link(const McLinkConfig& cfg) {
    const LinkModel model(cfg);
    const auto th = optimize_threshold_uniform(model);
    const auto rel = optimize_release(model, th.xi);
    const auto fr = optimal_frame_duration(cfg);
    McDesignResult out;
    out.xi = th.xi;
    out.alphas = rel.alphas;
    out.per_bit_ber = rel.per_bit_ber;
    out.max_ber = rel.max_ber;
    out.uniform_max_ber = th.max_ber;
    out.T_star = fr.T_star;
    out.frame_status = fr.status;
    return out;
}

}  // namespace mcmc::design
