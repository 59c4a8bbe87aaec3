#pragma once
//
// Hybrid simulator: the transceivers are simulated (Brownian walk with the
// revert-on-overlap rule, or exact Gaussian displacement), and each sampled
// distance is mapped through the analytic per-distance CIR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcmc/channel/cir.hpp"
#include "mcmc/channel/env_params.hpp"
#include "mcmc/sim/parallel.hpp"
#include "mcmc/sim/rng.hpp"

namespace mcmc::sim {

using channel::EnvParams;

enum class SimMode {
    particle,  ///< fixed-step random walk, a step causing overlap is undone
    gaussian,  ///< exact Gaussian displacement, no reflection
};

struct SimConfig {
    double step = 1e-3;        ///< random-walk time step [s]
    double horizon = 1.0;      ///< trajectory length [s]
    std::int64_t realizations = 1;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::gaussian;

    void validate() const {
        if (!(step > 0.0)) throw std::invalid_argument("SimConfig: step must be > 0");
        if (realizations < 1) throw std::invalid_argument("SimConfig: realizations must be >= 1");
        if (!(horizon >= step)) throw std::invalid_argument("SimConfig: horizon must be >= step");
    }
};

struct DistanceTrajectory {
    std::vector<double> times;
    std::vector<double> distances;
};

namespace detail {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Tx at the origin, Rx on the diagonal at distance r0.
struct Pair {
    Vec3 tx;
    Vec3 rx;

    explicit Pair(double r0) {
        const double c = r0 / std::sqrt(3.0);
        rx = {c, c, c};
    }
};

inline void displace(Vec3& p, double sigma, Engine& g, std::normal_distribution<double>& z) {
    p.x += sigma * z(g);
    p.y += sigma * z(g);
    p.z += sigma * z(g);
}

// One walk step of length dt; each body reverts if its move causes overlap.
inline void walk_step(Pair& s, const EnvParams& env, double dt, Engine& g, std::normal_distribution<double>& z) {
    const double contact = env.a_tx + env.a_rx;
    if (env.D_Tx > 0.0) {
        const Vec3 before = s.tx;
        displace(s.tx, std::sqrt(2.0 * env.D_Tx * dt), g, z);
        if (distance(s.tx, s.rx) < contact) s.tx = before;
    }
    if (env.D_Rx > 0.0) {
        const Vec3 before = s.rx;
        displace(s.rx, std::sqrt(2.0 * env.D_Rx * dt), g, z);
        if (distance(s.tx, s.rx) < contact) s.rx = before;
    }
}

// Free relative displacement over dt (variance 2 D2 dt per coordinate).
inline void free_step(Pair& s, const EnvParams& env, double dt, Engine& g, std::normal_distribution<double>& z) {
    if (env.D_Tx > 0.0) displace(s.tx, std::sqrt(2.0 * env.D_Tx * dt), g, z);
    if (env.D_Rx > 0.0) displace(s.rx, std::sqrt(2.0 * env.D_Rx * dt), g, z);
}

// Advance from the current time to `until` using walk steps of at most `step`.
inline void advance(Pair& s, const EnvParams& env, const SimConfig& cfg, double dt_total, Engine& g,
                    std::normal_distribution<double>& z) {
    if (!(dt_total > 0.0)) return;
    if (cfg.mode == SimMode::gaussian) {
        free_step(s, env, dt_total, g, z);
        return;
    }
    const auto n = static_cast<std::int64_t>(std::ceil(dt_total / cfg.step - 1e-9));
    const double dt = dt_total / static_cast<double>(n);
    for (std::int64_t k = 0; k < n; ++k) walk_step(s, env, dt, g, z);
}

}  // namespace detail

/// One realization of the distance process on the grid k * step, k = 0..K.
/// Particle mode applies the revert-on-overlap rule every step; Gaussian mode
/// accumulates exact free-diffusion increments (a Brownian path sampled on
/// the grid, with Gaussian marginals at every time).
inline DistanceTrajectory simulate_distance(const EnvParams& env, const SimConfig& cfg,
                                            std::uint64_t realization = 0) {
    env.validate();
    cfg.validate();
    auto g = stream(cfg.seed, realization);
    std::normal_distribution<double> z(0.0, 1.0);
    detail::Pair s(env.r0);
    const auto steps = static_cast<std::int64_t>(std::floor(cfg.horizon / cfg.step + 1e-9));
    DistanceTrajectory out;
    out.times.reserve(steps + 1);
    out.distances.reserve(steps + 1);
    out.times.push_back(0.0);
    out.distances.push_back(env.r0);
    for (std::int64_t k = 1; k <= steps; ++k) {
        if (cfg.mode == SimMode::particle) {
            detail::walk_step(s, env, cfg.step, g, z);
        } else {
            detail::free_step(s, env, cfg.step, g, z);
        }
        out.times.push_back(k * cfg.step);
        out.distances.push_back(detail::distance(s.tx, s.rx));
    }
    return out;
}

/// r(t) for every realization, realization k using stream k.
inline std::vector<double> sample_distances(const EnvParams& env, const SimConfig& cfg, double t) {
    env.validate();
    cfg.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("sample_distances: t must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(cfg.realizations));
    parallel_for(out.size(), [&](std::size_t k) {
        auto g = stream(cfg.seed, k);
        std::normal_distribution<double> z(0.0, 1.0);
        detail::Pair s(env.r0);
        detail::advance(s, env, cfg, t, g, z);
        out[k] = detail::distance(s.tx, s.rx);
    });
    return out;
}

struct CirSampleStats {
    double tau = 0.0;
    double mean = 0.0;
    double variance = 0.0;   ///< unbiased sample variance of h
    double std_error = 0.0;  ///< standard error of the mean
    double second_moment = 0.0;
    std::vector<double> ecdf;  ///< empirical Pr{h <= h_k} on the requested grid
};

struct MonteCarloCir {
    double t = 0.0;
    std::vector<double> distances;
    std::vector<CirSampleStats> per_tau;
};

/// Hybrid Monte Carlo estimate of the CIR statistics at time t.
inline MonteCarloCir monte_carlo_cir_stats(const EnvParams& env, const SimConfig& cfg, double t,
                                           const std::vector<double>& tau_grid,
                                           const std::vector<double>& h_grid = {}) {
    MonteCarloCir out;
    out.t = t;
    out.distances = sample_distances(env, cfg, t);
    const auto n = static_cast<double>(out.distances.size());
    out.per_tau.resize(tau_grid.size());
    parallel_for(tau_grid.size(), [&](std::size_t j) {
        const double tau = tau_grid[j];
        std::vector<double> h(out.distances.size());
        for (std::size_t k = 0; k < h.size(); ++k) h[k] = channel::cir_extended(env, out.distances[k], tau);
        double sum = 0.0, sum2 = 0.0;
        for (double v : h) {
            sum += v;
            sum2 += v * v;
        }
        auto& s = out.per_tau[j];
        s.tau = tau;
        s.mean = sum / n;
        s.second_moment = sum2 / n;
        double ss = 0.0;
        for (double v : h) ss += (v - s.mean) * (v - s.mean);
        s.variance = n > 1 ? ss / (n - 1.0) : 0.0;
        s.std_error = std::sqrt(s.variance / n);
        if (!h_grid.empty()) {
            std::sort(h.begin(), h.end());
            for (double level : h_grid) {
                const auto c = std::upper_bound(h.begin(), h.end(), level) - h.begin();
                s.ecdf.push_back(static_cast<double>(c) / n);
            }
        }
    });
    return out;
}

/// Sample histogram: counts / (n * width) on the given edges.
inline std::vector<double> density_histogram(const std::vector<double>& samples, const std::vector<double>& edges) {
    std::vector<double> out(edges.size() > 1 ? edges.size() - 1 : 0, 0.0);
    if (out.empty() || samples.empty()) return out;
    for (double v : samples) {
        if (v < edges.front() || v >= edges.back()) continue;
        const auto k = std::upper_bound(edges.begin(), edges.end(), v) - edges.begin() - 1;
        out[static_cast<std::size_t>(k)] += 1.0;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] /= static_cast<double>(samples.size()) * (edges[k + 1] - edges[k]);
    }
    return out;
}

struct AbsorptionEstimate {
    double t = 0.0;
    double theta = 0.0;
    double mean_g = 0.0;
    double stddev_g = 0.0;
    double p_theta = 0.0;     ///< fraction of realizations with g(t) >= theta
    double p_theta_se = 0.0;  ///< binomial standard error
};

struct AbsorptionOptions {
    /// false: r(t_i) drawn independently for every release (the independence
    /// the convolution formula assumes); true: one distance path per
    /// realization, sampled at the release times.
    bool shared_path = false;
    bool keep_samples = false;
};

struct MonteCarloAbsorption {
    std::vector<AbsorptionEstimate> estimates;
    std::vector<std::vector<double>> samples;  ///< [eval time][realization], if kept
};

/// Monte Carlo of g(t) = sum_i alpha_i h(t_i, t - t_i) at the evaluation
/// times, with P_theta(t) = Pr{g(t) >= theta(t)}.
inline MonteCarloAbsorption monte_carlo_absorption(const EnvParams& env, const SimConfig& cfg,
                                                   const std::vector<double>& release_times,
                                                   const std::vector<double>& alphas,
                                                   const std::vector<double>& eval_times,
                                                   const std::vector<double>& thetas,
                                                   AbsorptionOptions opts = {}) {
    env.validate();
    cfg.validate();
    if (release_times.size() != alphas.size()) {
        throw std::invalid_argument("monte_carlo_absorption: alphas and release times differ in length");
    }
    if (thetas.size() != eval_times.size()) {
        throw std::invalid_argument("monte_carlo_absorption: one theta per evaluation time required");
    }
    for (std::size_t i = 1; i < release_times.size(); ++i) {
        if (release_times[i] < release_times[i - 1]) {
            throw std::invalid_argument("monte_carlo_absorption: release times must be sorted");
        }
    }
    const double t_max = eval_times.empty() ? 0.0 : *std::max_element(eval_times.begin(), eval_times.end());
    // releases that can contribute at any evaluation time, with alpha > 0
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < release_times.size(); ++i) {
        if (release_times[i] < t_max && alphas[i] > 0.0) active.push_back(i);
    }
    const auto R = static_cast<std::size_t>(cfg.realizations);
    const std::size_t E = eval_times.size();
    std::vector<double> g_all(R * E, 0.0);

    parallel_for(R, [&](std::size_t k) {
        auto g = stream(cfg.seed, k);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> r(active.size());
        if (opts.shared_path) {
            detail::Pair s(env.r0);
            double now = 0.0;
            for (std::size_t j = 0; j < active.size(); ++j) {
                const double ti = release_times[active[j]];
                detail::advance(s, env, cfg, ti - now, g, z);
                now = ti;
                r[j] = detail::distance(s.tx, s.rx);
            }
        } else {
            for (std::size_t j = 0; j < active.size(); ++j) {
                detail::Pair s(env.r0);
                detail::advance(s, env, cfg, release_times[active[j]], g, z);
                r[j] = detail::distance(s.tx, s.rx);
            }
        }
        for (std::size_t e = 0; e < E; ++e) {
            double acc = 0.0;
            for (std::size_t j = 0; j < active.size(); ++j) {
                const std::size_t i = active[j];
                const double tau = eval_times[e] - release_times[i];
                if (tau > 0.0) acc += alphas[i] * channel::cir_extended(env, r[j], tau);
            }
            g_all[k * E + e] = acc;
        }
    });

    MonteCarloAbsorption out;
    const double n = static_cast<double>(R);
    for (std::size_t e = 0; e < E; ++e) {
        AbsorptionEstimate est;
        est.t = eval_times[e];
        est.theta = thetas[e];
        double sum = 0.0, hits = 0.0;
        for (std::size_t k = 0; k < R; ++k) {
            const double v = g_all[k * E + e];
            sum += v;
            if (v >= thetas[e]) hits += 1.0;
        }
        est.mean_g = sum / n;
        double ss = 0.0;
        for (std::size_t k = 0; k < R; ++k) ss += std::pow(g_all[k * E + e] - est.mean_g, 2);
        est.stddev_g = R > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        est.p_theta = hits / n;
        est.p_theta_se = std::sqrt(std::max(est.p_theta * (1.0 - est.p_theta), 1.0 / n) / n);
        out.estimates.push_back(est);
        if (opts.keep_samples) {
            std::vector<double> col(R);
            for (std::size_t k = 0; k < R; ++k) col[k] = g_all[k * E + e];
            out.samples.push_back(std::move(col));
        }
    }
    return out;
}

}  // namespace mcmc::sim
