#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mcmc/channel/cir.hpp"
#include "mcmc/channel/distance_law.hpp"
#include "mcmc/sim/particle_sim.hpp"
#include "oracles.hpp"

using mcmc::channel::DistanceLaw;
using mcmc::channel::EnvParams;
using mcmc::sim::SimConfig;
using mcmc::sim::SimMode;

namespace {

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

TEST(ParticleSim, StaticTransceiversKeepDistance) {
    EnvParams env = EnvParams::table1();
    env.D_Tx = 0.0;
    env.D_Rx = 0.0;
    for (SimMode mode : {SimMode::particle, SimMode::gaussian}) {
        SimConfig cfg{.step = 1.0, .horizon = 100.0, .realizations = 1, .seed = 3, .mode = mode};
        const auto tr = mcmc::sim::simulate_distance(env, cfg);
        ASSERT_EQ(tr.distances.size(), 101u);
        for (double r : tr.distances) EXPECT_NEAR(r, env.r0, 1e-18);
    }
}

TEST(ParticleSim, GaussianModeMatchesDistanceLaw) {
    const EnvParams env = EnvParams::link_scenario();
    const double t = 60.0;
    SimConfig cfg{.step = 1.0, .horizon = t, .realizations = 40000, .seed = 11, .mode = SimMode::gaussian};
    const auto r = mcmc::sim::sample_distances(env, cfg, t);
    const DistanceLaw law(env, t);
    const double se = law.stddev() / std::sqrt(static_cast<double>(r.size()));
    EXPECT_NEAR(sample_mean(r), law.mean(), 4.0 * se);
    EXPECT_NEAR(sample_sd(r), law.stddev(), 0.02 * law.stddev());
    // empirical CDF against the analytic one at a few quantile-ish points
    std::vector<double> sorted = r;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.1, 0.5, 0.9}) {
        const double x = sorted[static_cast<std::size_t>(q * sorted.size())];
        EXPECT_NEAR(law.cdf(x), q, 0.01);
    }
}

TEST(ParticleSim, ParticleModeSecondMomentAt360s) {
    const EnvParams env = EnvParams::table1();
    const double t = 360.0;
    SimConfig cfg{.step = 0.1, .horizon = t, .realizations = 20000, .seed = 5, .mode = SimMode::particle};
    const auto r = mcmc::sim::sample_distances(env, cfg, t);
    std::vector<double> r2(r.size());
    std::transform(r.begin(), r.end(), r2.begin(), [](double x) { return x * x; });
    const double want = env.r0 * env.r0 + 6.0 * env.D2() * t;
    EXPECT_LT(oracle::relative_error(sample_mean(r2), want), 0.01);
}

TEST(ParticleSim, ParticleModeNeverOverlaps) {
    EnvParams env = EnvParams::table1();
    env.r0 = 2e-6;  // start close to contact so reversions actually occur
    env.D_Rx = 1e-12;
    SimConfig cfg{.step = 0.01, .horizon = 50.0, .realizations = 1, .seed = 9, .mode = SimMode::particle};
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto tr = mcmc::sim::simulate_distance(env, cfg, k);
        const double lo = *std::min_element(tr.distances.begin(), tr.distances.end());
        EXPECT_GE(lo, env.a_tx + env.a_rx);
    }
}

TEST(ParticleSim, ReproducibleAndSeedSensitive) {
    const EnvParams env = EnvParams::link_scenario();
    SimConfig cfg{.step = 0.5, .horizon = 20.0, .realizations = 64, .seed = 42, .mode = SimMode::particle};
    const auto a = mcmc::sim::sample_distances(env, cfg, 20.0);
    const auto b = mcmc::sim::sample_distances(env, cfg, 20.0);
    EXPECT_EQ(a, b);
    cfg.seed = 43;
    const auto c = mcmc::sim::sample_distances(env, cfg, 20.0);
    EXPECT_NE(a, c);
}

TEST(ParticleSim, RealizationsAreUncorrelated) {
    const EnvParams env = EnvParams::link_scenario();
    SimConfig cfg{.step = 1.0, .horizon = 10.0, .realizations = 20000, .seed = 1, .mode = SimMode::gaussian};
    const auto r = mcmc::sim::sample_distances(env, cfg, 10.0);
    const double m = sample_mean(r);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) num += (r[k] - m) * (r[k + 1] - m);
    for (double x : r) den += (x - m) * (x - m);
    EXPECT_LT(std::abs(num / den), 4.0 / std::sqrt(static_cast<double>(r.size())));
}

TEST(ParticleSim, MonteCarloCirStatsMatchDirectMapping) {
    const EnvParams env = EnvParams::link_scenario();
    SimConfig cfg{.step = 1.0, .horizon = 30.0, .realizations = 500, .seed = 2, .mode = SimMode::gaussian};
    const std::vector<double> taus{0.5, 2.0};
    const std::vector<double> levels{-1.0, 0.01, 0.1, 10.0};
    const auto mc = mcmc::sim::monte_carlo_cir_stats(env, cfg, 30.0, taus, levels);
    ASSERT_EQ(mc.per_tau.size(), 2u);
    for (std::size_t j = 0; j < taus.size(); ++j) {
        std::vector<double> h;
        for (double r : mc.distances) h.push_back(mcmc::channel::cir_extended(env, r, taus[j]));
        EXPECT_NEAR(mc.per_tau[j].mean, sample_mean(h), 1e-14);
        EXPECT_NEAR(std::sqrt(mc.per_tau[j].variance), sample_sd(h), 1e-12);
        EXPECT_DOUBLE_EQ(mc.per_tau[j].ecdf.front(), 0.0);
        EXPECT_DOUBLE_EQ(mc.per_tau[j].ecdf.back(), 1.0);
        EXPECT_TRUE(std::is_sorted(mc.per_tau[j].ecdf.begin(), mc.per_tau[j].ecdf.end()));
    }
}

TEST(ParticleSim, DensityHistogramNormalised) {
    auto g = oracle::rng(4);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> s(10000);
    for (double& v : s) v = z(g);
    std::vector<double> edges;
    for (int k = 0; k <= 80; ++k) edges.push_back(-8.0 + 0.2 * k);
    const auto d = mcmc::sim::density_histogram(s, edges);
    double mass = 0.0;
    for (double v : d) mass += v * 0.2;
    EXPECT_NEAR(mass, 1.0, 1e-12);
}

TEST(ParticleSim, AbsorptionMonteCarloSingleRelease) {
    // One release at t=0: g(t) = alpha * p_abs(r0, t) deterministically.
    const EnvParams env = EnvParams::link_scenario();
    SimConfig cfg{.step = 1.0, .horizon = 10.0, .realizations = 50, .seed = 8, .mode = SimMode::gaussian};
    const double alpha = 100.0;
    const auto mc = mcmc::sim::monte_carlo_absorption(env, cfg, {0.0}, {alpha}, {5.0, 10.0}, {0.0, 1e9});
    ASSERT_EQ(mc.estimates.size(), 2u);
    EXPECT_NEAR(mc.estimates[0].mean_g, alpha * mcmc::channel::cir_extended(env, env.r0, 5.0), 1e-9);
    EXPECT_NEAR(mc.estimates[0].stddev_g, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(mc.estimates[0].p_theta, 1.0);
    EXPECT_DOUBLE_EQ(mc.estimates[1].p_theta, 0.0);
}

TEST(ParticleSim, AbsorptionMonteCarloMeanIsLinear) {
    const EnvParams env = EnvParams::link_scenario();
    SimConfig cfg{.step = 1.0, .horizon = 100.0, .realizations = 300, .seed = 8, .mode = SimMode::gaussian};
    const std::vector<double> rel{0.0, 10.0, 20.0};
    const auto one = mcmc::sim::monte_carlo_absorption(env, cfg, rel, {10.0, 20.0, 5.0}, {30.0}, {0.0});
    const auto two = mcmc::sim::monte_carlo_absorption(env, cfg, rel, {20.0, 40.0, 10.0}, {30.0}, {0.0});
    EXPECT_NEAR(two.estimates[0].mean_g, 2.0 * one.estimates[0].mean_g, 1e-9);
}

TEST(ParticleSim, AbsorptionShapeChecks) {
    const EnvParams env = EnvParams::link_scenario();
    SimConfig cfg;
    EXPECT_THROW(mcmc::sim::monte_carlo_absorption(env, cfg, {0.0, 1.0}, {1.0}, {2.0}, {0.0}), std::invalid_argument);
    EXPECT_THROW(mcmc::sim::monte_carlo_absorption(env, cfg, {0.0}, {1.0}, {2.0}, {}), std::invalid_argument);
    EXPECT_THROW(mcmc::sim::monte_carlo_absorption(env, cfg, {1.0, 0.0}, {1.0, 1.0}, {2.0}, {0.0}),
                 std::invalid_argument);
    cfg.realizations = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
