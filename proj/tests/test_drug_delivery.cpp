#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcmc/channel/cir.hpp"
#include "mcmc/design/drug_delivery.hpp"
#include "mcmc/numerics/lp.hpp"
#include "mcmc/sim/particle_sim.hpp"
#include "mcmc/stats/cir_statistics.hpp"
#include "oracles.hpp"

namespace dd = mcmc::design;
namespace nm = mcmc::numerics;
using mcmc::channel::EnvParams;

namespace {

// Twenty releases of the reference scenario at the full-scale release interval (28.8 s).
dd::DrugDesignProblem small_problem(double beta = 0.0) {
    dd::DrugDesignProblem p;
    p.I = 20;
    p.T = 20 * 28.8;
    p.T_Rx = p.T;
    p.beta = beta;
    return p;
}

}  // namespace

TEST(DrugDesign, ChebyshevBound) {
    EXPECT_DOUBLE_EQ(dd::chebyshev_lower_bound(2.0), 0.75);
    EXPECT_DOUBLE_EQ(dd::chebyshev_lower_bound(1.0), 0.0);
    EXPECT_DOUBLE_EQ(dd::chebyshev_lower_bound(0.0), 0.0);
    EXPECT_NEAR(dd::chebyshev_lower_bound(3.0), 8.0 / 9.0, 1e-15);
}

TEST(DrugDesign, ProblemGrids) {
    auto p = small_problem();
    const auto rt = p.release_times();
    ASSERT_EQ(rt.size(), 20u);
    EXPECT_DOUBLE_EQ(rt.front(), 0.0);
    EXPECT_NEAR(rt.back(), 19 * 28.8, 1e-9);
    const auto ct = p.constraint_times();
    ASSERT_EQ(ct.size(), 100u);
    EXPECT_NEAR(ct.front(), 28.8 / 5, 1e-12);
    EXPECT_NEAR(ct.back(), p.T_Rx, 1e-9);
    p.grid = dd::ConstraintGrid::window;
    EXPECT_EQ(p.constraint_times().size(), 5u);
    p.theta = {1.0, 2.0};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.theta = {1, 2, 3, 4, 5};
    EXPECT_NO_THROW(p.validate());
    EXPECT_DOUBLE_EQ(p.theta_at_time(p.T_Rx / 5), 1.0);
    EXPECT_DOUBLE_EQ(p.theta_at_time(p.T_Rx / 5 + 1.0), 2.0);
    p.theta = {-1.0};
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(DrugDesign, SingleReleaseSingleInstant) {
    dd::DrugDesignProblem p;
    p.I = 1;
    p.N = 1;
    p.T = 28.8;
    p.T_Rx = 28.8;
    const auto r = dd::design_release(p);
    ASSERT_TRUE(r.feasible);
    EXPECT_TRUE(r.certified);
    ASSERT_EQ(r.alphas.size(), 1u);
    // D_Tx and D_Rx are tiny on this scale, so the first coefficient is close
    // to the static CIR at r0
    const double h = mcmc::stats::CirStatistics(p.env).mean(0.0, 28.8);
    EXPECT_DOUBLE_EQ(r.alphas[0], std::nearbyint(1.0 / h));
    EXPECT_NEAR(h, mcmc::channel::cir(p.env, p.env.r0, 28.8), 1e-3 * h);
}

TEST(DrugDesign, BetaZeroDesignIsFeasibleAndTight) {
    const auto p = small_problem();
    const auto r = dd::design_release(p);
    ASSERT_TRUE(r.feasible);
    EXPECT_TRUE(r.certified);
    for (double a : r.alphas) {
        EXPECT_GE(a, 0.0);
        EXPECT_EQ(a, std::floor(a));
    }
    EXPECT_GE(r.min_slack_real, -1e-6);
    EXPECT_LE(r.min_slack_real, 1e-6);  // optimum: some constraint binds
    // rounding moves every row by at most half a molecule per release
    const auto a = dd::build_constraint_matrix(p);
    double biggest = 0.0;
    for (std::size_t n = 0; n < a.rows(); ++n) {
        for (std::size_t i = 0; i < a.cols(); ++i) biggest = std::max(biggest, std::abs(a(n, i)));
    }
    EXPECT_GE(r.min_slack_rounded, -0.5 * biggest * static_cast<double>(p.I));
    const auto slack = dd::constraint_slacks(p, r.alphas);
    EXPECT_NEAR(*std::min_element(slack.begin(), slack.end()), r.min_slack_rounded, 1e-9);
    EXPECT_NEAR(r.total_A, r.schedule().total(), 0.0);
}

TEST(DrugDesign, StaircaseMatchesSimplex) {
    for (double beta : {0.0, 1.0}) {
        const auto p = small_problem(beta);
        const auto r = dd::design_release(p);
        const auto a = dd::build_constraint_matrix(p);
        const std::vector<double> c(a.cols(), 1.0), b(a.rows(), 1.0);
        const auto s = nm::solve_lp(c, a, b);
        ASSERT_EQ(s.status, nm::LpStatus::optimal);
        ASSERT_TRUE(r.feasible);
        EXPECT_NEAR(r.lp_objective_real, s.objective, 1e-6 * s.objective) << "beta " << beta;
    }
}

TEST(DrugDesign, WindowGridGoesThroughInteriorPoint) {
    auto p = small_problem();
    p.grid = dd::ConstraintGrid::window;
    p.N = 7;
    const auto r = dd::design_release(p);
    const auto a = dd::build_constraint_matrix(p);
    const std::vector<double> c(a.cols(), 1.0), b(a.rows(), 1.0);
    const auto s = nm::solve_lp(c, a, b);
    ASSERT_EQ(s.status, nm::LpStatus::optimal);
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.lp_objective_real, s.objective, 1e-6 * s.objective);
    EXPECT_GE(r.min_slack_real, -1e-6);
}

TEST(DrugDesign, MonotoneInBetaAndTheta) {
    auto p = small_problem();
    const auto sweep = dd::design_release_sweep(p, {0.0, 0.5, 1.0, 2.0});
    ASSERT_EQ(sweep.size(), 4u);
    for (std::size_t k = 1; k < sweep.size(); ++k) {
        ASSERT_TRUE(sweep[k].feasible);
        EXPECT_GE(sweep[k].lp_objective_real, sweep[k - 1].lp_objective_real * (1.0 - 1e-9));
    }
    // the optimum scales linearly with a constant target
    p.theta = {3.0};
    const auto triple = dd::design_release(p);
    EXPECT_NEAR(triple.lp_objective_real, 3.0 * sweep[0].lp_objective_real, 1e-6 * triple.lp_objective_real);
    p.theta = {0.0};
    const auto none = dd::design_release(p);
    ASSERT_TRUE(none.feasible);
    EXPECT_DOUBLE_EQ(none.total_A, 0.0);
}

TEST(DrugDesign, SweepAgreesWithSingleSolves) {
    const auto sweep = dd::design_release_sweep(small_problem(), {0.0, 1.5});
    const auto one = dd::design_release(small_problem(1.5));
    EXPECT_EQ(sweep[1].alphas, one.alphas);
}

TEST(DrugDesign, InfeasibleWhenNothingArrives) {
    auto p = small_problem();
    p.env.D_X = 1e-22;  // nothing reaches the receiver within the window
    const auto r = dd::design_release(p);
    EXPECT_FALSE(r.feasible);
    EXPECT_DOUBLE_EQ(r.total_A, 0.0);
}

TEST(DrugDesign, RateMoments) {
    const auto env = EnvParams::link_scenario();
    const mcmc::stats::CirStatistics cs(env);
    const auto none = dd::absorption_rate_moments(cs, {}, 5.0);
    EXPECT_EQ(none.mean, 0.0);
    EXPECT_EQ(none.v_upper, 0.0);
    const dd::ReleaseSchedule one{{1.0}, {40.0}};
    const auto m = dd::absorption_rate_moments(cs, one, 6.0);
    EXPECT_NEAR(m.mean, 40.0 * cs.mean(1.0, 5.0), 1e-9 * m.mean);
    EXPECT_NEAR(m.v_upper, 40.0 * cs.stddev(1.0, 5.0), 1e-6 * m.v_upper);
    // releases in the future do not count
    const auto early = dd::absorption_rate_moments(cs, one, 0.5);
    EXPECT_EQ(early.mean, 0.0);
}

TEST(DrugDesign, ExceedanceEdgeCases) {
    const auto env = EnvParams::link_scenario();
    const mcmc::stats::CirStatistics cs(env);
    const dd::ReleaseSchedule s{{0.0, 10.0, 20.0}, {30.0, 30.0, 30.0}};
    EXPECT_DOUBLE_EQ(dd::exceedance_probability(cs, s, 0.0, 30.0), 1.0);
    double ceiling = 0.0;
    for (double t_i : s.times) ceiling += 30.0 * cs.peak(30.0 - t_i).h_star;
    EXPECT_NEAR(dd::exceedance_probability(cs, s, 1.01 * ceiling, 30.0), 0.0, 1e-12);
    EXPECT_THROW(dd::exceedance_probability(cs, dd::ReleaseSchedule{{0.0}, {}}, 1.0, 2.0), std::invalid_argument);
}

TEST(DrugDesign, ExceedanceSingleReleaseMatchesCdf) {
    const auto env = EnvParams::link_scenario();
    const mcmc::stats::CirStatistics cs(env);
    const double alpha = 50.0, t_i = 20.0, t = 60.0;
    const dd::ReleaseSchedule s{{t_i}, {alpha}};
    const double m = cs.mean(t_i, t - t_i);
    for (double q : {0.3, 0.8, 1.0, 1.2}) {
        const double theta = q * alpha * m;
        const double want = 1.0 - cs.cdf(t_i, t - t_i, theta / alpha);
        EXPECT_NEAR(dd::exceedance_probability(cs, s, theta, t), want, 1e-3) << q;
    }
}

TEST(DrugDesign, ExceedanceMonotoneAndGridStable) {
    const auto env = EnvParams::link_scenario();
    const mcmc::stats::CirStatistics cs(env);
    dd::ReleaseSchedule s;
    for (int i = 0; i < 10; ++i) {
        s.times.push_back(10.0 * i);
        s.alphas.push_back(20.0 + i);
    }
    const double t = 105.0;
    const double mean = dd::absorption_rate_moments(cs, s, t).mean;
    double prev = 1.0;
    for (double q = 0.5; q <= 1.5; q += 0.1) {
        const double p = dd::exceedance_probability(cs, s, q * mean, t);
        EXPECT_LE(p, prev + 1e-12);
        prev = p;
        EXPECT_NEAR(dd::exceedance_probability(cs, s, q * mean, t, 8192), p, 1e-3);
    }
}

TEST(DrugDesign, ExceedanceMatchesMonteCarlo) {
    const auto env = EnvParams::link_scenario();
    const mcmc::stats::CirStatistics cs(env);
    dd::ReleaseSchedule s;
    for (int i = 0; i < 10; ++i) {
        s.times.push_back(10.0 * i);
        s.alphas.push_back(20.0);
    }
    const double t = 105.0;
    const double mean = dd::absorption_rate_moments(cs, s, t).mean;
    const std::vector<double> thetas{0.8 * mean, mean, 1.2 * mean};
    mcmc::sim::SimConfig cfg{.step = 1.0, .horizon = t, .realizations = 20000, .seed = 77,
                             .mode = mcmc::sim::SimMode::gaussian};
    const auto mc = mcmc::sim::monte_carlo_absorption(env, cfg, s.times, s.alphas, {t, t, t}, thetas);
    ASSERT_EQ(mc.estimates.size(), thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double p = dd::exceedance_probability(cs, s, thetas[k], t);
        EXPECT_NEAR(p, mc.estimates[k].p_theta, 4.0 * mc.estimates[k].p_theta_se + 2e-3) << k;
    }
}

TEST(DrugDesign, EvaluateScheduleRows) {
    const auto p = small_problem(2.0);
    const auto r = dd::design_release(p);
    ASSERT_TRUE(r.feasible);
    const auto rows = dd::evaluate_schedule(p, r.schedule(), {100.0, 300.0, p.T_Rx});
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& row : rows) {
        EXPECT_DOUBLE_EQ(row.chebyshev, 0.75);
        EXPECT_GE(row.p_theta, 0.0);
        EXPECT_LE(row.p_theta, 1.0);
        EXPECT_GT(row.mean, 0.0);
    }
}
