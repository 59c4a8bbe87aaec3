#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mcmc/channel/cir.hpp"
#include "mcmc/channel/distance_law.hpp"
#include "oracles.hpp"

using namespace mcmc::channel;

namespace {

EnvParams table1() { return EnvParams::table1(); }

// Written out independently of the library, in long double.
long double cir_reference(long double a, long double D1, long double r, long double tau) {
    const long double pi = 3.141592653589793238462643383279502884L;
    return a / std::sqrt(4.0L * pi * D1 * tau * tau * tau) * (1.0L - a / r) *
           std::exp(-(r - a) * (r - a) / (4.0L * D1 * tau));
}

// Random valid (env, r, tau) triples spanning several decades.
struct Sample {
    EnvParams env;
    double r;
    double tau;
};

Sample random_point(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Sample s;
    s.env.D_X = std::pow(10.0, -12.0 + 3.0 * u(g));
    s.env.D_Rx = u(g) < 0.5 ? 0.0 : std::pow(10.0, -14.0 + 3.0 * u(g));
    s.env.D_Tx = std::pow(10.0, -15.0 + 3.0 * u(g));
    s.env.a_rx = std::pow(10.0, -6.5 + u(g));
    s.env.a_tx = 1e-7;
    s.env.r0 = s.env.a_rx + s.env.a_tx + std::pow(10.0, -6.0 + 1.5 * u(g));
    s.tau = std::pow(10.0, -2.0 + 3.0 * u(g));
    // keep r within a few diffusion lengths so the values are not underflowed
    const double len = std::sqrt(4.0 * s.env.D1() * s.tau);
    s.r = s.env.a_rx * (1.0 + 1e-3) + 4.0 * len * u(g);
    return s;
}

}  // namespace

TEST(EnvParams, Validation) {
    EXPECT_NO_THROW(table1().validate());
    auto e = table1();
    e.r0 = 5e-7;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e = table1();
    e.D_X = 0.0;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e = table1();
    e.D_Tx = -1.0;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    EXPECT_DOUBLE_EQ(table1().D1(), 8e-11);
    EXPECT_DOUBLE_EQ(EnvParams::link_scenario().D2(), 1e-14 + 1e-11);
}

TEST(Cir, CausalAndBoundary) {
    const auto env = table1();
    EXPECT_EQ(cir(env, 1e-5, -1.0), 0.0);
    EXPECT_EQ(cir(env, 1e-5, 0.0), 0.0);
    EXPECT_EQ(cir(env, env.a_rx, 1.0), 0.0);
    EXPECT_THROW(cir(env, 0.5e-6, 1.0), std::domain_error);
}

TEST(Cir, ReferenceValue) {
    const auto env = table1();
    const double h = cir(env, 1e-5, 0.17);
    EXPECT_NEAR(h, 0.0914, 5e-5);
    EXPECT_LT(oracle::relative_error(h, static_cast<double>(cir_reference(1e-6L, 8e-11L, 1e-5L, 0.17L))), 1e-14);
}

TEST(Cir, DecaysInBothArguments) {
    const auto env = table1();
    EXPECT_LT(cir(env, 1e-5, 1e7), 1e-9);
    EXPECT_EQ(cir(env, 1.0, 1.0), 0.0);
    for (double tau = 1e-3; tau < 1e4; tau *= 1.7) EXPECT_GE(cir(env, 2e-5, tau), 0.0);
}

TEST(CirDerivative, MatchesFiniteDifferenceAtReferencePoint) {
    const auto env = table1();
    auto f = [&](double r) { return cir(env, r, 0.17); };
    EXPECT_LT(oracle::relative_error(cir_derivative_r(env, 1e-5, 0.17), oracle::central_difference(f, 1e-5, 1e-10)),
              1e-6);
}

TEST(CirDerivative, MatchesFiniteDifferenceOnRandomPoints) {
    auto g = oracle::rng(2024);
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto s = random_point(g);
        auto f = [&](double r) { return cir(s.env, r, s.tau); };
        const double h = 1e-4 * std::min(s.r - s.env.a_rx, std::sqrt(2.0 * s.env.D1() * s.tau));
        const double fd = oracle::derivative(f, s.r, h);
        const double an = cir_derivative_r(s.env, s.r, s.tau);
        const double scale = std::abs(cir(s.env, s.r, s.tau)) / std::sqrt(2.0 * s.env.D1() * s.tau);
        if (scale < 1e-250) continue;
        // relative to the natural size of the derivative, so zero crossings do not blow up
        EXPECT_LT(std::abs(an - fd) / std::max(std::abs(fd), scale), 1e-6) << k;
        ++checked;
    }
    EXPECT_GT(checked, 900);
}

TEST(CirDerivative, SignStructure) {
    const auto env = table1();
    for (double tau : {0.01, 0.17, 3.0, 100.0}) {
        const auto pk = cir_peak(env, tau);
        EXPECT_GT(cir_derivative_r(env, env.a_rx * (1.0 + 1e-9), tau), 0.0);
        int changes = 0;
        double prev = 1.0;
        for (double r = env.a_rx * 1.0001; r < pk.r_star * 50.0; r *= 1.001) {
            const double d = cir_derivative_r(env, r, tau);
            if (d == 0.0) continue;  // underflow far out
            if ((d > 0) != (prev > 0)) ++changes;
            prev = d;
        }
        EXPECT_EQ(changes, 1) << tau;
    }
}

TEST(CirPeak, ReportedMaximum) {
    const auto pk = cir_peak(table1(), 0.17);
    EXPECT_NEAR(pk.h_star, 0.29, 0.005);
    EXPECT_NEAR(cir_derivative_r(table1(), pk.r_star, 0.17) * pk.r_star / pk.h_star, 0.0, 1e-9);
}

TEST(CirPeak, IsMaximal) {
    auto g = oracle::rng(3);
    for (int k = 0; k < 200; ++k) {
        const auto s = random_point(g);
        const auto pk = cir_peak(s.env, s.tau);
        EXPECT_GT(pk.r_star, s.env.a_rx);
        EXPECT_LE(cir(s.env, pk.r_star + 1e-9, s.tau), pk.h_star);
        EXPECT_LE(cir(s.env, std::max(s.env.a_rx, pk.r_star - 1e-9), s.tau), pk.h_star);
    }
}

TEST(CirPeak, MatchesNewtonFromGridSeed) {
    auto g = oracle::rng(4);
    for (int k = 0; k < 200; ++k) {
        const auto s = random_point(g);
        const double a = s.env.a_rx;
        // grid seed on (a, a + 10 diffusion lengths), then Newton on dh/dr via finite differences
        double best = a, hbest = -1.0;
        const double len = std::sqrt(2.0 * s.env.D1() * s.tau) + a;
        for (int j = 1; j <= 2000; ++j) {
            const double r = a + 10.0 * len * j / 2000.0;
            const double h = cir(s.env, r, s.tau);
            if (h > hbest) {
                hbest = h;
                best = r;
            }
        }
        // Newton on the stationarity polynomial in long double
        long double x = best - a, c = 2.0L * s.env.D1() * s.tau * a;
        for (int it = 0; it < 100; ++it) x -= ((a + x) * x * x - c) / (x * (2.0L * a + 3.0L * x));
        EXPECT_LT(oracle::relative_error(cir_peak(s.env, s.tau).r_star, static_cast<double>(a + x)), 1e-12);
    }
}

TEST(AbsorptionProbability, Limits) {
    const auto env = table1();
    EXPECT_DOUBLE_EQ(absorption_probability(env, env.a_rx, 28.8), 1.0);
    EXPECT_LT(absorption_probability(env, 1.0, 28.8), 1e-300);
    EXPECT_THROW(absorption_probability(env, 1e-7, 28.8), std::domain_error);
}

TEST(AbsorptionProbability, EqualsIntegralOfCir) {
    const auto env = table1();
    auto f = [&](double tau) { return cir(env, 1e-5, tau); };
    EXPECT_NEAR(absorption_probability(env, 1e-5, 28.8), oracle::simpson(f, 0.0, 28.8, 400000), 1e-8);
    auto g = oracle::rng(8);
    for (int k = 0; k < 30; ++k) {
        const auto s = random_point(g);
        const double r = s.r + 1e-7;
        auto fk = [&](double tau) { return cir(s.env, r, tau); };
        EXPECT_NEAR(absorption_probability(s.env, r, s.tau), oracle::simpson(fk, 0.0, s.tau, 200000), 1e-8);
    }
}

TEST(AbsorptionProbability, Monotone) {
    const auto env = table1();
    double prev = 1.0;
    for (double r = 1.01e-6; r < 1e-3; r *= 1.05) {
        const double p = absorption_probability(env, r, 10.0);
        EXPECT_LT(p, prev);
        EXPECT_GT(absorption_probability(env, r, 11.0), p);
        prev = p;
        if (p == 0.0) break;
    }
}

TEST(AbsorptionProbabilityDerivative, NegativeAndMatchesFiniteDifference) {
    auto g = oracle::rng(9);
    for (int k = 0; k < 1000; ++k) {
        const auto s = random_point(g);
        const double r = s.r;
        const double d = absorption_probability_derivative(s.env, r, s.tau);
        EXPECT_LT(d, 0.0);
        auto f = [&](double x) { return absorption_probability(s.env, x, s.tau); };
        const double h = 1e-4 * std::min(r - s.env.a_rx, std::sqrt(s.env.D1() * s.tau));
        EXPECT_LT(oracle::relative_error(d, oracle::derivative(f, r, h)), 1e-6) << k;
    }
    const auto env = table1();
    EXPECT_THROW(absorption_probability_derivative(env, env.a_rx, 1.0), std::domain_error);
    EXPECT_GT(absorption_probability_derivative(env, 1e-2, 1.0), -1e-200);
}

TEST(DistanceLaw, DeterministicAtTimeZero) {
    const DistanceLaw law(table1(), 0.0);
    EXPECT_EQ(law.mean(), 1e-5);
    EXPECT_EQ(law.variance(), 0.0);
    EXPECT_EQ(law.cdf(0.99e-5), 0.0);
    EXPECT_EQ(law.cdf(1e-5), 1.0);
    auto e = table1();
    e.D_Tx = 0.0;
    EXPECT_EQ(DistanceLaw(e, 3600.0).variance(), 0.0);
}

TEST(DistanceLaw, SecondMomentIdentity) {
    auto g = oracle::rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        auto e = table1();
        e.r0 = 2e-6 + 5e-5 * u(g);
        e.D_Tx = std::pow(10.0, -15.0 + 4.0 * u(g));
        const double t = std::pow(10.0, 4.0 * u(g));
        const DistanceLaw law(e, t);
        const double hi = law.mean() + 12.0 * law.stddev();
        const double m2 = oracle::simpson([&](double r) { return r * r * law.pdf(r); }, 0.0, hi, 200000);
        EXPECT_LT(oracle::relative_error(m2, e.r0 * e.r0 + 6.0 * e.D2() * t), 1e-8);
        const double m1 = oracle::simpson([&](double r) { return r * law.pdf(r); }, 0.0, hi, 200000);
        EXPECT_LT(oracle::relative_error(law.mean(), m1), 1e-8);
        EXPECT_LT(oracle::relative_error(law.variance(), m2 - m1 * m1), 1e-5);
    }
}

TEST(DistanceLaw, PdfNormalisedAndConsistentWithCdf) {
    auto g = oracle::rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double t : {1.0, 36.0, 360.0, 3600.0, 86400.0}) {
        const DistanceLaw law(table1(), t);
        const double hi = law.mean() + 12.0 * law.stddev();
        EXPECT_NEAR(oracle::simpson([&](double r) { return law.pdf(r); }, 0.0, hi, 200000), 1.0, 1e-6);
        for (int k = 0; k < 10; ++k) {
            double x0 = hi * u(g), x1 = hi * u(g);
            if (x0 > x1) std::swap(x0, x1);
            EXPECT_NEAR(oracle::simpson([&](double r) { return law.pdf(r); }, x0, x1, 20000),
                        law.cdf(x1) - law.cdf(x0), 1e-8);
        }
        double prev = 0.0;
        for (double r = 0.0; r < hi; r += hi / 500.0) {
            EXPECT_GE(law.cdf(r), prev);
            prev = law.cdf(r);
        }
        EXPECT_EQ(law.cdf(0.0), 0.0);
        EXPECT_EQ(law.cdf(std::numeric_limits<double>::infinity()), 1.0);
        EXPECT_LT(law.pdf(1e-12), 1e-3);
    }
}

TEST(DistanceLaw, PdfIsFiniteForTinySpread) {
    // sinh-form would overflow here
    const DistanceLaw law(table1(), 1e-6);
    EXPECT_TRUE(std::isfinite(law.pdf(1e-5)));
    EXPECT_GT(law.pdf(1e-5), 0.0);
    EXPECT_NEAR(law.mean(), 1e-5, 1e-12);
}
