#pragma once
//
// Controlled-release design: the fewest molecules such that, at every
// constraint instant, E{g(t)} - beta * (Minkowski bound on the std of g(t))
// reaches the target theta(t); plus the performance metric P_theta(t) and
// its Chebyshev lower bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmc/channel/env_params.hpp"
#include "mcmc/error.hpp"
#include "mcmc/numerics/ipm.hpp"
#include "mcmc/numerics/lp.hpp"
#include "mcmc/sim/parallel.hpp"
#include "mcmc/stats/cir_statistics.hpp"

namespace mcmc::design {

using channel::EnvParams;

/// Where the N constraint instants go.
enum class ConstraintGrid {
    per_interval,  ///< N instants in every release interval: t = j * T_b / N
    window,        ///< N instants over the whole window: t = n * T_Rx / N
};

struct DrugDesignProblem {
    EnvParams env = EnvParams::table1();
    double T = 86400.0;     ///< release window [s]
    double T_Rx = 86400.0;  ///< constraint window [s]
    std::int64_t I = 3000;  ///< releases, at t_i = i * T / I
    std::int64_t N = 5;
    double beta = 0.0;
    /// Target absorption rate [1/s] at the constraint instants: one value
    /// (constant target) or one per instant.
    std::vector<double> theta{1.0};
    ConstraintGrid grid = ConstraintGrid::per_interval;

    double release_interval() const { return T / static_cast<double>(I); }

    std::vector<double> release_times() const {
        std::vector<double> t(static_cast<std::size_t>(I));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * release_interval();
        return t;
    }

    double constraint_spacing() const {
        return grid == ConstraintGrid::per_interval ? release_interval() / static_cast<double>(N)
                                                    : T_Rx / static_cast<double>(N);
    }

    std::vector<double> constraint_times() const {
        const double dt = constraint_spacing();
        const auto count = static_cast<std::int64_t>(std::floor(T_Rx / dt * (1.0 + 1e-12)));
        std::vector<double> t(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
        for (std::size_t n = 0; n < t.size(); ++n) t[n] = static_cast<double>(n + 1) * dt;
        return t;
    }

    double theta_at(std::size_t n) const { return theta.size() == 1 ? theta.front() : theta.at(n); }

    /// Piecewise-constant target between instants: theta(t) = theta(t_n) on (t_{n-1}, t_n].
    double theta_at_time(double t) const {
        if (theta.size() == 1) return theta.front();
        const double dt = constraint_spacing();
        const auto n = static_cast<std::int64_t>(std::ceil(t / dt - 1e-9)) - 1;
        return theta[static_cast<std::size_t>(std::clamp<std::int64_t>(n, 0, static_cast<std::int64_t>(theta.size()) - 1))];
    }

    void validate() const {
        env.validate();
        if (I < 1) throw std::invalid_argument("DrugDesignProblem: I must be >= 1");
        if (N < 1) throw std::invalid_argument("DrugDesignProblem: N must be >= 1");
        if (!(T > 0.0) || !(T_Rx > 0.0)) throw std::invalid_argument("DrugDesignProblem: T and T_Rx must be > 0");
        if (!(beta >= 0.0)) throw std::invalid_argument("DrugDesignProblem: beta must be >= 0");
        if (theta.empty()) throw std::invalid_argument("DrugDesignProblem: theta is empty");
        for (double v : theta) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("DrugDesignProblem: theta must be >= 0");
        }
        const auto instants = constraint_times().size();
        if (instants == 0) throw std::invalid_argument("DrugDesignProblem: no constraint instants in (0, T_Rx]");
        if (theta.size() != 1 && theta.size() != instants) {
            throw std::invalid_argument("DrugDesignProblem: theta needs 1 or " + std::to_string(instants) + " values");
        }
    }

    /// The drug-delivery scenario; paper scale has I = 3000 (T_b = 28.8 s),
    /// desk scale I = 300.
    static DrugDesignProblem table1(bool paper_scale = true) {
        DrugDesignProblem p;
        p.I = paper_scale ? 3000 : 300;
        return p;
    }
};

struct ReleaseSchedule {
    std::vector<double> times;
    std::vector<double> alphas;

    double total() const {
        double s = 0.0;
        for (double a : alphas) s += a;
        return s;
    }
};

struct DrugDesignResult {
    bool feasible = false;
    std::vector<double> release_times;
    std::vector<double> alphas;  ///< integers after rounding
    double total_A = 0.0;
    double lp_objective_real = 0.0;
    /// The LP optimum is backed by a dual solution.
    bool certified = false;
    /// min over constraints of (LHS - theta), before and after rounding
    double min_slack_real = 0.0;
    double min_slack_rounded = 0.0;

    ReleaseSchedule schedule() const { return {release_times, alphas}; }
};

/// Same schedule with every release set to alpha.
inline ReleaseSchedule constant_schedule(const DrugDesignProblem& p, double alpha) {
    return {p.release_times(), std::vector<double>(static_cast<std::size_t>(p.I), alpha)};
}

/// m(t_i, t_n - t_i) and sigma(t_i, t_n - t_i) for every constraint instant n
/// (rows) and release i (columns); zero where t_i >= t_n. Row n only involves
/// the first support[n] releases.
struct CoefficientTables {
    numerics::DenseMatrix mean;
    numerics::DenseMatrix stddev;  ///< empty when not requested
    std::vector<std::size_t> support;
    std::vector<double> release_times;
    std::vector<double> instants;
};

inline CoefficientTables build_coefficients(const DrugDesignProblem& p, bool with_sigma) {
    p.validate();
    const stats::CirStatistics cs(p.env);
    CoefficientTables c;
    c.release_times = p.release_times();
    c.instants = p.constraint_times();
    const std::size_t rows = c.instants.size(), cols = c.release_times.size();
    c.mean = numerics::DenseMatrix(rows, cols, 0.0);
    if (with_sigma) c.stddev = numerics::DenseMatrix(rows, cols, 0.0);
    c.support.resize(rows);
    for (std::size_t n = 0; n < rows; ++n) {
        const auto it = std::lower_bound(c.release_times.begin(), c.release_times.end(), c.instants[n]);
        c.support[n] = static_cast<std::size_t>(it - c.release_times.begin());
    }
    sim::parallel_for(rows, [&](std::size_t n) {
        for (std::size_t i = 0; i < c.support[n]; ++i) {
            const double ti = c.release_times[i];
            const double tau = c.instants[n] - ti;
            if (with_sigma) {
                const auto ms = cs.moments_fast(ti, tau);
                c.mean(n, i) = ms.mean;
                c.stddev(n, i) = ms.stddev;
            } else {
                c.mean(n, i) = cs.mean(ti, tau);
            }
        }
    });
    return c;
}

/// m - beta * sigma, entrywise.
inline numerics::DenseMatrix constraint_matrix(const CoefficientTables& c, double beta) {
    numerics::DenseMatrix a = c.mean;
    if (beta != 0.0) {
        if (c.stddev.rows() != a.rows()) throw std::logic_error("constraint_matrix: sigma table missing");
        for (std::size_t n = 0; n < a.rows(); ++n) {
            for (std::size_t i = 0; i < c.support[n]; ++i) a(n, i) -= beta * c.stddev(n, i);
        }
    }
    return a;
}

/// Dense matrix with entry (n, i) = m(t_i, t_n - t_i) - beta * sigma(t_i, t_n - t_i)
/// for t_i < t_n, else 0.
inline numerics::DenseMatrix build_constraint_matrix(const DrugDesignProblem& p) {
    return constraint_matrix(build_coefficients(p, p.beta > 0.0), p.beta);
}

namespace detail {

inline std::vector<double> row_values(const numerics::DenseMatrix& a, const std::vector<std::size_t>& support,
                                      const std::vector<double>& x) {
    std::vector<double> v(a.rows(), 0.0);
    for (std::size_t n = 0; n < a.rows(); ++n) {
        for (std::size_t i = 0; i < support[n]; ++i) v[n] += a(n, i) * x[i];
    }
    return v;
}

inline DrugDesignResult finish_result(const DrugDesignProblem& p, const CoefficientTables& c,
                                      const numerics::DenseMatrix& a, const std::vector<double>& x,
                                      double objective, bool certified) {
    DrugDesignResult r;
    r.feasible = true;
    r.certified = certified;
    r.release_times = c.release_times;
    r.lp_objective_real = objective;
    r.alphas.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.alphas[i] = std::nearbyint(std::max(0.0, x[i]));
        r.total_A += r.alphas[i];
    }
    const auto real = row_values(a, c.support, x);
    const auto rounded = row_values(a, c.support, r.alphas);
    r.min_slack_real = r.min_slack_rounded = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < a.rows(); ++n) {
        r.min_slack_real = std::min(r.min_slack_real, real[n] - p.theta_at(n));
        r.min_slack_rounded = std::min(r.min_slack_rounded, rounded[n] - p.theta_at(n));
    }
    return r;
}

inline DrugDesignResult infeasible_result(const CoefficientTables& c) {
    DrugDesignResult r;
    r.release_times = c.release_times;
    return r;
}

// Interior point on a growing subset of rows until no row is violated.
inline numerics::IpmResult solve_cutting_plane(const numerics::DenseMatrix& a, const std::vector<std::size_t>& support,
                                               const std::vector<double>& rhs, std::vector<std::size_t> active) {
    const std::vector<double> cost(a.cols(), 1.0);
    std::vector<char> in(a.rows(), 0);
    for (std::size_t r : active) in[r] = 1;
    for (int round = 0; round < 50; ++round) {
        auto res = numerics::solve_lp_interior(cost, a, rhs, active, support);
        if (res.status != numerics::LpStatus::optimal) return res;
        const auto v = row_values(a, support, res.x);
        std::size_t added = 0;
        for (std::size_t n = 0; n < a.rows(); ++n) {
            if (!in[n] && v[n] < rhs[n] - 1e-9 * std::max(1.0, std::abs(rhs[n]))) {
                in[n] = 1;
                active.push_back(n);
                ++added;
            }
        }
        if (added == 0) return res;
    }
    throw non_convergence("design_release: cutting-plane loop did not settle");
}

}  // namespace detail

/// Solves the design for several beta values sharing one coefficient table;
/// p.beta is ignored. Infeasible designs come back with feasible == false.
///
/// Per-interval grids are block lower-triangular: forward substitution gives
/// the optimum whenever its dual certificate holds. Otherwise (negative
/// coefficients late in the window, or window grids) the LP goes to the
/// interior-point solver, restricted to a row subset that grows until no
/// constraint is violated.
inline std::vector<DrugDesignResult> design_release_sweep(const DrugDesignProblem& p,
                                                          const std::vector<double>& betas) {
    DrugDesignProblem q = p;
    for (double b : betas) {
        q.beta = b;
        q.validate();
    }
    const bool need_sigma = std::any_of(betas.begin(), betas.end(), [](double b) { return b > 0.0; });
    const auto tables = build_coefficients(p, need_sigma);
    const std::size_t blocks = tables.release_times.size();
    std::vector<double> rhs(tables.instants.size());
    for (std::size_t n = 0; n < rhs.size(); ++n) rhs[n] = p.theta_at(n);

    std::vector<DrugDesignResult> results;
    for (double beta : betas) {
        const auto a = constraint_matrix(tables, beta);
        if (p.grid == ConstraintGrid::per_interval) {
            // rows grouped by their latest release
            std::vector<std::vector<std::size_t>> by_block(blocks);
            for (std::size_t n = 0; n < a.rows(); ++n) by_block[tables.support[n] - 1].push_back(n);
            const std::vector<double> cost(blocks, 1.0);
            const auto st = numerics::solve_staircase_lp(blocks, cost, [&](std::size_t k, std::span<const double>) {
                std::vector<numerics::StaircaseRow> rows;
                for (std::size_t n : by_block[k]) {
                    numerics::StaircaseRow r;
                    r.coeffs.assign(a.row(n).begin(), a.row(n).begin() + static_cast<std::ptrdiff_t>(k + 1));
                    r.rhs = rhs[n];
                    rows.push_back(std::move(r));
                }
                return rows;
            });
            if (st.status == numerics::LpStatus::infeasible) {
                results.push_back(detail::infeasible_result(tables));
                continue;
            }
            if (st.status == numerics::LpStatus::optimal && st.certified) {
                results.push_back(detail::finish_result(p, tables, a, st.x, st.objective, true));
                continue;
            }
        }
        // Start from the last instant of every block and every row in which
        // some coefficient is negative.
        std::vector<std::size_t> active;
        for (std::size_t n = 0; n < a.rows(); ++n) {
            const bool last = n + 1 == a.rows() || tables.support[n + 1] != tables.support[n];
            bool negative = false;
            for (std::size_t i = 0; i < tables.support[n] && !negative; ++i) negative = a(n, i) < 0.0;
            if (last || negative || p.grid == ConstraintGrid::window) active.push_back(n);
        }
        const auto res = detail::solve_cutting_plane(a, tables.support, rhs, active);
        if (res.status == numerics::LpStatus::infeasible) {
            results.push_back(detail::infeasible_result(tables));
        } else if (res.status == numerics::LpStatus::optimal) {
            results.push_back(detail::finish_result(p, tables, a, res.x, res.objective, true));
        } else {
            throw non_convergence("design_release: interior-point solver did not converge");
        }
    }
    return results;
}

inline DrugDesignResult design_release(const DrugDesignProblem& p) {
    return design_release_sweep(p, {p.beta}).front();
}

/// Slack of every constraint (LHS - theta) for a given schedule.
inline std::vector<double> constraint_slacks(const DrugDesignProblem& p, const std::vector<double>& alphas) {
    const auto c = build_coefficients(p, p.beta > 0.0);
    const auto a = constraint_matrix(c, p.beta);
    if (alphas.size() != a.cols()) throw std::invalid_argument("constraint_slacks: alphas size");
    auto s = detail::row_values(a, c.support, alphas);
    for (std::size_t n = 0; n < s.size(); ++n) s[n] -= p.theta_at(n);
    return s;
}

struct RateMoments {
    double mean = 0.0;     ///< E{g(t)} [1/s]
    double v_upper = 0.0;  ///< sum_i alpha_i sigma_i >= std of g(t)
};

inline RateMoments absorption_rate_moments(const stats::CirStatistics& cs, const ReleaseSchedule& s, double t) {
    if (s.times.size() != s.alphas.size()) throw std::invalid_argument("absorption_rate_moments: schedule sizes differ");
    RateMoments out;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double tau = t - s.times[i];
        if (!(tau > 0.0) || s.alphas[i] == 0.0) continue;
        const auto ms = cs.moments_fast(s.times[i], tau);
        out.mean += s.alphas[i] * ms.mean;
        out.v_upper += s.alphas[i] * ms.stddev;
    }
    return out;
}

inline RateMoments absorption_rate_moments(const EnvParams& env, const ReleaseSchedule& s, double t) {
    return absorption_rate_moments(stats::CirStatistics(env), s, t);
}

/// P_theta(t) = Pr{g(t) >= theta}, with the releases treated as independent.
///
/// All releases share one grid of `bins` cells on [0, theta - c]; only that
/// range matters because every term is non-negative. Each term's law is
/// discretized by CDF differences onto the grid nodes (mass of
/// [(j - 1/2) d, (j + 1/2) d) to node j d) and the masses are convolved,
/// dropping anything beyond the grid. Terms whose std is below half a cell are
/// replaced by their mean, which is accumulated in the shift c.
inline double exceedance_probability(const stats::CirStatistics& cs, const ReleaseSchedule& s, double theta,
                                     double t, std::size_t bins = 4096) {
    if (s.times.size() != s.alphas.size()) throw std::invalid_argument("exceedance_probability: schedule sizes differ");
    if (bins < 2) throw std::invalid_argument("exceedance_probability: bins must be >= 2");
    if (!(theta > 0.0)) return 1.0;

    struct Term {
        double t_i, tau, alpha;
    };
    std::vector<Term> wide;
    double shift = 0.0;
    const double narrow = 0.5 * theta / static_cast<double>(bins);
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double tau = t - s.times[i];
        const double alpha = s.alphas[i];
        if (!(tau > 0.0) || alpha == 0.0) continue;
        const auto ms = cs.moments_fast(s.times[i], tau);
        if (alpha * ms.stddev <= narrow) {
            shift += alpha * ms.mean;
        } else {
            wide.push_back({s.times[i], tau, alpha});
        }
    }
    const double span = theta - shift;
    if (!(span > 0.0)) return 1.0;
    const double d = span / static_cast<double>(bins);

    // per-term masses on nodes 0..bins (index bins = the node at theta)
    std::vector<std::vector<double>> masses(wide.size());
    sim::parallel_for(wide.size(), [&](std::size_t k) {
        const auto& w = wide[k];
        const double top = w.alpha * cs.peak(w.tau).h_star;
        const auto last = static_cast<std::size_t>(std::min<double>(static_cast<double>(bins), std::ceil(top / d + 0.5)));
        auto& m = masses[k];
        m.assign(last + 1, 0.0);
        double prev = 0.0;
        for (std::size_t j = 0; j <= last; ++j) {
            const double edge = (static_cast<double>(j) + 0.5) * d;
            const double f = cs.cdf(w.t_i, w.tau, edge / w.alpha);
            m[j] = std::max(0.0, f - prev);
            prev = std::max(prev, f);
        }
    });

    std::vector<double> acc(bins + 1, 0.0);
    acc[0] = 1.0;
    std::vector<double> next(bins + 1);
    for (const auto& m : masses) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t j = 0; j < m.size(); ++j) {
            const double mj = m[j];
            if (mj < 1e-300) continue;
            for (std::size_t a = 0; a + j <= bins; ++a) next[a + j] += acc[a] * mj;
        }
        acc.swap(next);
    }
    // Pr{g < theta}: the node at theta counts half
    double below = 0.5 * acc[bins];
    for (std::size_t j = 0; j < bins; ++j) below += acc[j];
    return std::clamp(1.0 - below, 0.0, 1.0);
}

inline double exceedance_probability(const EnvParams& env, const ReleaseSchedule& s, double theta, double t,
                                     std::size_t bins = 4096) {
    return exceedance_probability(stats::CirStatistics(env), s, theta, t, bins);
}

/// Chebyshev: if E{g} - beta * std{g} >= theta then P_theta >= 1 - 1/beta^2.
/// Only informative for beta > 1.
inline double chebyshev_lower_bound(double beta) {
    if (!(beta > 1.0)) return 0.0;
    return 1.0 - 1.0 / (beta * beta);
}

struct EvaluationRow {
    double t = 0.0;
    double theta = 0.0;
    double mean = 0.0;
    double v_upper = 0.0;
    double p_theta = 0.0;
    double chebyshev = 0.0;
};

/// E{g}, Minkowski bound and P_theta on a time grid.
inline std::vector<EvaluationRow> evaluate_schedule(const DrugDesignProblem& p, const ReleaseSchedule& s,
                                                    const std::vector<double>& times, std::size_t bins = 4096) {
    p.validate();
    const stats::CirStatistics cs(p.env);
    std::vector<EvaluationRow> out(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto& r = out[k];
        r.t = times[k];
        r.theta = p.theta_at_time(times[k]);
        const auto mom = absorption_rate_moments(cs, s, r.t);
        r.mean = mom.mean;
        r.v_upper = mom.v_upper;
        r.p_theta = exceedance_probability(cs, s, r.theta, r.t, bins);
        r.chebyshev = chebyshev_lower_bound(p.beta);
    }
    return out;
}

}  // namespace mcmc::design
