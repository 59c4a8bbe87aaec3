#pragma once
//
// The CLI subcommands as functions from a configuration to a set of output
// files. Nothing touches the file system here except reading an input
// profile; the caller commits the OutputSet once the command has succeeded.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mcmc/channel/env_params.hpp"
#include "mcmc/design/drug_delivery.hpp"
#include "mcmc/design/mc_link.hpp"
#include "mcmc/error.hpp"
#include "mcmc/io/config.hpp"
#include "mcmc/io/csv.hpp"
#include "mcmc/io/output.hpp"
#include "mcmc/sim/particle_sim.hpp"
#include "mcmc/stats/cir_statistics.hpp"

namespace mcmc::io {

using channel::EnvParams;

enum class Scale { desk, paper };

struct RunOptions {
    std::uint64_t seed = 0;
    Scale scale = Scale::desk;
};

struct CommandResult {
    OutputSet files;
    std::vector<std::string> report;  ///< `key=value` summary lines
    bool infeasible = false;          ///< some design had no solution
};

namespace detail {

inline const std::set<std::string> env_keys{"D_Tx_m2_per_s", "D_Rx_m2_per_s", "D_X_m2_per_s",
                                            "a_tx_m",        "a_rx_m",        "r0_m"};

inline std::set<std::string> with_env(std::initializer_list<std::string> keys) {
    std::set<std::string> out(keys);
    out.insert(env_keys.begin(), env_keys.end());
    return out;
}

inline std::string kv(const std::string& key, double v) { return key + "=" + CsvTable::format(v); }

// Domain validation errors raised while building objects from config values
// are configuration errors as far as the user is concerned.
template <class F>
auto as_config_error(const Config& c, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw config_error(c.origin() + ": " + e.what());
    } catch (const std::domain_error& e) {
        throw config_error(c.origin() + ": " + e.what());
    }
}

inline void require_positive(const Config& c, const std::string& key, const std::vector<double>& v,
                             bool allow_zero = false) {
    for (double x : v) {
        if (!(allow_zero ? x >= 0.0 : x > 0.0)) c.fail(key, allow_zero ? "values must be >= 0" : "values must be > 0");
    }
}

}  // namespace detail

/// Mean and variance of the CIR over (t, tau), and the PDF/CDF of h over an
/// h-grid for the delays in dist_tau_s.
inline CommandResult cmd_channel_stats(const Config& c, const RunOptions&) {
    c.reject_unknown(detail::with_env({"t_s", "tau_s", "dist_tau_s", "h_points"}));
    const auto env = c.env(EnvParams::table1());
    const auto ts = c.nonempty_list("t_s");
    const auto taus = c.nonempty_list("tau_s");
    const auto dist_taus = c.list("dist_tau_s", {});
    const auto h_points = c.integer("h_points", 200);
    detail::require_positive(c, "t_s", ts, true);
    detail::require_positive(c, "tau_s", taus);
    detail::require_positive(c, "dist_tau_s", dist_taus);
    if (h_points < 1 || h_points > 1000000) c.fail("h_points", "must be in [1, 1e6]");

    const stats::CirStatistics cs(env);
    CommandResult out;
    CsvTable moments({"t_s", "tau_s", "mean_per_s", "var_per_s2"});
    for (double t : ts) {
        for (double tau : taus) moments.add({t, tau, cs.mean(t, tau), cs.variance(t, tau)});
    }
    out.files.add("channel_moments.csv", moments);
    if (!dist_taus.empty()) {
        CsvTable dist({"t_s", "tau_s", "h_per_s", "pdf", "cdf"});
        CsvTable support({"tau_s", "h_star_per_s", "r_star_m"});
        for (double tau : dist_taus) {
            const auto pk = cs.peak(tau);
            support.add({tau, pk.h_star, pk.r_star});
            out.report.push_back(detail::kv("h_star_per_s(tau_s=" + CsvTable::format(tau) + ")", pk.h_star));
            for (double t : ts) {
                // cell midpoints: the density is singular at the support end
                for (std::int64_t k = 0; k < h_points; ++k) {
                    const double h = pk.h_star * (static_cast<double>(k) + 0.5) / static_cast<double>(h_points);
                    dist.add({t, tau, h, cs.pdf(t, tau, h), cs.cdf(t, tau, h)});
                }
            }
        }
        out.files.add("channel_distribution.csv", dist);
        out.files.add("channel_support.csv", support);
    }
    return out;
}

/// Monte Carlo CIR moments next to the analytic mean.
inline CommandResult cmd_simulate(const Config& c, const RunOptions& o) {
    c.reject_unknown(detail::with_env({"t_s", "tau_s", "realizations", "step_s", "mode"}));
    const auto env = c.env(EnvParams::table1());
    const auto ts = c.nonempty_list("t_s");
    const auto taus = c.nonempty_list("tau_s");
    detail::require_positive(c, "t_s", ts, true);
    detail::require_positive(c, "tau_s", taus);
    sim::SimConfig sc;
    sc.realizations = c.integer("realizations", o.scale == Scale::paper ? 100000 : 10000);
    sc.step = c.positive("step_s", 1.0);
    sc.mode = c.choice("mode", {"gaussian", "particle"}, "gaussian") == "particle" ? sim::SimMode::particle
                                                                                   : sim::SimMode::gaussian;
    sc.seed = o.seed;
    sc.horizon = *std::max_element(ts.begin(), ts.end());
    if (!(sc.horizon > 0.0)) sc.horizon = 1.0;
    detail::as_config_error(c, [&] { sc.validate(); return 0; });

    const stats::CirStatistics cs(env);
    CommandResult out;
    CsvTable table({"t_s", "tau_s", "mean_per_s", "var_per_s2", "std_error_per_s", "analytic_mean_per_s"});
    for (double t : ts) {
        const auto mc = sim::monte_carlo_cir_stats(env, sc, t, taus);
        for (const auto& s : mc.per_tau) table.add({t, s.tau, s.mean, s.variance, s.std_error, cs.mean(t, s.tau)});
    }
    out.files.add("mc_moments.csv", table);
    return out;
}

namespace detail {

inline const std::set<std::string> drug_keys{"T_s", "T_Rx_s", "I", "N", "beta", "theta_per_s", "grid"};

inline design::DrugDesignProblem drug_problem(const Config& c, const RunOptions& o) {
    auto p = design::DrugDesignProblem::table1(o.scale == Scale::paper);
    p.env = c.env(EnvParams::table1());
    p.T = c.positive("T_s", p.T);
    p.T_Rx = c.positive("T_Rx_s", p.T);
    p.I = c.integer("I", p.I);
    p.N = c.integer("N", p.N);
    p.theta = c.list("theta_per_s", p.theta);
    p.grid = c.choice("grid", {"per_interval", "window"}, "per_interval") == "window"
                 ? design::ConstraintGrid::window
                 : design::ConstraintGrid::per_interval;
    as_config_error(c, [&] { p.validate(); return 0; });
    return p;
}

}  // namespace detail

/// Optimal release profile for one or more beta values.
inline CommandResult cmd_drug_design(const Config& c, const RunOptions& o) {
    auto known = detail::with_env({});
    known.insert(detail::drug_keys.begin(), detail::drug_keys.end());
    c.reject_unknown(known);
    const auto p = detail::drug_problem(c, o);
    const auto betas = c.list("beta", {0.0});
    if (betas.empty()) c.fail("beta", "must not be empty");
    detail::require_positive(c, "beta", betas, true);

    const auto results = design::design_release_sweep(p, betas);
    CommandResult out;
    CsvTable profile({"beta", "i", "t_s", "alpha"});
    CsvTable summary({"beta", "feasible", "certified", "total_A", "lp_objective", "min_slack_real",
                      "min_slack_rounded"});
    for (std::size_t b = 0; b < betas.size(); ++b) {
        const auto& r = results[b];
        summary.add({betas[b], static_cast<long long>(r.feasible), static_cast<long long>(r.certified), r.total_A,
                     r.lp_objective_real, r.feasible ? r.min_slack_real : 0.0,
                     r.feasible ? r.min_slack_rounded : 0.0});
        out.report.push_back("beta=" + CsvTable::format(betas[b]) + " feasible=" + (r.feasible ? "1" : "0") +
                             " total_A=" + CsvTable::format(r.total_A));
        if (!r.feasible) {
            out.infeasible = true;
            continue;
        }
        for (std::size_t i = 0; i < r.alphas.size(); ++i) {
            profile.add({betas[b], static_cast<long long>(i + 1), r.release_times[i], r.alphas[i]});
        }
    }
    out.files.add("release_profile.csv", profile);
    out.files.add("design_summary.csv", summary);
    return out;
}

/// Moments, Minkowski bound and P_theta of a release profile over a time
/// grid; optionally a Monte Carlo estimate of P_theta next to the
/// convolution value.
inline CommandResult cmd_drug_eval(const Config& c, const RunOptions& o) {
    auto known = detail::with_env({"profile_csv", "profile_beta", "alpha_constant", "eval_t_s", "bins",
                                   "mc_realizations"});
    known.insert(detail::drug_keys.begin(), detail::drug_keys.end());
    c.reject_unknown(known);
    auto p = detail::drug_problem(c, o);
    p.beta = c.positive("beta", 0.0, true);
    const auto times = c.nonempty_list("eval_t_s");
    detail::require_positive(c, "eval_t_s", times, true);
    const auto bins = c.integer("bins", 4096);
    if (bins < 2 || bins > (1 << 22)) c.fail("bins", "must be in [2, 4194304]");
    const auto mc_n = c.integer("mc_realizations", 0);
    if (mc_n < 0) c.fail("mc_realizations", "must be >= 0");

    design::ReleaseSchedule s;
    if (c.has("profile_csv") == c.has("alpha_constant")) {
        throw config_error(c.origin() + ": give exactly one of `profile_csv` and `alpha_constant`");
    }
    if (c.has("alpha_constant")) {
        s = design::constant_schedule(p, c.positive("alpha_constant", 0.0, true));
    } else {
        std::filesystem::path path = c.word("profile_csv");
        if (path.is_relative()) path = std::filesystem::path(c.origin()).parent_path() / path;
        const auto cols = detail::as_config_error(c, [&] { return read_csv(path.string()); });
        const auto& t = detail::as_config_error(c, [&]() -> const std::vector<double>& { return cols.column("t_s"); });
        const auto& a = detail::as_config_error(c, [&]() -> const std::vector<double>& { return cols.column("alpha"); });
        const bool pick = cols.has("beta");
        const double want = c.number("profile_beta", pick && !cols.column("beta").empty() ? cols.column("beta")[0] : 0.0);
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (pick && cols.column("beta")[k] != want) continue;
            s.times.push_back(t[k]);
            s.alphas.push_back(a[k]);
        }
        if (s.times.empty()) c.fail("profile_csv", "has no rows for the selected beta");
        if (!std::is_sorted(s.times.begin(), s.times.end())) c.fail("profile_csv", "release times must be sorted");
    }

    const auto rows = design::evaluate_schedule(p, s, times, static_cast<std::size_t>(bins));
    std::vector<std::string> header{"t_s", "theta_per_s", "mean_per_s", "v_upper_per_s", "p_theta", "chebyshev_bound"};
    sim::MonteCarloAbsorption mc;
    if (mc_n > 0) {
        header.insert(header.end(), {"p_theta_mc", "p_theta_mc_se"});
        sim::SimConfig sc;
        sc.realizations = mc_n;
        sc.seed = o.seed;
        sc.horizon = *std::max_element(times.begin(), times.end()) + 1.0;
        sc.step = sc.horizon;
        sc.mode = sim::SimMode::gaussian;
        std::vector<double> thetas;
        for (const auto& r : rows) thetas.push_back(r.theta);
        mc = sim::monte_carlo_absorption(p.env, sc, s.times, s.alphas, times, thetas);
    }
    CsvTable table(header);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        std::vector<CsvTable::Cell> row{r.t, r.theta, r.mean, r.v_upper, r.p_theta, r.chebyshev};
        if (mc_n > 0) {
            row.push_back(mc.estimates[k].p_theta);
            row.push_back(mc.estimates[k].p_theta_se);
        }
        table.add(std::move(row));
    }
    CommandResult out;
    out.files.add("evaluation.csv", table);
    double worst = 1.0;
    for (const auto& r : rows) worst = std::min(worst, r.p_theta);
    out.report.push_back(detail::kv("min_p_theta", worst));
    return out;
}

namespace detail {

inline const std::set<std::string> link_keys{"I", "T_b_s", "eta", "A", "psi", "P", "horizon_s"};

inline design::McLinkConfig link_config(const Config& c) {
    design::McLinkConfig l;
    l.env = c.env(EnvParams::link_scenario());
    l.I = c.integer("I", l.I);
    l.T_b = c.positive("T_b_s", l.T_b);
    l.eta = c.positive("eta", l.eta, true);
    l.psi = c.number("psi", l.psi);
    l.P = c.number("P", l.P);
    l.horizon = c.positive("horizon_s", l.horizon);
    return l;
}

inline std::vector<design::McLinkConfig> link_sweep(const Config& c) {
    const auto base = link_config(c);
    const auto budgets = c.list("A", {base.A});
    if (budgets.empty()) c.fail("A", "must not be empty");
    std::vector<design::McLinkConfig> out;
    for (double a : budgets) {
        auto l = base;
        l.A = a;
        as_config_error(c, [&] { l.validate(); return 0; });
        out.push_back(l);
    }
    return out;
}

}  // namespace detail

/// Min-max threshold for uniform release, per budget A.
inline CommandResult cmd_mc_threshold(const Config& c, const RunOptions&) {
    auto known = detail::with_env({});
    known.insert(detail::link_keys.begin(), detail::link_keys.end());
    c.reject_unknown(known);
    CommandResult out;
    CsvTable th({"A", "xi", "max_ber", "xi_lo", "xi_hi"});
    CsvTable bers({"A", "bit_index", "alpha", "ber"});
    for (const auto& l : detail::link_sweep(c)) {
        const design::LinkModel m(l);
        const auto r = design::optimize_threshold_uniform(m);
        th.add({l.A, r.xi, r.max_ber, r.lo, r.hi});
        const double alpha = l.A / static_cast<double>(l.I);
        for (std::size_t i = 0; i < m.bits(); ++i) {
            bers.add({l.A, static_cast<long long>(i + 1), alpha, m.ber(i, r.xi, alpha)});
        }
        out.report.push_back("A=" + CsvTable::format(l.A) + " " + detail::kv("xi", r.xi) + " " +
                             detail::kv("max_ber", r.max_ber));
    }
    out.files.add("threshold.csv", th);
    out.files.add("uniform_ber.csv", bers);
    return out;
}

/// Min-max release profile at a fixed threshold (given as `xi`, otherwise
/// the uniform-release optimum), per budget A.
inline CommandResult cmd_mc_release(const Config& c, const RunOptions&) {
    auto known = detail::with_env({"xi"});
    known.insert(detail::link_keys.begin(), detail::link_keys.end());
    c.reject_unknown(known);
    CommandResult out;
    CsvTable prof({"A", "bit_index", "alpha", "ber"});
    CsvTable summary({"A", "xi", "max_ber", "uniform_max_ber", "level"});
    for (const auto& l : detail::link_sweep(c)) {
        const design::LinkModel m(l);
        const auto th = design::optimize_threshold_uniform(m);
        const double xi = c.number("xi", th.xi);
        if (!(xi > l.eta)) c.fail("xi", "must exceed eta");
        const auto r = design::optimize_release(m, xi);
        const auto uniform = m.ber(xi, std::vector<double>(m.bits(), l.A / static_cast<double>(l.I)));
        const double uniform_max = *std::max_element(uniform.begin(), uniform.end());
        for (std::size_t i = 0; i < m.bits(); ++i) {
            prof.add({l.A, static_cast<long long>(i + 1), r.alphas[i], r.per_bit_ber[i]});
        }
        summary.add({l.A, xi, r.max_ber, uniform_max, r.level});
        out.report.push_back("A=" + CsvTable::format(l.A) + " " + detail::kv("xi", xi) + " " +
                             detail::kv("max_ber", r.max_ber));
    }
    out.files.add("release.csv", prof);
    out.files.add("release_summary.csv", summary);
    return out;
}

/// Longest frame meeting the efficiency floor, and the efficiency curve
/// Pr{p(t, T_b) > psi} over curve_t_s for each psi in curve_psi.
inline CommandResult cmd_mc_frame(const Config& c, const RunOptions&) {
    auto known = detail::with_env({"curve_psi", "curve_t_s"});
    known.insert(detail::link_keys.begin(), detail::link_keys.end());
    c.reject_unknown(known);
    auto l = detail::link_config(c);
    detail::as_config_error(c, [&] { l.validate(); return 0; });
    const auto f = design::optimal_frame_duration(l);
    static const char* names[] = {"solved", "zero", "horizon"};
    CommandResult out;
    CsvTable frame({"psi", "P", "T_b_s", "t_s", "T_star_s", "status"});
    frame.add({l.psi, l.P, l.T_b, f.t, f.T_star, std::string(names[static_cast<int>(f.status)])});
    out.files.add("frame.csv", frame);
    out.report.push_back(detail::kv("T_star_s", f.T_star));
    out.report.push_back(std::string("status=") + names[static_cast<int>(f.status)]);
    if (c.has("curve_t_s")) {
        const auto psis = c.list("curve_psi", {l.psi});
        const auto ts = c.nonempty_list("curve_t_s");
        detail::require_positive(c, "curve_t_s", ts, true);
        for (double psi : psis) {
            if (!(psi > 0.0 && psi < 1.0)) c.fail("curve_psi", "values must be in (0,1)");
        }
        CsvTable curve({"psi", "t_s", "probability"});
        for (const auto& r : design::efficiency_curve(l, psis, ts)) curve.add({r.psi, r.t, r.probability});
        out.files.add("efficiency.csv", curve);
    }
    return out;
}

using CommandFn = CommandResult (*)(const Config&, const RunOptions&);

struct CommandInfo {
    const char* name;
    const char* help;
    CommandFn fn;
};

inline const std::vector<CommandInfo>& commands() {
    static const std::vector<CommandInfo> list{
        {"channel-stats", "CIR mean/variance over (t, tau) and PDF/CDF of h", cmd_channel_stats},
        {"simulate", "Monte Carlo CIR moments against the analytic mean", cmd_simulate},
        {"drug-design", "optimal drug release profile", cmd_drug_design},
        {"drug-eval", "absorption-rate moments and P_theta of a release profile", cmd_drug_eval},
        {"mc-threshold", "min-max detection threshold for uniform release", cmd_mc_threshold},
        {"mc-release", "min-max release profile at a fixed threshold", cmd_mc_release},
        {"mc-frame", "longest frame meeting the molecule-efficiency floor", cmd_mc_frame},
    };
    return list;
}

}  // namespace mcmc::io
