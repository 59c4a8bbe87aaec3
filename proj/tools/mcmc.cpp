// mcmc <subcommand> --config <path> --out <dir> [--seed N] [--scale desk|paper]
//
// Exit codes: 0 ok, 1 internal error, 2 configuration error, 3 infeasible
// design, 4 numerical non-convergence. Output files are written only after
// the command has finished; a failed run leaves the output directory alone.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcmc/error.hpp"
#include "mcmc/io/commands.hpp"

namespace {

enum Exit { ok = 0, internal = 1, config = 2, infeasible = 3, no_convergence = 4 };

struct Args {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::string scale = "desk";
};

int run(const mcmc::io::CommandInfo& cmd, const Args& a) {
    using namespace mcmc::io;
    const Config cfg = Config::load(a.config);
    const RunOptions opts{a.seed, a.scale == "paper" ? Scale::paper : Scale::desk};
    CommandResult res = cmd.fn(cfg, opts);

    std::string report;
    for (const auto& line : res.report) report += line + "\n";
    res.files.add("report.txt", report);
    RunManifest m;
    m.command = cmd.name;
    m.config_path = std::filesystem::absolute(a.config).string();
    m.seed = a.seed;
    m.output_dir = std::filesystem::absolute(a.out).string();
    m.scale = a.scale;
    m.timestamp = RunManifest::now_iso8601();
    res.files.add("manifest.json", m.json());
    res.files.commit(a.out);

    std::cout << report;
    if (res.infeasible) {
        std::cerr << "mcmc: infeasible design (see design_summary.csv)\n";
        return infeasible;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-variant molecular communication channel: statistics, simulation and design"};
    app.require_subcommand(1);
    Args args;
    for (const auto& cmd : mcmc::io::commands()) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", args.config, "configuration file (key = value)")->required();
        sub->add_option("--out", args.out, "output directory")->required();
        sub->add_option("--seed", args.seed, "random seed");
        sub->add_option("--scale", args.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config;
    }

    const auto* chosen = app.get_subcommands().front();
    for (const auto& cmd : mcmc::io::commands()) {
        if (chosen->get_name() != cmd.name) continue;
        try {
            return run(cmd, args);
        } catch (const mcmc::config_error& e) {
            std::cerr << "mcmc: configuration error: " << e.what() << "\n";
            return config;
        } catch (const mcmc::infeasible_design& e) {
            std::cerr << "mcmc: infeasible: " << e.what() << "\n";
            return infeasible;
        } catch (const mcmc::non_convergence& e) {
            std::cerr << "mcmc: no convergence: " << e.what() << "\n";
            return no_convergence;
        } catch (const std::exception& e) {
            std::cerr << "mcmc: error: " << e.what() << "\n";
            return internal;
        }
    }
    return internal;
}
