#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hypmass/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hypmass: warped-metric mass, flow, cutoff and heat-kernel experiments"};
    app.require_subcommand(1);

    hypmass::runner::Invocation inv;
    std::string out;
    long long seed = 0;

    struct Command {
        const char* name;
        const char* experiment;
        const char* help;
    };
    const Command commands[] = {
        {"mass", "mass_table", "local mass table over the configured radii"},
        {"flow", "flow_run", "normalized flow run with diagnostics and snapshot profiles"},
        {"cutoff", "cutoff_drift", "cutoff profiles and mass drift (or the two-radius gap if experiment = two_radius)"},
        {"kernel", "kernel", "heat kernel run and Gaussian bound fit"},
        {"certificate", "certificate", "scalar curvature lower-bound certificate"},
        {"verify", "verify_all", "the full verification suite"},
        {"run", "", "the experiment named in the configuration"},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    std::vector<CLI::Option*> out_opts, seed_opts;
    for (const auto& cmd : commands) {
        auto* sc = app.add_subcommand(cmd.name, cmd.help);
        sc->add_option("--config", inv.config_path, "configuration file (key = value, [section] headers)");
        out_opts.push_back(sc->add_option("--out", out, "output directory (overrides the out key)"));
        sc->add_option("--jobs", inv.jobs, "worker threads for independent cells")->check(CLI::PositiveNumber);
        seed_opts.push_back(sc->add_option("--seed", seed, "seed (overrides the seed key)"));
        subs.emplace_back(sc, &cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i].first->parsed()) continue;
        inv.experiment = subs[i].second->experiment;
        if (out_opts[i]->count()) inv.out = out;
        if (seed_opts[i]->count()) inv.seed = seed;
    }
    return hypmass::runner::run(inv, std::cout, std::cerr);
}
