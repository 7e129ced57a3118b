#include "avrsafe/commands.hpp"
#include "avrsafe/errors.hpp"
#include "avrsafe/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace avrsafe;

    CLI::App app{"Probabilistic safe sets from average-reward LPs, with an MDR baseline"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;
    std::string out, backend;
    std::uint64_t seed = 0;
    std::size_t threads = 0;

    const std::vector<std::pair<const char*, const char*>> commands{
        {"discretize", "Estimate the transition kernel on the grid and write mdp.bin"},
        {"solve-avr", "Solve the LP pair; write gain, policy, level sets and ratio curve"},
        {"solve-mdr", "Run discounted value iteration for every lambda in the ladder"},
        {"rollout", "Monte Carlo survival of the stored policy from sampled start states"},
        {"bench", "Time the LP solve and value iteration over the grid ladder"},
        {"validate", "Check stored artifacts; nonzero exit on any failed check"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config,-c", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out, "Output directory (overrides the config)");
        sub->add_option("--seed", seed, "Random seed (overrides the config)");
        sub->add_option("--threads", threads,
                        std::string("Worker threads; 0 uses ") + kThreadsEnv + " or the hardware count");
        sub->add_option("--lp-backend", backend, "LP backend (simplex)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitUsage;
    }

    const CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--out")) o.out = out;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--threads")) o.threads = threads;
    if (sub->count("--lp-backend")) o.lp_backend = backend;

    RunConfig config;
    try {
        config = load_run_config(config_path, o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return run_command(sub->get_name(), config, std::cout, std::cerr);
}
