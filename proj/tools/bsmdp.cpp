#include "bsmdp/config.hpp"
#include "bsmdp/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

using namespace bsmdp;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> horizon;
    std::string methods;
    bool episodic = false;
    std::string policy;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON experiment file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "seed for the learner and the simulation");
    cmd->add_option("--horizon", o.horizon, "learner steps (train) or simulated slots");
    cmd->add_option("--method", o.methods, "comma-separated methods: optimal,learner,htt,backscatter,random");
    cmd->add_flag("--episodic", o.episodic, "train with episodic updates at the recurrent state");
}

ExperimentSpec load(const Options& o, bool horizon_is_learner) {
    ExperimentSpec spec = o.config.empty() ? parse_config_text("") : parse_config(o.config);
    if (!o.out.empty()) spec.output = o.out;
    if (o.seed) {
        spec.learner.seed = *o.seed;
        spec.simulation.seeds = {*o.seed};
    }
    if (o.horizon) {
        if (horizon_is_learner) {
            spec.learner.horizon = *o.horizon;
        } else {
            spec.simulation.horizon = *o.horizon;
            if (spec.simulation.warmup && *spec.simulation.warmup >= *o.horizon) spec.simulation.warmup.reset();
        }
    }
    if (!o.methods.empty()) spec.methods = parse_method_list(o.methods);
    if (o.episodic) spec.episodic = true;
    spec.validate();
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal and learned access policies for an RF-powered backscatter secondary user"};
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "solve the occupancy LP and write the optimal policy");
    auto* train = app.add_subcommand("train", "run the online policy-gradient learner");
    auto* simulate = app.add_subcommand("simulate", "simulate a policy file or the configured methods");
    auto* sweep = app.add_subcommand("sweep", "evaluate every method across the configured sweep");
    auto* compare = app.add_subcommand("compare", "analytic against simulated metrics");
    for (auto* cmd : {solve, train, simulate, sweep, compare}) add_common(cmd, o);
    simulate->add_option("--policy", o.policy, "policy CSV (c,d,e,action,probability)")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        FileList files;
        std::string command;
        ExperimentSpec spec;
        if (solve->parsed()) {
            command = "solve";
            spec = load(o, false);
            const OptimalSolution sol = run_solve(spec, files);
            std::cout << "optimal throughput " << format_number(sol.objective) << '\n';
        } else if (train->parsed()) {
            command = "train";
            spec = load(o, true);
            const TrainResult r = run_train(spec, files);
            std::cout << "xi_tilde " << format_number(r.xi_tilde) << " after " << spec.learner.horizon
                      << " steps, " << r.episodes << " episodes\n";
        } else if (simulate->parsed()) {
            command = "simulate";
            spec = load(o, false);
            std::optional<std::filesystem::path> policy;
            if (!o.policy.empty()) policy = o.policy;
            run_simulate(spec, policy, files);
        } else if (sweep->parsed()) {
            command = "sweep";
            spec = load(o, false);
            run_experiment(spec, files);
        } else {
            command = "compare";
            spec = load(o, false);
            run_compare(spec, files);
        }
        write_manifest(spec, command, files);
        for (const auto& f : files) std::cout << (spec.output / f).string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
