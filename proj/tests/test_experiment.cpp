#include "bsmdp/config.hpp"
#include "bsmdp/experiment.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bsmdp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bsmdp_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("empty document gives the default configuration") {
    const ExperimentSpec spec = parse_config_text("");
    CHECK(spec.model.alpha == 0.5);
    CHECK(spec.model.eta == 0.5);
    CHECK(spec.model.beta == 0.9);
    CHECK(spec.model.gamma == 0.9);
    CHECK(spec.model.sigma == 0.9);
    CHECK(spec.model.max_queue == 10);
    CHECK(spec.model.max_energy == 10);
    CHECK(spec.model.tx_packets == 2);
    CHECK(spec.model.bs_packets == 1);
    CHECK(spec.model.tx_energy == 1);
    CHECK(spec.model.harvest_energy == 1);
    CHECK(spec.learner.rho0 == 1e-5);
    CHECK(spec.learner.nu == 0.01);
    CHECK(spec.methods.size() == 5);
    CHECK(parse_config_text("{}").model.alpha == 0.5);
}

TEST_CASE("invalid values name the key") {
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"alpha": 1.5}})"), doctest::Contains("alpha"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"D": 2.5}})"), doctest::Contains("model.D"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"eta": "high"}})"),
                         doctest::Contains("model.eta"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"learner": {"nu": -1}})"), doctest::Contains("nu"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"methods": []})"), doctest::Contains("methods"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"methods": ["best"]})"),
                         doctest::Contains("methods[0]"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"sweep": {"parameter": "eta", "values": [0.5, 2]}})"),
                         doctest::Contains("sweep.values[1]"), ConfigError);
}

TEST_CASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"modle": {}})"), doctest::Contains("modle"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"lambda": 0.3}})"),
                         doctest::Contains("model.lambda"), ConfigError);
}

TEST_CASE("syntax errors report the line") {
    CHECK_THROWS_WITH_AS(parse_config_text("{\n  \"model\": {\n    \"alpha\": 0.4,\n  }\n}"),
                         doctest::Contains("line 4"), ConfigError);
}

TEST_CASE("sweep over eta") {
    const ExperimentSpec spec = parse_config_text(R"({"sweep": {"parameter": "eta", "values": [0.2, 0.8]}})");
    REQUIRE(spec.sweep.has_value());
    CHECK(spec.sweep->parameter == "eta");
    CHECK(spec.sweep->values == std::vector<double>{0.2, 0.8});
}

TEST_CASE("configuration echo round-trips") {
    const ExperimentSpec spec = parse_config_text(R"({
        "model": {"eta": 0.3, "D": 6, "E": 5},
        "learner": {"rho0": 0.002, "recurrent_state": [1, 2, 3], "algorithm": "episodic",
                    "xi_reading": "episode_end", "reward": "expected"},
        "simulation": {"horizon": 5000, "warmup": 100, "seeds": [3, 4]},
        "sweep": {"parameter": "alpha", "values": [0.1, 0.2]},
        "methods": ["optimal", "random"],
        "evaluation": "exact",
        "output": "somewhere",
        "threads": 2})");
    const std::string echo = to_json(spec);
    CHECK(to_json(parse_config_text(echo)) == echo);
    const ExperimentSpec again = parse_config_text(echo);
    CHECK(again.episodic);
    CHECK(again.recurrent.kind == RecurrentChoice::Fixed);
    CHECK(again.recurrent.state == State{1, 2, 3});
    CHECK(again.learner.xi_reading == XiSumReading::EpisodeEnd);
    CHECK(again.simulation.seeds == std::vector<std::uint64_t>{3, 4});
}

TEST_CASE("method lists") {
    CHECK(parse_method_list("optimal,htt") == std::vector<Method>{Method::Optimal, Method::Htt});
    CHECK_THROWS_AS(parse_method_list("optimal,,htt"), ConfigError);
}

TEST_CASE("git blob hash") {
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("worker pool keeps task order and propagates errors") {
    std::vector<int> out(50, -1);
    run_parallel(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
    CHECK_THROWS_AS(run_parallel(5, 3, [](std::size_t i) {
                        if (i == 2) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("sweep output is deterministic and self-describing") {
    const std::string config = R"({
        "sweep": {"parameter": "eta", "values": [0.3, 0.7]},
        "methods": ["optimal", "htt", "random", "learner"],
        "simulation": {"horizon": 20000, "seeds": [1, 2]},
        "learner": {"horizon": 20000, "rho0": 0.003, "rho_decay": 1.0, "nu": 1.0,
                    "recurrent_state": "frequent", "checkpoint_every": 5000},
        "threads": 3})";
    ExperimentSpec spec = parse_config_text(config);
    spec.output = scratch("sweep_a");
    FileList files_a;
    const auto rows = run_experiment(spec, files_a);
    write_manifest(spec, "sweep", files_a);
    ExperimentSpec spec_b = spec;
    spec_b.output = scratch("sweep_b");
    spec_b.threads = 1;
    FileList files_b;
    run_experiment(spec_b, files_b);
    REQUIRE(files_a == files_b);
    for (const auto& f : files_a) CHECK(slurp(spec.output / f) == slurp(spec_b.output / f));

    CHECK(rows.size() == 2 * 4 * 3);
    const std::string csv = slurp(spec.output / "sweep_eta.csv");
    CHECK(csv.rfind("sweep_parameter,sweep_value,method,estimate,seed,horizon,throughput,mean_queue,"
                    "delay,blocking,blocking_stderr\n",
                    0) == 0);
    CHECK(csv.find("eta,0.7,learner,simulated,2,20000,") != std::string::npos);
    CHECK(fs::exists(spec.output / "policy_eta_0.3.csv"));
    CHECK(fs::exists(spec.output / "learning_eta_0.7.csv"));
    const std::string manifest = slurp(spec.output / "manifest.json");
    CHECK(manifest.find(git_blob_sha1(csv)) != std::string::npos);
    CHECK(manifest.find("content_hash") != std::string::npos);

    for (double eta : {0.3, 0.7}) {
        double optimal = 0, best_other = 0;
        for (const auto& r : rows) {
            if (r.estimate != "exact" || r.sweep_value != eta) continue;
            if (r.method == Method::Optimal) optimal = r.throughput;
            else best_other = std::max(best_other, r.throughput);
        }
        CHECK(optimal >= best_other - 1e-9);
    }
}

TEST_CASE("solve, train, simulate and compare write their files") {
    ExperimentSpec spec = parse_config_text(R"({"simulation": {"horizon": 10000},
        "learner": {"horizon": 5000, "checkpoint_every": 1000},
        "methods": ["optimal", "backscatter"]})");
    spec.output = scratch("commands");
    FileList files;
    const OptimalSolution sol = run_solve(spec, files);
    CHECK(sol.objective > 0.49);
    run_train(spec, files);
    const auto sim = run_simulate(spec, std::nullopt, files);
    CHECK(sim.size() == 2);
    const auto from_file = run_simulate(spec, spec.output / "policy_map.csv", files);
    CHECK(from_file.size() == 1);
    const auto compared = run_compare(spec, files);
    CHECK(compared.size() == 4);
    for (const char* name : {"policy_map.csv", "occupancy.csv", "solve_metrics.csv", "learning_curve.csv",
                             "learned_policy.csv", "train_summary.csv", "simulate.csv", "compare.csv"})
        CHECK(fs::exists(spec.output / name));
    const std::string summary = slurp(spec.output / "train_summary.csv");
    CHECK(summary.rfind("algorithm,steps,episodes,recurrent_state,xi_tilde,xi_exact,lp_optimum\n", 0) == 0);
}

TEST_CASE("alpha sweep: throughput grows with the arrival rate at the low end") {
    ExperimentSpec spec = parse_config_text(R"({"sweep": {"parameter": "alpha", "values": [0.1, 0.2, 0.3]},
        "methods": ["optimal", "htt", "backscatter", "random"], "evaluation": "exact"})");
    spec.output = scratch("alpha");
    FileList files;
    const auto rows = run_experiment(spec, files);
    for (Method m : spec.methods) {
        double previous = -1;
        for (const auto& r : rows) {
            if (r.method != m) continue;
            CHECK(r.throughput > previous);
            previous = r.throughput;
        }
    }
}
