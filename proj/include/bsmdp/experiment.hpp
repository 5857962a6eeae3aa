#pragma once

#include "bsmdp/config.hpp"
#include "bsmdp/learner.hpp"
#include "bsmdp/planner.hpp"
#include "bsmdp/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bsmdp {

/// One evaluated (parameter point, method) pair. Exact rows carry no seed or
/// horizon; simulated rows carry both.
struct MetricsRow {
    std::string sweep_parameter; ///< empty without a sweep
    std::optional<double> sweep_value;
    Method method = Method::Optimal;
    std::string estimate; ///< "exact" or "simulated"
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> horizon;
    double throughput = 0.0;
    double mean_queue = 0.0;
    std::optional<double> delay;
    double blocking = 0.0;
    std::optional<double> blocking_stderr;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// Decimal text with a fixed format, independent of the global locale.
std::string format_number(double x);

/// Output files relative to the output directory, in creation order.
using FileList = std::vector<std::filesystem::path>;

/// Policy of a comparison method. Learner policies require training and are
/// rejected here; use train_learner.
StochasticPolicy method_policy(Method method, const ModelParams& params);

/// Runs the configured learner on `params` from state (0,0,0).
TrainResult train_learner(const ExperimentSpec& spec, const ModelParams& params);

/// LP solution: policy_map.csv, occupancy.csv and solve_metrics.csv.
OptimalSolution run_solve(const ExperimentSpec& spec, FileList& files);

/// Learner run: learning_curve.csv, learned_policy.csv, train_summary.csv.
TrainResult run_train(const ExperimentSpec& spec, FileList& files);

/// Simulates a policy file (or, without one, every configured method) for
/// every configured seed: simulate.csv.
std::vector<MetricsRow> run_simulate(const ExperimentSpec& spec,
                                     const std::optional<std::filesystem::path>& policy_file,
                                     FileList& files);

/// Every method at every sweep point: sweep_<parameter>.csv (or
/// experiment.csv without a sweep), plus policy maps of the optimal policy
/// and learning curves of the learner per point.
std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec, FileList& files);

/// Analytic against simulated metrics for every method and point: compare.csv.
std::vector<MetricsRow> run_compare(const ExperimentSpec& spec, FileList& files);

/// manifest.json with the config echo and a git blob SHA-1 per file.
void write_manifest(const ExperimentSpec& spec, const std::string& command, const FileList& files);

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(const std::string& content);

/// Runs tasks on up to `threads` workers; results keep task order.
void run_parallel(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

} // namespace bsmdp
