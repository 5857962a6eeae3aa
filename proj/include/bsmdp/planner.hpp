#pragma once

#include "bsmdp/model.hpp"
#include "bsmdp/policy.hpp"
#include "bsmdp/simplex.hpp"
#include "bsmdp/transitions.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace bsmdp {

/// Long-run state-action frequencies psi(s, a), laid out like a policy table.
struct OccupancyMeasure {
    std::vector<std::array<double, kActionCount>> psi;

    double at(std::size_t s, Action a) const { return psi.at(s)[slot(a)]; }
    double total() const noexcept;
    /// Expected reward per slot, sum of psi(s,a) * T(s,a).
    double objective(const TransitionModel& model) const;
    /// max over s' of |sum_a psi(s',a) - sum_{s,a} psi(s,a) p(s'|s,a)|.
    double flow_balance_residual(const TransitionModel& model) const;
};

/// Occupancy-measure LP: one column per feasible (s, a), one balance row per
/// state except the last (the balance rows sum to zero, so one is redundant),
/// and a final normalization row.
struct OccupancyLp {
    LinearProgram program;
    std::vector<std::pair<std::size_t, Action>> columns;
    std::size_t num_states = 0;
};

OccupancyLp build_lp(const TransitionModel& model);
OccupancyLp build_lp(const ModelParams& params);

/// Solves the LP and checks normalization and flow balance against
/// `tolerance`; throws LpError with the offending residual otherwise.
OccupancyMeasure solve_lp(const OccupancyLp& lp, const TransitionModel& model,
                          double tolerance = 1e-9, const SimplexOptions& options = {});

/// psi(s,a) / sum_a' psi(s,a'). States with total occupancy at or below
/// 1e-12 get the uniform distribution over their feasible actions.
StochasticPolicy extract_policy(const OccupancyMeasure& psi, const ModelParams& params);

struct AnalyticMetrics {
    double mean_queue = 0.0;
    double throughput = 0.0;
    /// mean_queue / throughput; empty when throughput is zero.
    std::optional<double> delay;
    /// Fraction of arriving packets dropped.
    double blocking = 0.0;
};

/// Mean queue, throughput, Little's-law delay and blocking from an occupancy
/// measure. A packet is blocked when the queue is full at the start of the
/// slot and the slot's action does not free space: always for Idle and
/// Harvest, with probability 1-sigma for Transmit and 1-beta for Backscatter.
AnalyticMetrics analytic_metrics(const OccupancyMeasure& psi, const ModelParams& params);

/// Bundles build, solve, extract and metrics for the common case.
struct OptimalSolution {
    OccupancyMeasure occupancy;
    StochasticPolicy policy;
    AnalyticMetrics metrics;
    double objective = 0.0;
};

OptimalSolution solve_optimal(const TransitionModel& model, double tolerance = 1e-9);

} // namespace bsmdp
