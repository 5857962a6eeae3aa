#pragma once

#include "bsmdp/model.hpp"
#include "bsmdp/planner.hpp"
#include "bsmdp/policy.hpp"
#include "bsmdp/softmax_policy.hpp"
#include "bsmdp/transitions.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bsmdp {

/// The chain induced by a policy has the wrong shape for the requested
/// computation (several closed classes, transient anchor state, ...).
class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear solve failed or produced a non-finite result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense transition matrix P(s,s') = sum_a chi(s,a) p_a(s,s') and expected
/// one-slot reward r(s) = sum_a chi(s,a) T(s,a) under a policy. The policy may
/// use any action with a stored row (feasible actions plus Idle).
struct InducedChain {
    Eigen::MatrixXd transition;
    Eigen::VectorXd reward;
};

InducedChain induce_chain(const StochasticPolicy& policy, const TransitionModel& model);

/// Strongly connected components of the support graph of a chain.
struct ChainStructure {
    std::vector<std::size_t> component;      ///< component id per state
    std::size_t num_components = 0;
    std::vector<std::size_t> closed;         ///< ids of closed (recurrent) classes
    std::vector<std::size_t> closed_periods; ///< period of each closed class

    bool irreducible() const noexcept { return num_components == 1; }
    bool unichain() const noexcept { return closed.size() == 1; }
    bool aperiodic() const noexcept;
    std::vector<std::size_t> members(std::size_t component_id) const;
    bool recurrent(std::size_t state) const;
};

ChainStructure analyze_chain(const Eigen::MatrixXd& transition);
ChainStructure analyze_chain(const StochasticPolicy& policy, const TransitionModel& model);

struct StationaryDistribution {
    Eigen::VectorXd pi;

    /// max_s' |sum_s pi(s) P(s,s') - pi(s')|
    double balance_residual(const Eigen::MatrixXd& transition) const;
};

/// Unique solution of the balance equations via dense LU. Requires a single
/// closed class (transient states receive zero mass); throws StructureError
/// naming a second closed class otherwise.
StationaryDistribution stationary_distribution(const StochasticPolicy& policy,
                                               const TransitionModel& model);

/// Same quantity by power iteration on the lazy chain (I + P) / 2. Kept as an
/// independent numerical route for cross-checking the LU solve.
StationaryDistribution stationary_distribution_power(const StochasticPolicy& policy,
                                                     const TransitionModel& model,
                                                     double tolerance = 1e-12,
                                                     std::size_t max_iterations = 1'000'000);

/// Limiting occupancy distribution starting from `initial`, valid for chains
/// with several closed classes (each class weighted by its absorption
/// probability from `initial`).
Eigen::VectorXd limiting_distribution(const StochasticPolicy& policy, const TransitionModel& model,
                                      const State& initial);

/// Average reward xi = sum_s pi(s) r(s) of a single-closed-class chain.
double average_throughput_exact(const StochasticPolicy& policy, const TransitionModel& model);

/// Long-run average reward from a given start state (any chain structure).
double average_throughput_from(const StochasticPolicy& policy, const TransitionModel& model,
                               const State& initial);

/// psi(s,a) = pi(s) chi(s,a) for a state distribution pi.
OccupancyMeasure occupancy_from(const StochasticPolicy& policy, const Eigen::VectorXd& pi);

/// Mean queue, throughput, delay and blocking of any executable policy,
/// from its limiting occupancy when started at `initial`.
AnalyticMetrics policy_metrics(const StochasticPolicy& policy, const TransitionModel& model,
                               const State& initial = {0, 0, 0});

/// Relative values anchored at a recurrent state: d(anchor) = 0 and
/// d(s) = r(s) - xi + sum_s' P(s,s') d(s') for every s.
struct DifferentialThroughput {
    Eigen::VectorXd values;
    double average = 0.0;
    std::size_t anchor = 0;

    double bellman_residual(const InducedChain& chain) const;
};

DifferentialThroughput differential_throughput(const StochasticPolicy& policy,
                                               const TransitionModel& model,
                                               const State& recurrent_state);

/// q(s,a) = T(s,a) - xi + sum_s' p_a(s,s') d(s'); NaN where no row exists.
using QValues = std::vector<std::array<double, kActionCount>>;

QValues q_values(const StochasticPolicy& policy, const TransitionModel& model,
                 const State& recurrent_state);

/// d xi / d theta_{s,a}; zero for infeasible pairs.
using GradientVector = std::vector<std::array<double, kActionCount>>;

/// sum_{s,a} pi(s) grad chi(s,a) q(s,a).
GradientVector policy_gradient_exact(const ThetaParams& theta, const TransitionModel& model,
                                     const State& recurrent_state);

/// sum_s pi(s) (grad r(s) + sum_s' grad P(s,s') d(s')), evaluated with explicit
/// derivatives of the induced reward and kernel. Algebraically equal to
/// policy_gradient_exact.
GradientVector policy_gradient_direct(const ThetaParams& theta, const TransitionModel& model,
                                      const State& recurrent_state);

} // namespace bsmdp
