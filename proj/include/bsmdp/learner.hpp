#pragma once

#include "bsmdp/evaluator.hpp"
#include "bsmdp/model.hpp"
#include "bsmdp/policy.hpp"
#include "bsmdp/simulator.hpp"
#include "bsmdp/softmax_policy.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace bsmdp {

class LearningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which reward the episodic throughput-estimate update sums over an episode.
enum class XiSumReading {
    PerStep,    ///< sum_{k'} (T(s_k', a_k') - xi): each step's own reward (default)
    EpisodeEnd, ///< the episode's last reward repeated for every step
};

/// Reward fed to the learner.
enum class RewardSignal {
    Realized, ///< packets actually delivered in the slot
    Expected, ///< sigma*d_t / beta*d_b for the chosen action
};

struct LearnerConfig {
    double rho0 = 1e-5;
    double rho_decay = 0.9;
    std::uint64_t rho_period = 18'000;
    double nu = 0.01;
    /// Renewal state; defaults to the environment's state when training starts.
    std::optional<State> recurrent_state;
    std::uint64_t horizon = 500'000;
    std::uint64_t seed = 1;
    double theta_max = ThetaParams::kDefaultThetaMax;
    double xi0 = 0.0;
    std::uint64_t checkpoint_every = 10'000;
    /// Evaluate xi(theta) exactly at each checkpoint.
    bool exact_checkpoints = true;
    /// Store a policy snapshot at each checkpoint.
    bool snapshot_policies = false;
    XiSumReading xi_reading = XiSumReading::PerStep;
    RewardSignal reward = RewardSignal::Realized;

    void validate() const;
};

/// Most frequently visited state under the softmax policy of `theta`, started
/// from `initial`. A frequently visited renewal state keeps episodes short.
State suggest_recurrent_state(const ThetaParams& theta, const TransitionModel& model,
                              const State& initial = {0, 0, 0});

/// rho_k = rho0 * decay^floor(k / period)
double step_schedule(std::uint64_t k, const LearnerConfig& config);

struct Checkpoint {
    std::uint64_t step = 0;
    double xi_tilde = 0.0;
    std::optional<double> xi_exact;
    double rho = 0.0;
    std::optional<StochasticPolicy> policy;
};

struct LearningTrace {
    std::vector<Checkpoint> checkpoints;

    /// Columns: step, xi_tilde, xi_exact, rho ("NA" for a missing xi_exact).
    void write_csv(std::ostream& out) const;
};

struct TrainResult {
    ThetaParams theta;
    LearningTrace trace;
    double xi_tilde = 0.0;
    std::uint64_t episodes = 0; ///< completed returns to the recurrent state
    State recurrent_state;
};

/// Per-step updates with an eligibility trace reset at the recurrent state.
TrainResult per_step_train(const LearnerConfig& config, Environment& env, ThetaParams theta0);

/// Updates theta and xi only on returns to the recurrent state, using the
/// episode's accumulated q-estimates. Throws LearningError if no episode
/// completes within the horizon.
TrainResult episodic_train(const LearnerConfig& config, Environment& env, ThetaParams theta0);

/// One slot of a recorded episode.
struct EpisodeStep {
    std::size_t state = 0;
    Action action = Action::Idle;
    double reward = 0.0;
};

/// Episode gradient estimate sum_k q~(k) grad chi / chi with q~(k) the
/// remaining sum of (reward - xi_tilde) to the end of the episode.
GradientVector episode_gradient(const ThetaParams& theta, std::span<const EpisodeStep> episode,
                                double xi_tilde);

/// The same estimate written as sum_k (reward_k - xi_tilde) z_{k+1}, with z
/// the running sum of grad chi / chi since the episode start.
GradientVector episode_gradient_traced(const ThetaParams& theta,
                                       std::span<const EpisodeStep> episode, double xi_tilde);

/// Runs the environment from its current state under a frozen theta until it
/// next returns to `recurrent` (which must be the current state) and returns
/// the recorded episode. Throws LearningError after `max_steps` slots.
std::vector<EpisodeStep> sample_episode(const ThetaParams& theta, Environment& env,
                                        EventStreams& choice, const State& recurrent,
                                        RewardSignal reward, std::uint64_t max_steps);

} // namespace bsmdp
