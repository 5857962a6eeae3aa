#include "bsmdp/learner.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace bsmdp {

void LearnerConfig::validate() const {
    if (!(rho0 > 0.0) || !std::isfinite(rho0)) throw ModelError("learner rho0 must be positive");
    if (!(rho_decay > 0.0 && rho_decay <= 1.0))
        throw ModelError("learner rho_decay must lie in (0, 1]");
    if (rho_period == 0) throw ModelError("learner rho_period must be positive");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ModelError("learner nu must be positive");
    if (horizon == 0) throw ModelError("learner horizon must be positive");
    if (!(theta_max > 0.0)) throw ModelError("learner theta_max must be positive");
    if (checkpoint_every == 0) throw ModelError("learner checkpoint_every must be positive");
    if (!std::isfinite(xi0)) throw ModelError("learner xi0 must be finite");
}

double step_schedule(std::uint64_t k, const LearnerConfig& config) {
    return config.rho0 * std::pow(config.rho_decay, static_cast<double>(k / config.rho_period));
}

void LearningTrace::write_csv(std::ostream& out) const {
    out << "step,xi_tilde,xi_exact,rho\n" << std::setprecision(12);
    for (const auto& c : checkpoints) {
        out << c.step << ',' << c.xi_tilde << ',';
        if (c.xi_exact) {
            out << *c.xi_exact;
        } else {
            out << "NA";
        }
        out << ',' << c.rho << '\n';
    }
}

namespace {

double reward_of(RewardSignal signal, const State& s, Action a, const StepOutcome& out,
                 const ModelParams& params) {
    if (signal == RewardSignal::Realized) return static_cast<double>(out.delivered);
    return immediate_throughput(s, a, params);
}

// Sparse accumulator over (state, action) touched since the last reset.
class TraceVector {
public:
    explicit TraceVector(std::size_t num_states)
        : values_(num_states, {0.0, 0.0, 0.0, 0.0}), touched_(num_states, false) {}

    void reset() {
        for (std::size_t s : active_) {
            values_[s] = {0.0, 0.0, 0.0, 0.0};
            touched_[s] = false;
        }
        active_.clear();
    }

    void add(std::size_t s, const ActionDistribution& g) {
        if (!touched_[s]) {
            touched_[s] = true;
            active_.push_back(s);
        }
        for (std::size_t k = 0; k < kActionCount; ++k) values_[s][k] += g[k];
    }

    // acc += scale * z
    void scatter(GradientVector& acc, double scale) const {
        for (std::size_t s : active_)
            for (std::size_t k = 0; k < kActionCount; ++k) acc[s][k] += scale * values_[s][k];
    }

    // theta += scale * z, clipped by ThetaParams
    void apply(ThetaParams& theta, double scale) const {
        for (std::size_t s : active_) {
            for (Action a : theta.feasible(s).to_vector()) {
                const double dz = values_[s][slot(a)];
                if (dz != 0.0) theta.add(s, a, scale * dz);
            }
        }
    }

private:
    GradientVector values_;
    std::vector<bool> touched_;
    std::vector<std::size_t> active_;
};

class CheckpointWriter {
public:
    CheckpointWriter(const LearnerConfig& config, const ModelParams& params) : config_(config) {
        if (config.exact_checkpoints) model_.emplace(params);
    }

    void record(LearningTrace& trace, std::uint64_t step, const ThetaParams& theta,
                double xi_tilde) const {
        Checkpoint c;
        c.step = step;
        c.xi_tilde = xi_tilde;
        c.rho = step_schedule(step, config_);
        if (model_ || config_.snapshot_policies) {
            StochasticPolicy policy = to_policy(theta);
            if (model_) c.xi_exact = average_throughput_exact(policy, *model_);
            if (config_.snapshot_policies) c.policy = std::move(policy);
        }
        trace.checkpoints.push_back(std::move(c));
    }

    bool due(std::uint64_t step) const {
        return step % config_.checkpoint_every == 0 || step == config_.horizon;
    }

private:
    const LearnerConfig& config_;
    std::optional<TransitionModel> model_;
};

void check_theta(const ThetaParams& theta, const ModelParams& params) {
    if (theta.num_states() != StateSpace(params).size())
        throw ModelError("initial theta does not match the environment's state space");
}

} // namespace

State suggest_recurrent_state(const ThetaParams& theta, const TransitionModel& model,
                              const State& initial) {
    const Eigen::VectorXd pi = limiting_distribution(to_policy(theta), model, initial);
    Eigen::Index best = 0;
    pi.maxCoeff(&best);
    return model.space().state(static_cast<std::size_t>(best));
}

TrainResult per_step_train(const LearnerConfig& config, Environment& env, ThetaParams theta0) {
    config.validate();
    const ModelParams& params = env.params();
    check_theta(theta0, params);
    const StateSpace space(params);
    const State recurrent = config.recurrent_state.value_or(env.state());
    const std::size_t recurrent_index = space.index(recurrent);

    TrainResult result{std::move(theta0), {}, config.xi0, 0, recurrent};
    ThetaParams& theta = result.theta;
    double& xi = result.xi_tilde;
    EventStreams choice(config.seed);
    TraceVector z(space.size());
    const CheckpointWriter writer(config, params);
    writer.record(result.trace, 0, theta, xi);

    bool visited = false;
    for (std::uint64_t k = 0; k < config.horizon; ++k) {
        const double rho = step_schedule(k, config);
        const State s = env.state();
        const std::size_t si = space.index(s);
        const Action a = sample_action(softmax_policy(theta, si), choice.uniform(EventStreams::Policy));
        const ActionDistribution g = log_policy_gradient(theta, si, a);
        if (si == recurrent_index) {
            if (visited) ++result.episodes;
            visited = true;
            z.reset();
        }
        z.add(si, g);

        const StepOutcome out = env.step(a);
        const double r = reward_of(config.reward, s, a, out, params);
        const double advantage = r - xi;
        if (advantage != 0.0) z.apply(theta, rho * advantage);
        xi += config.nu * rho * advantage;
        if (!std::isfinite(xi)) throw LearningError("throughput estimate became non-finite");

        if (writer.due(k + 1)) writer.record(result.trace, k + 1, theta, xi);
    }
    return result;
}

TrainResult episodic_train(const LearnerConfig& config, Environment& env, ThetaParams theta0) {
    config.validate();
    const ModelParams& params = env.params();
    check_theta(theta0, params);
    const StateSpace space(params);
    const State recurrent = config.recurrent_state.value_or(env.state());
    const std::size_t recurrent_index = space.index(recurrent);

    TrainResult result{std::move(theta0), {}, config.xi0, 0, recurrent};
    ThetaParams& theta = result.theta;
    double& xi = result.xi_tilde;
    EventStreams choice(config.seed);
    const CheckpointWriter writer(config, params);
    writer.record(result.trace, 0, theta, xi);

    std::vector<EpisodeStep> episode;
    bool started = false;
    std::uint64_t visits = 0;
    for (std::uint64_t k = 0; k < config.horizon; ++k) {
        const State s = env.state();
        const std::size_t si = space.index(s);
        if (si == recurrent_index) {
            ++visits;
            if (started && !episode.empty()) {
                const double rho = step_schedule(k, config);
                const GradientVector F = episode_gradient(theta, episode, xi);
                for (std::size_t st = 0; st < F.size(); ++st) {
                    for (Action a : theta.feasible(st).to_vector())
                        if (F[st][slot(a)] != 0.0) theta.add(st, a, rho * F[st][slot(a)]);
                }
                double reward_excess = 0.0;
                if (config.xi_reading == XiSumReading::PerStep) {
                    for (const auto& e : episode) reward_excess += e.reward - xi;
                } else {
                    reward_excess = static_cast<double>(episode.size()) * (episode.back().reward - xi);
                }
                xi += config.nu * rho * reward_excess;
                if (!std::isfinite(xi)) throw LearningError("throughput estimate became non-finite");
                ++result.episodes;
                episode.clear();
            }
            started = true;
        }

        const Action a = sample_action(softmax_policy(theta, si), choice.uniform(EventStreams::Policy));
        const StepOutcome out = env.step(a);
        if (started) episode.push_back({si, a, reward_of(config.reward, s, a, out, params)});

        if (writer.due(k + 1)) writer.record(result.trace, k + 1, theta, xi);
    }

    if (result.episodes == 0) {
        throw LearningError("no return to recurrent state " + to_string(recurrent) + " within " +
                            std::to_string(config.horizon) + " steps (visited " +
                            std::to_string(visits) + " times, last state " +
                            to_string(env.state()) + ")");
    }
    return result;
}

GradientVector episode_gradient(const ThetaParams& theta, std::span<const EpisodeStep> episode,
                                double xi_tilde) {
    GradientVector F(theta.num_states(), {0.0, 0.0, 0.0, 0.0});
    double tail = 0.0;
    for (auto it = episode.rbegin(); it != episode.rend(); ++it) {
        tail += it->reward - xi_tilde;
        const ActionDistribution g = log_policy_gradient(theta, it->state, it->action);
        for (std::size_t k = 0; k < kActionCount; ++k) F[it->state][k] += tail * g[k];
    }
    return F;
}

GradientVector episode_gradient_traced(const ThetaParams& theta,
                                       std::span<const EpisodeStep> episode, double xi_tilde) {
    GradientVector F(theta.num_states(), {0.0, 0.0, 0.0, 0.0});
    TraceVector z(theta.num_states());
    for (const auto& step : episode) {
        z.add(step.state, log_policy_gradient(theta, step.state, step.action));
        z.scatter(F, step.reward - xi_tilde);
    }
    return F;
}

std::vector<EpisodeStep> sample_episode(const ThetaParams& theta, Environment& env,
                                        EventStreams& choice, const State& recurrent,
                                        RewardSignal reward, std::uint64_t max_steps) {
    if (!(env.state() == recurrent))
        throw ContractViolation("episodes must start at the recurrent state");
    const StateSpace space(env.params());
    std::vector<EpisodeStep> episode;
    do {
        if (episode.size() >= max_steps) {
            throw LearningError("episode exceeded " + std::to_string(max_steps) +
                                " steps without returning to " + to_string(recurrent));
        }
        const State s = env.state();
        const std::size_t si = space.index(s);
        const Action a = sample_action(softmax_policy(theta, si), choice.uniform(EventStreams::Policy));
        const StepOutcome out = env.step(a);
        episode.push_back({si, a, reward_of(reward, s, a, out, env.params())});
    } while (!(env.state() == recurrent));
    return episode;
}

} // namespace bsmdp
