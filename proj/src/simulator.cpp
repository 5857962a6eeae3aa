#include "bsmdp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bsmdp {

EventStreams::EventStreams(std::uint64_t seed) {
    for (std::size_t k = 0; k < kStreamCount; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(0x9e3779b9u + k)};
        engines_[k].seed(seq);
    }
}

StepOutcome env_step(const State& s, Action a, const ModelParams& params, const EventDraws& draws) {
    if (!executable_actions(s, params).contains(a)) {
        throw ContractViolation("action " + std::string(to_string(a)) + " cannot be executed in state " +
                                to_string(s));
    }
    StepOutcome out;
    int queue = s.queue;
    int energy = s.energy;
    switch (a) {
    case Action::Idle: break;
    case Action::Transmit:
        energy -= params.tx_energy;
        if (draws.success) out.delivered = params.tx_packets;
        break;
    case Action::Harvest:
        if (draws.success) energy = std::min(energy + params.harvest_energy, params.max_energy);
        break;
    case Action::Backscatter:
        if (draws.success) out.delivered = params.bs_packets;
        break;
    }
    queue -= out.delivered;
    if (draws.arrival) {
        out.arrived = true;
        if (queue < params.max_queue) {
            ++queue;
        } else {
            out.dropped = true;
        }
    }
    out.next = {draws.next_channel_idle ? 0 : 1, queue, energy};
    return out;
}

StepOutcome env_step(const State& s, Action a, const ModelParams& params, EventStreams& rng) {
    EventDraws draws;
    const double u_success = rng.uniform(EventStreams::Success);
    switch (a) {
    case Action::Transmit: draws.success = u_success < params.sigma; break;
    case Action::Harvest: draws.success = u_success < params.gamma; break;
    case Action::Backscatter: draws.success = u_success < params.beta; break;
    case Action::Idle: break;
    }
    draws.arrival = rng.uniform(EventStreams::Arrival) < params.alpha;
    draws.next_channel_idle = rng.uniform(EventStreams::Channel) < params.eta;
    return env_step(s, a, params, draws);
}

Action sample_action(const std::array<double, kActionCount>& dist, double u) {
    double cumulative = 0.0;
    std::size_t last_positive = kActionCount;
    for (std::size_t k = 0; k < kActionCount; ++k) {
        if (dist[k] <= 0.0) continue;
        last_positive = k;
        cumulative += dist[k];
        if (u < cumulative) return action_at(k);
    }
    if (last_positive == kActionCount) throw ModelError("cannot sample from an empty distribution");
    return action_at(last_positive);
}

Environment::Environment(const ModelParams& params, std::uint64_t seed, const State& initial)
    : params_(params), rng_(seed), state_(initial) {
    if (!StateSpace(params_).contains(initial))
        throw ModelError("initial state " + to_string(initial) + " is outside the state space");
}

StepOutcome Environment::step(Action a) {
    StepOutcome out = env_step(state_, a, params_, rng_);
    state_ = out.next;
    ++slots_;
    return out;
}

void SimConfig::validate() const {
    params.validate();
    if (horizon == 0) throw ModelError("simulation horizon must be positive");
    if (effective_warmup() >= horizon) throw ModelError("warmup must be shorter than the horizon");
}

RunMetrics run_policy(const StochasticPolicy& policy, const SimConfig& config) {
    config.validate();
    policy.validate(config.params, ActionScope::Executable);
    const StateSpace space(config.params);

    Environment env(config.params, config.seed, config.initial);
    EventStreams choice(config.seed ^ 0xa5a5a5a5a5a5a5a5ull);

    const std::uint64_t warmup = config.effective_warmup();
    const std::uint64_t measured = config.horizon - warmup;
    constexpr std::uint64_t kBatches = 32;
    const std::uint64_t batch_len = std::max<std::uint64_t>(1, measured / kBatches);
    std::vector<std::uint64_t> batch_arrivals(kBatches, 0), batch_drops(kBatches, 0);

    RunMetrics m;
    double queue_sum = 0.0;
    std::uint64_t delivered = 0;
    for (std::uint64_t t = 0; t < config.horizon; ++t) {
        const State s = env.state();
        const Action a =
            sample_action(policy.at(space.index(s)), choice.uniform(EventStreams::Policy));
        const StepOutcome out = env.step(a);
        if (t < warmup) continue;
        queue_sum += s.queue;
        delivered += static_cast<std::uint64_t>(out.delivered);
        const std::uint64_t batch = std::min(kBatches - 1, (t - warmup) / batch_len);
        if (out.arrived) {
            ++m.arrivals;
            ++batch_arrivals[batch];
        }
        if (out.dropped) {
            ++m.drops;
            ++batch_drops[batch];
        }
    }

    m.slots = measured;
    const auto n = static_cast<double>(measured);
    m.throughput = static_cast<double>(delivered) / n;
    m.mean_queue = queue_sum / n;
    if (delivered > 0) m.delay = m.mean_queue / m.throughput;
    m.blocking = m.arrivals ? static_cast<double>(m.drops) / static_cast<double>(m.arrivals) : 0.0;

    double mean = 0.0, sq = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < kBatches; ++b) {
        if (batch_arrivals[b] == 0) continue;
        const double r = static_cast<double>(batch_drops[b]) / static_cast<double>(batch_arrivals[b]);
        mean += r;
        sq += r * r;
        ++used;
    }
    if (used > 1) {
        mean /= static_cast<double>(used);
        const double var = (sq - static_cast<double>(used) * mean * mean) / static_cast<double>(used - 1);
        m.blocking_stderr = std::sqrt(std::max(var, 0.0) / static_cast<double>(used));
    }
    return m;
}

std::string_view to_string(Baseline b) noexcept {
    switch (b) {
    case Baseline::Htt: return "htt";
    case Baseline::BackscatterOnly: return "backscatter";
    case Baseline::Random: return "random";
    }
    return "unknown";
}

StochasticPolicy baseline_policy(Baseline kind, const ModelParams& params) {
    const StateSpace space(params);
    StochasticPolicy policy(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const State s = space.state(i);
        auto& row = policy.at(i);
        const bool can_transmit = s.queue >= params.tx_packets && s.energy >= params.tx_energy;
        const bool can_backscatter = s.queue >= params.bs_packets;
        const bool storage_full = s.energy == params.max_energy;
        switch (kind) {
        case Baseline::Htt:
            if (s.channel_idle()) {
                row[slot(can_transmit ? Action::Transmit : Action::Idle)] = 1.0;
            } else {
                row[slot(storage_full ? Action::Idle : Action::Harvest)] = 1.0;
            }
            break;
        case Baseline::BackscatterOnly:
            if (!s.channel_idle() && can_backscatter) {
                row[slot(Action::Backscatter)] = 1.0;
            } else {
                row[slot(Action::Idle)] = 1.0;
            }
            break;
        case Baseline::Random: {
            // The mode-appropriate options coincide with the feasible set.
            const ActionSet options = feasible_actions(s, params);
            for (Action a : options.to_vector())
                row[slot(a)] = 1.0 / static_cast<double>(options.size());
            break;
        }
        }
    }
    policy.validate(params, ActionScope::Executable);
    return policy;
}

} // namespace bsmdp
