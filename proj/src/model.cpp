#include "bsmdp/model.hpp"

#include <cmath>
#include <sstream>

namespace bsmdp {

std::string_view to_string(Action a) noexcept {
    switch (a) {
    case Action::Idle: return "idle";
    case Action::Transmit: return "transmit";
    case Action::Harvest: return "harvest";
    case Action::Backscatter: return "backscatter";
    }
    return "unknown";
}

std::optional<Action> parse_action(std::string_view name) noexcept {
    for (Action a : kAllActions) {
        if (to_string(a) == name) return a;
    }
    if (name.size() == 1 && name[0] >= '1' && name[0] <= '4') return action_at(name[0] - '1');
    return std::nullopt;
}

namespace {

void require_probability(double value, const char* key) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
        std::ostringstream os;
        os << "parameter '" << key << "' must be a probability in [0,1], got " << value;
        throw ModelError(os.str());
    }
}

void require_range(int value, int lo, int hi, const char* key) {
    if (value < lo || value > hi) {
        std::ostringstream os;
        os << "parameter '" << key << "' must lie in [" << lo << ", " << hi << "], got " << value;
        throw ModelError(os.str());
    }
}

} // namespace

void ModelParams::validate() const {
    require_probability(alpha, "alpha");
    require_probability(eta, "eta");
    require_probability(beta, "beta");
    require_probability(gamma, "gamma");
    require_probability(sigma, "sigma");
    // Keeps the state space small enough to index with dense matrices.
    constexpr int kCapacityLimit = 1000;
    require_range(max_queue, 1, kCapacityLimit, "D");
    require_range(max_energy, 1, kCapacityLimit, "E");
    require_range(tx_packets, 1, max_queue, "d_t");
    require_range(bs_packets, 1, max_queue, "d_b");
    require_range(tx_energy, 1, max_energy, "e_t");
    require_range(harvest_energy, 1, max_energy, "e_h");
}

std::string to_string(const State& s) {
    std::ostringstream os;
    os << '(' << s.channel << ',' << s.queue << ',' << s.energy << ')';
    return os.str();
}

std::vector<Action> ActionSet::to_vector() const {
    std::vector<Action> out;
    for (Action a : kAllActions) {
        if (contains(a)) out.push_back(a);
    }
    return out;
}

std::string to_string(const ActionSet& set) {
    std::string out = "{";
    for (Action a : set.to_vector()) {
        if (out.size() > 1) out += ',';
        out += to_string(a);
    }
    return out + "}";
}

StateSpace::StateSpace(const ModelParams& params)
    : max_queue_(params.max_queue), max_energy_(params.max_energy),
      size_(2 * static_cast<std::size_t>(params.max_queue + 1) *
            static_cast<std::size_t>(params.max_energy + 1)) {
    params.validate();
}

bool StateSpace::contains(const State& s) const noexcept {
    return (s.channel == 0 || s.channel == 1) && s.queue >= 0 && s.queue <= max_queue_ &&
           s.energy >= 0 && s.energy <= max_energy_;
}

std::size_t StateSpace::index(const State& s) const {
    if (!contains(s)) throw ModelError("state " + to_string(s) + " is outside the state space");
    const auto levels_e = static_cast<std::size_t>(max_energy_ + 1);
    const auto levels_d = static_cast<std::size_t>(max_queue_ + 1);
    return static_cast<std::size_t>(s.channel) * levels_d * levels_e +
           static_cast<std::size_t>(s.queue) * levels_e + static_cast<std::size_t>(s.energy);
}

State StateSpace::state(std::size_t index) const {
    if (index >= size_) throw ModelError("state index " + std::to_string(index) + " out of range");
    const auto levels_e = static_cast<std::size_t>(max_energy_ + 1);
    const auto levels_d = static_cast<std::size_t>(max_queue_ + 1);
    State s;
    s.energy = static_cast<int>(index % levels_e);
    s.queue = static_cast<int>((index / levels_e) % levels_d);
    s.channel = static_cast<int>(index / (levels_e * levels_d));
    return s;
}

std::vector<State> enumerate_states(const ModelParams& params) {
    const StateSpace space(params);
    std::vector<State> states;
    states.reserve(space.size());
    for (int c = 0; c <= 1; ++c)
        for (int d = 0; d <= params.max_queue; ++d)
            for (int e = 0; e <= params.max_energy; ++e) states.push_back({c, d, e});
    return states;
}

ActionSet feasible_actions(const State& s, const ModelParams& params) {
    if (s.channel_idle()) {
        if (s.queue >= params.tx_packets && s.energy >= params.tx_energy)
            return {Action::Idle, Action::Transmit};
        return {Action::Idle};
    }
    const bool can_backscatter = s.queue >= params.bs_packets;
    const bool storage_full = s.energy == params.max_energy;
    if (storage_full) {
        return can_backscatter ? ActionSet{Action::Backscatter} : ActionSet{Action::Idle};
    }
    return can_backscatter ? ActionSet{Action::Harvest, Action::Backscatter}
                           : ActionSet{Action::Harvest};
}

ActionSet executable_actions(const State& s, const ModelParams& params) {
    ActionSet set = feasible_actions(s, params);
    set.insert(Action::Idle);
    return set;
}

ActionSet allowed_actions(const State& s, const ModelParams& params, ActionScope scope) {
    return scope == ActionScope::Feasible ? feasible_actions(s, params)
                                          : executable_actions(s, params);
}

double immediate_throughput(const State& s, Action a, const ModelParams& params,
                            ActionScope scope) {
    if (!allowed_actions(s, params, scope).contains(a)) {
        throw ContractViolation("action " + std::string(to_string(a)) + " is not allowed in state " +
                                to_string(s));
    }
    switch (a) {
    case Action::Transmit: return params.sigma * params.tx_packets;
    case Action::Backscatter: return params.beta * params.bs_packets;
    default: return 0.0;
    }
}

} // namespace bsmdp
