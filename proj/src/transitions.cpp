#include "bsmdp/transitions.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace bsmdp {

double TransitionRow::total() const noexcept {
    double sum = 0.0;
    for (const auto& o : entries) sum += o.probability;
    return sum;
}

double TransitionRow::probability_of(const State& next) const noexcept {
    for (const auto& o : entries) {
        if (o.next == next) return o.probability;
    }
    return 0.0;
}

namespace {

struct QueueEnergy {
    int queue;
    int energy;
    double probability;
};

// Queue/energy block for one action, before the channel factor.
class BlockBuilder {
public:
    void add(int queue, int energy, double p) {
        if (p == 0.0) return;
        for (auto& o : out_) {
            if (o.queue == queue && o.energy == energy) {
                o.probability += p;
                return;
            }
        }
        out_.push_back({queue, energy, p});
    }
    std::vector<QueueEnergy> take() { return std::move(out_); }

private:
    std::vector<QueueEnergy> out_;
};

std::vector<QueueEnergy> idle_block(const State& s, const ModelParams& p) {
    BlockBuilder b;
    if (s.queue == p.max_queue) {
        b.add(s.queue, s.energy, 1.0); // arrivals are dropped
    } else {
        b.add(s.queue + 1, s.energy, p.alpha);
        b.add(s.queue, s.energy, 1.0 - p.alpha);
    }
    return b.take();
}

// Transmit and backscatter share the four-case structure: success/failure of
// the send crossed with arrival/no arrival. On a full queue the failure cases
// collapse into "stay at D"; for a one-packet send the success-with-arrival
// case lands on the current level and is summed there.
std::vector<QueueEnergy> send_block(const State& s, const ModelParams& p, int sent,
                                    double success, int next_energy) {
    BlockBuilder b;
    const int d = s.queue;
    b.add(d - sent, next_energy, success * (1.0 - p.alpha));
    b.add(d - sent + 1, next_energy, success * p.alpha);
    if (d == p.max_queue) {
        b.add(d, next_energy, 1.0 - success);
    } else {
        b.add(d, next_energy, (1.0 - success) * (1.0 - p.alpha));
        b.add(d + 1, next_energy, (1.0 - success) * p.alpha);
    }
    return b.take();
}

std::vector<QueueEnergy> harvest_block(const State& s, const ModelParams& p) {
    BlockBuilder b;
    const int charged = std::min(s.energy + p.harvest_energy, p.max_energy);
    if (s.queue == p.max_queue) {
        b.add(s.queue, charged, p.gamma);
        b.add(s.queue, s.energy, 1.0 - p.gamma);
    } else {
        b.add(s.queue + 1, charged, p.alpha * p.gamma);
        b.add(s.queue + 1, s.energy, p.alpha * (1.0 - p.gamma));
        b.add(s.queue, charged, (1.0 - p.alpha) * p.gamma);
        b.add(s.queue, s.energy, (1.0 - p.alpha) * (1.0 - p.gamma));
    }
    return b.take();
}

} // namespace

TransitionRow transition_row(const State& s, Action a, const ModelParams& params,
                             ActionScope scope) {
    const StateSpace space(params);
    if (!space.contains(s)) throw ModelError("state " + to_string(s) + " is outside the state space");
    if (!allowed_actions(s, params, scope).contains(a)) {
        throw ContractViolation("action " + std::string(to_string(a)) + " is not allowed in state " +
                                to_string(s));
    }

    std::vector<QueueEnergy> block;
    switch (a) {
    case Action::Idle: block = idle_block(s, params); break;
    case Action::Transmit:
        block = send_block(s, params, params.tx_packets, params.sigma, s.energy - params.tx_energy);
        break;
    case Action::Harvest: block = harvest_block(s, params); break;
    case Action::Backscatter:
        block = send_block(s, params, params.bs_packets, params.beta, s.energy);
        break;
    }

    TransitionRow row;
    row.entries.reserve(2 * block.size());
    for (int next_channel = 0; next_channel <= 1; ++next_channel) {
        const double channel_p = next_channel == 0 ? params.eta : 1.0 - params.eta;
        if (channel_p == 0.0) continue;
        for (const auto& qe : block) {
            row.entries.push_back({{next_channel, qe.queue, qe.energy}, channel_p * qe.probability});
        }
    }
    return row;
}

TransitionModel::TransitionModel(const ModelParams& params)
    : params_(params), space_(params), defined_(space_.size()),
      offsets_(space_.size() * kActionCount + 1, 0) {
    entries_.reserve(space_.size() * 16);
    for (std::size_t i = 0; i < space_.size(); ++i) {
        const State s = space_.state(i);
        const ActionSet actions = executable_actions(s, params_);
        defined_[i] = actions;
        for (Action a : kAllActions) {
            const std::size_t r = i * kActionCount + slot(a);
            offsets_[r] = entries_.size();
            if (!actions.contains(a)) continue;
            for (const auto& o :
                 transition_row(s, a, params_, ActionScope::Executable).entries) {
                entries_.push_back({space_.index(o.next), o.probability});
            }
        }
    }
    offsets_.back() = entries_.size();
}

std::span<const Transition> TransitionModel::row(std::size_t s, Action a) const {
    if (!has_row(s, a)) {
        throw ContractViolation("no transition row for action " + std::string(to_string(a)) +
                                " in state " + to_string(space_.state(s)));
    }
    const std::size_t r = s * kActionCount + slot(a);
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
}

void TransitionModel::write_csv(std::ostream& out) const {
    out << "source_index,action,dest_index,prob\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < num_states(); ++i) {
        for (Action a : defined_[i].to_vector()) {
            for (const auto& t : row(i, a)) {
                out << i << ',' << static_cast<int>(a) << ',' << t.next << ',' << t.probability
                    << '\n';
            }
        }
    }
}

TransitionModel build_transition_model(const ModelParams& params) {
    return TransitionModel(params);
}

} // namespace bsmdp
