#pragma once

#include "bsmdp/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace bsmdp {

/// One destination of a transition row.
struct Outcome {
    State next;
    double probability = 0.0;
};

/// Next-state distribution of a single (state, action) pair. Destinations are
/// unique; coinciding cases are summed into one entry and zero-probability
/// outcomes are omitted.
struct TransitionRow {
    std::vector<Outcome> entries;

    double total() const noexcept;
    double probability_of(const State& next) const noexcept;
};

/// One-step kernel for (s, a). Next channel is idle with probability eta
/// independently of everything else; queue and energy follow the per-action
/// case analysis (arrival, mode success, full-queue and full-storage cases).
/// Throws ContractViolation if `a` is not allowed in `s` under `scope`.
TransitionRow transition_row(const State& s, Action a, const ModelParams& params,
                             ActionScope scope = ActionScope::Feasible);

/// Sparse kernel entry addressed by dense state index.
struct Transition {
    std::size_t next = 0;
    double probability = 0.0;
};

/// Per-action sparse row-stochastic kernel. Rows exist for every action in
/// `executable_actions(s)`; the MDP proper only uses the feasible subset.
class TransitionModel {
public:
    explicit TransitionModel(const ModelParams& params);

    const ModelParams& params() const noexcept { return params_; }
    const StateSpace& space() const noexcept { return space_; }
    std::size_t num_states() const noexcept { return space_.size(); }

    /// Actions with a stored row in state `s`.
    ActionSet defined_actions(std::size_t s) const { return defined_.at(s); }
    bool has_row(std::size_t s, Action a) const { return defined_.at(s).contains(a); }

    /// Throws ContractViolation if no row is stored for (s, a).
    std::span<const Transition> row(std::size_t s, Action a) const;

    /// Full kernel as "source_index,action,dest_index,prob" lines with a header.
    void write_csv(std::ostream& out) const;

private:
    ModelParams params_;
    StateSpace space_;
    std::vector<ActionSet> defined_;
    std::vector<std::size_t> offsets_; ///< (num_states * 4 + 1) row boundaries
    std::vector<Transition> entries_;
};

TransitionModel build_transition_model(const ModelParams& params);

} // namespace bsmdp
