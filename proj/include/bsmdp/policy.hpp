#pragma once

#include "bsmdp/model.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace bsmdp {

/// Per-state distribution over the four actions, indexed by `slot(Action)`.
/// Produced by LP extraction, the softmax parameterization, or a baseline rule.
class StochasticPolicy {
public:
    using Distribution = std::array<double, kActionCount>;

    StochasticPolicy() = default;
    explicit StochasticPolicy(std::size_t num_states) : table_(num_states, Distribution{}) {}

    std::size_t num_states() const noexcept { return table_.size(); }

    const Distribution& at(std::size_t s) const { return table_.at(s); }
    Distribution& at(std::size_t s) { return table_.at(s); }
    double probability(std::size_t s, Action a) const { return table_.at(s)[slot(a)]; }

    /// Checks nonnegativity, unit row sums (within `tol`) and that the support
    /// of each row lies in the allowed action set. Throws ModelError.
    void validate(const ModelParams& params, ActionScope scope, double tol = 1e-9) const;

    /// Rows "c,d,e,action,probability" for every positive entry.
    void write_csv(std::ostream& out, const ModelParams& params) const;
    static StochasticPolicy read_csv(std::istream& in, const ModelParams& params);

    /// Every feasible action with equal probability.
    static StochasticPolicy uniform(const ModelParams& params);

private:
    std::vector<Distribution> table_;
};

} // namespace bsmdp
