#pragma once

#include "bsmdp/model.hpp"
#include "bsmdp/policy.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace bsmdp {

/// Per-state, per-action logits theta_{s,a}. Entries exist only for feasible
/// pairs; writes are clipped to [-theta_max, theta_max].
class ThetaParams {
public:
    static constexpr double kDefaultThetaMax = 20.0;

    explicit ThetaParams(const ModelParams& params, double theta_max = kDefaultThetaMax);

    std::size_t num_states() const noexcept { return values_.size(); }
    double theta_max() const noexcept { return theta_max_; }
    ActionSet feasible(std::size_t s) const { return feasible_.at(s); }

    /// Throws ContractViolation for an infeasible pair.
    double get(std::size_t s, Action a) const;
    void set(std::size_t s, Action a, double value);
    void add(std::size_t s, Action a, double delta) { set(s, a, get(s, a) + delta); }

    /// Raw per-state table; entries of infeasible actions are zero and unused.
    const std::array<double, kActionCount>& row(std::size_t s) const { return values_.at(s); }

    bool operator==(const ThetaParams&) const = default;

private:
    double theta_max_;
    std::vector<ActionSet> feasible_;
    std::vector<std::array<double, kActionCount>> values_;
};

using ActionDistribution = std::array<double, kActionCount>;

/// chi(s,.) = softmax of theta_{s,.} over the feasible set; infeasible
/// actions get exactly zero.
ActionDistribution softmax_policy(const ThetaParams& theta, std::size_t s);

/// Softmax policy for every state.
StochasticPolicy to_policy(const ThetaParams& theta);

/// grad chi(s,chosen) / chi(s,chosen) restricted to the theta_{s,.}
/// coordinates: indicator(a' == chosen) - chi(s,a') for feasible a', zero
/// otherwise.
ActionDistribution log_policy_gradient(const ThetaParams& theta, std::size_t s, Action chosen);

} // namespace bsmdp
