#include "bsmdp/softmax_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bsmdp {

ThetaParams::ThetaParams(const ModelParams& params, double theta_max) : theta_max_(theta_max) {
    if (!(theta_max > 0.0) || !std::isfinite(theta_max))
        throw ModelError("theta_max must be positive and finite");
    const StateSpace space(params);
    feasible_.reserve(space.size());
    for (std::size_t s = 0; s < space.size(); ++s)
        feasible_.push_back(feasible_actions(space.state(s), params));
    values_.assign(space.size(), {0.0, 0.0, 0.0, 0.0});
}

double ThetaParams::get(std::size_t s, Action a) const {
    if (!feasible_.at(s).contains(a))
        throw ContractViolation("theta has no entry for " + std::string(to_string(a)) + " at state " +
                                std::to_string(s));
    return values_[s][slot(a)];
}

void ThetaParams::set(std::size_t s, Action a, double value) {
    if (!feasible_.at(s).contains(a))
        throw ContractViolation("theta has no entry for " + std::string(to_string(a)) + " at state " +
                                std::to_string(s));
    if (std::isnan(value)) throw ModelError("theta update produced NaN");
    values_[s][slot(a)] = std::clamp(value, -theta_max_, theta_max_);
}

ActionDistribution softmax_policy(const ThetaParams& theta, std::size_t s) {
    const ActionSet feasible = theta.feasible(s);
    const auto& logits = theta.row(s);
    double peak = -std::numeric_limits<double>::infinity();
    for (Action a : kAllActions)
        if (feasible.contains(a)) peak = std::max(peak, logits[slot(a)]);

    ActionDistribution chi{};
    double norm = 0.0;
    for (Action a : kAllActions) {
        if (!feasible.contains(a)) continue;
        chi[slot(a)] = std::exp(logits[slot(a)] - peak);
        norm += chi[slot(a)];
    }
    for (double& p : chi) p /= norm;
    return chi;
}

StochasticPolicy to_policy(const ThetaParams& theta) {
    StochasticPolicy policy(theta.num_states());
    for (std::size_t s = 0; s < theta.num_states(); ++s) policy.at(s) = softmax_policy(theta, s);
    return policy;
}

ActionDistribution log_policy_gradient(const ThetaParams& theta, std::size_t s, Action chosen) {
    const ActionSet feasible = theta.feasible(s);
    if (!feasible.contains(chosen))
        throw ContractViolation("chosen action " + std::string(to_string(chosen)) +
                                " is infeasible at state " + std::to_string(s));
    ActionDistribution grad = softmax_policy(theta, s);
    for (Action a : kAllActions) {
        if (!feasible.contains(a)) continue;
        grad[slot(a)] = (a == chosen ? 1.0 : 0.0) - grad[slot(a)];
    }
    return grad;
}

} // namespace bsmdp
