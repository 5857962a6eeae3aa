#pragma once

#include "bsmdp/evaluator.hpp"
#include "bsmdp/model.hpp"
#include "bsmdp/policy.hpp"
#include "bsmdp/transitions.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace testing {

inline bsmdp::ModelParams tiny_params() {
    bsmdp::ModelParams p;
    p.max_queue = 1;
    p.max_energy = 1;
    p.tx_packets = 1;
    p.bs_packets = 1;
    p.tx_energy = 1;
    p.harvest_energy = 1;
    return p;
}

// Probabilities strictly inside (0,1), small capacities.
inline bsmdp::ModelParams random_params(std::mt19937_64& rng, bool unit_energy_steps = false,
                                        int max_capacity = 8) {
    std::uniform_real_distribution<double> prob(0.01, 0.99);
    auto upto = [&](int n) { return 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    bsmdp::ModelParams p;
    p.alpha = prob(rng);
    p.eta = prob(rng);
    p.beta = prob(rng);
    p.gamma = prob(rng);
    p.sigma = prob(rng);
    p.max_queue = upto(max_capacity);
    p.max_energy = upto(max_capacity);
    p.tx_packets = upto(p.max_queue);
    p.bs_packets = upto(p.max_queue);
    p.tx_energy = unit_energy_steps ? 1 : upto(p.max_energy);
    p.harvest_energy = unit_energy_steps ? 1 : upto(p.max_energy);
    return p;
}

// Calls f with every deterministic policy over the feasible sets.
inline void for_each_deterministic_policy(const bsmdp::ModelParams& params,
                                          const std::function<void(const bsmdp::StochasticPolicy&)>& f) {
    const bsmdp::StateSpace space(params);
    std::vector<std::vector<bsmdp::Action>> options;
    for (std::size_t s = 0; s < space.size(); ++s)
        options.push_back(bsmdp::feasible_actions(space.state(s), params).to_vector());
    std::vector<std::size_t> choice(space.size(), 0);
    for (;;) {
        bsmdp::StochasticPolicy policy(space.size());
        for (std::size_t s = 0; s < space.size(); ++s)
            policy.at(s)[bsmdp::slot(options[s][choice[s]])] = 1.0;
        f(policy);
        std::size_t k = 0;
        while (k < choice.size() && ++choice[k] == options[k].size()) choice[k++] = 0;
        if (k == choice.size()) return;
    }
}

// Upper quantile of chi-square with `dof` degrees of freedom (Wilson-Hilferty).
inline double chi_square_quantile(double dof, double z) {
    const double h = 2.0 / (9.0 * dof);
    const double c = 1.0 - h + z * std::sqrt(h);
    return dof * c * c * c;
}

} // namespace testing
