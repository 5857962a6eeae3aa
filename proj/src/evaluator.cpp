#include "bsmdp/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace bsmdp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Index idx(std::size_t i) { return static_cast<Index>(i); }

std::string describe_states(const std::vector<std::size_t>& states, const StateSpace& space) {
    std::ostringstream os;
    os << '{';
    const std::size_t shown = std::min<std::size_t>(states.size(), 6);
    for (std::size_t i = 0; i < shown; ++i) os << (i ? " " : "") << to_string(space.state(states[i]));
    if (states.size() > shown) os << " ... " << states.size() << " states";
    os << '}';
    return os.str();
}

// Solves pi (I - P) = 0, sum pi = 1 for a single-closed-class stochastic matrix.
VectorXd solve_balance(const MatrixXd& P) {
    const Index n = P.rows();
    MatrixXd A = MatrixXd::Identity(n, n) - P;
    A.transposeInPlace();
    A.row(n - 1).setOnes();
    VectorXd rhs = VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    const Eigen::PartialPivLU<MatrixXd> lu(A);
    VectorXd pi = lu.solve(rhs);
    if (!pi.allFinite()) throw NumericalError("balance equations are singular");
    for (Index i = 0; i < n; ++i) {
        if (pi(i) < 0.0) {
            if (pi(i) < -1e-9) throw NumericalError("balance solve produced a negative probability");
            pi(i) = 0.0;
        }
    }
    return pi / pi.sum();
}

const ChainStructure& require_unichain(const ChainStructure& cs, const TransitionModel& model) {
    if (cs.closed.size() > 1) {
        throw StructureError("induced chain has " + std::to_string(cs.closed.size()) +
                             " closed classes; class " +
                             describe_states(cs.members(cs.closed[1]), model.space()) +
                             " is unreachable from " +
                             describe_states(cs.members(cs.closed[0]), model.space()));
    }
    return cs;
}

} // namespace

InducedChain induce_chain(const StochasticPolicy& policy, const TransitionModel& model) {
    const std::size_t n = model.num_states();
    if (policy.num_states() != n) throw ModelError("policy size does not match the model");
    InducedChain chain{MatrixXd::Zero(idx(n), idx(n)), VectorXd::Zero(idx(n))};
    const auto& params = model.params();
    for (std::size_t s = 0; s < n; ++s) {
        const State st = model.space().state(s);
        for (Action a : kAllActions) {
            const double chi = policy.probability(s, a);
            if (chi == 0.0) continue;
            chain.reward(idx(s)) += chi * immediate_throughput(st, a, params, ActionScope::Executable);
            for (const auto& t : model.row(s, a)) chain.transition(idx(s), idx(t.next)) += chi * t.probability;
        }
    }
    return chain;
}

bool ChainStructure::aperiodic() const noexcept {
    return std::all_of(closed_periods.begin(), closed_periods.end(),
                       [](std::size_t p) { return p == 1; });
}

std::vector<std::size_t> ChainStructure::members(std::size_t component_id) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < component.size(); ++s)
        if (component[s] == component_id) out.push_back(s);
    return out;
}

bool ChainStructure::recurrent(std::size_t state) const {
    return std::find(closed.begin(), closed.end(), component.at(state)) != closed.end();
}

ChainStructure analyze_chain(const MatrixXd& P) {
    const auto n = static_cast<std::size_t>(P.rows());
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (P(idx(u), idx(v)) > 0.0) adj[u].push_back(v);

    // Iterative Tarjan.
    constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> order(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call; // (node, next edge)
    std::size_t counter = 0, n_comp = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (order[root] != kUnvisited) continue;
        call.emplace_back(root, 0);
        order[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [u, e] = call.back();
            if (e < adj[u].size()) {
                const std::size_t v = adj[u][e++];
                if (order[v] == kUnvisited) {
                    order[v] = low[v] = counter++;
                    stack.push_back(v);
                    on_stack[v] = true;
                    call.emplace_back(v, 0);
                } else if (on_stack[v]) {
                    low[u] = std::min(low[u], order[v]);
                }
                continue;
            }
            const std::size_t done = u;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == order[done]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_comp;
                } while (w != done);
                ++n_comp;
            }
        }
    }

    ChainStructure cs;
    cs.component = comp;
    cs.num_components = n_comp;
    std::vector<bool> leaks(n_comp, false);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v : adj[u])
            if (comp[u] != comp[v]) leaks[comp[u]] = true;

    for (std::size_t c = 0; c < n_comp; ++c) {
        if (leaks[c]) continue;
        cs.closed.push_back(c);
        // Period = gcd over in-class edges of (level(u) + 1 - level(v)).
        std::vector<long> level(n, -1);
        std::size_t root = 0;
        while (comp[root] != c) ++root;
        std::queue<std::size_t> bfs;
        bfs.push(root);
        level[root] = 0;
        long g = 0;
        while (!bfs.empty()) {
            const std::size_t u = bfs.front();
            bfs.pop();
            for (std::size_t v : adj[u]) {
                if (level[v] < 0) {
                    level[v] = level[u] + 1;
                    bfs.push(v);
                } else {
                    g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
                }
            }
        }
        cs.closed_periods.push_back(static_cast<std::size_t>(g == 0 ? 1 : g));
    }
    // Closed classes in ascending order of their smallest state.
    std::sort(cs.closed.begin(), cs.closed.end(), [&](std::size_t a, std::size_t b) {
        return cs.members(a).front() < cs.members(b).front();
    });
    return cs;
}

ChainStructure analyze_chain(const StochasticPolicy& policy, const TransitionModel& model) {
    return analyze_chain(induce_chain(policy, model).transition);
}

double StationaryDistribution::balance_residual(const MatrixXd& transition) const {
    return (transition.transpose() * pi - pi).cwiseAbs().maxCoeff();
}

StationaryDistribution stationary_distribution(const StochasticPolicy& policy,
                                               const TransitionModel& model) {
    const InducedChain chain = induce_chain(policy, model);
    require_unichain(analyze_chain(chain.transition), model);
    return {solve_balance(chain.transition)};
}

StationaryDistribution stationary_distribution_power(const StochasticPolicy& policy,
                                                     const TransitionModel& model, double tolerance,
                                                     std::size_t max_iterations) {
    const InducedChain chain = induce_chain(policy, model);
    require_unichain(analyze_chain(chain.transition), model);
    const Index n = chain.transition.rows();
    const MatrixXd lazy_t =
        0.5 * (MatrixXd::Identity(n, n) + chain.transition).transpose();
    VectorXd pi = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    for (std::size_t it = 0; it < max_iterations; ++it) {
        VectorXd next = lazy_t * pi;
        next /= next.sum();
        const double delta = (next - pi).cwiseAbs().sum();
        pi = std::move(next);
        if (delta < tolerance) return {pi};
    }
    throw NumericalError("power iteration did not converge within " +
                         std::to_string(max_iterations) + " iterations");
}

Eigen::VectorXd limiting_distribution(const StochasticPolicy& policy, const TransitionModel& model,
                                      const State& initial) {
    const InducedChain chain = induce_chain(policy, model);
    const ChainStructure cs = analyze_chain(chain.transition);
    const std::size_t n = model.num_states();
    const std::size_t start = model.space().index(initial);

    std::vector<std::size_t> transient;
    for (std::size_t s = 0; s < n; ++s)
        if (!cs.recurrent(s)) transient.push_back(s);

    // Absorption probabilities from `start` into each closed class.
    std::vector<double> weight(cs.closed.size(), 0.0);
    if (cs.recurrent(start)) {
        for (std::size_t k = 0; k < cs.closed.size(); ++k)
            if (cs.closed[k] == cs.component[start]) weight[k] = 1.0;
    } else {
        const Index t = idx(transient.size());
        MatrixXd A = MatrixXd::Identity(t, t);
        MatrixXd B = MatrixXd::Zero(t, idx(cs.closed.size()));
        std::size_t start_pos = 0;
        for (Index i = 0; i < t; ++i) {
            const std::size_t s = transient[static_cast<std::size_t>(i)];
            if (s == start) start_pos = static_cast<std::size_t>(i);
            for (Index j = 0; j < t; ++j) A(i, j) -= chain.transition(idx(s), idx(transient[static_cast<std::size_t>(j)]));
            for (std::size_t k = 0; k < cs.closed.size(); ++k)
                for (std::size_t v : cs.members(cs.closed[k])) B(i, idx(k)) += chain.transition(idx(s), idx(v));
        }
        const MatrixXd H = Eigen::PartialPivLU<MatrixXd>(A).solve(B);
        if (!H.allFinite()) throw NumericalError("absorption probabilities are singular");
        for (std::size_t k = 0; k < cs.closed.size(); ++k) weight[k] = H(idx(start_pos), idx(k));
    }

    VectorXd pi = VectorXd::Zero(idx(n));
    for (std::size_t k = 0; k < cs.closed.size(); ++k) {
        if (weight[k] <= 0.0) continue;
        const std::vector<std::size_t> members = cs.members(cs.closed[k]);
        const Index m = idx(members.size());
        MatrixXd sub(m, m);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                sub(i, j) = chain.transition(idx(members[static_cast<std::size_t>(i)]),
                                             idx(members[static_cast<std::size_t>(j)]));
        const VectorXd local = solve_balance(sub);
        for (Index i = 0; i < m; ++i) pi(idx(members[static_cast<std::size_t>(i)])) += weight[k] * local(i);
    }
    return pi / pi.sum();
}

double average_throughput_exact(const StochasticPolicy& policy, const TransitionModel& model) {
    const InducedChain chain = induce_chain(policy, model);
    require_unichain(analyze_chain(chain.transition), model);
    return solve_balance(chain.transition).dot(chain.reward);
}

double average_throughput_from(const StochasticPolicy& policy, const TransitionModel& model,
                               const State& initial) {
    return limiting_distribution(policy, model, initial).dot(induce_chain(policy, model).reward);
}

OccupancyMeasure occupancy_from(const StochasticPolicy& policy, const Eigen::VectorXd& pi) {
    OccupancyMeasure occ;
    occ.psi.resize(policy.num_states());
    for (std::size_t s = 0; s < policy.num_states(); ++s)
        for (std::size_t k = 0; k < kActionCount; ++k) occ.psi[s][k] = pi(idx(s)) * policy.at(s)[k];
    return occ;
}

AnalyticMetrics policy_metrics(const StochasticPolicy& policy, const TransitionModel& model,
                               const State& initial) {
    return analytic_metrics(occupancy_from(policy, limiting_distribution(policy, model, initial)),
                            model.params());
}

double DifferentialThroughput::bellman_residual(const InducedChain& chain) const {
    const VectorXd rhs = chain.reward - VectorXd::Constant(values.size(), average) +
                         chain.transition * values;
    return (values - rhs).cwiseAbs().maxCoeff();
}

DifferentialThroughput differential_throughput(const StochasticPolicy& policy,
                                               const TransitionModel& model,
                                               const State& recurrent_state) {
    const InducedChain chain = induce_chain(policy, model);
    const ChainStructure cs = analyze_chain(chain.transition);
    require_unichain(cs, model);
    const std::size_t anchor = model.space().index(recurrent_state);
    if (!cs.recurrent(anchor)) {
        throw StructureError("anchor state " + to_string(recurrent_state) +
                             " is transient under this policy");
    }

    DifferentialThroughput out;
    out.anchor = anchor;
    out.average = solve_balance(chain.transition).dot(chain.reward);

    // Drop the anchor's row and column: (I - P_{-a}) d_{-a} = r_{-a} - xi.
    const Index n = chain.transition.rows();
    const Index a = idx(anchor);
    std::vector<Index> keep;
    for (Index i = 0; i < n; ++i)
        if (i != a) keep.push_back(i);
    const Index m = n - 1;
    MatrixXd A(m, m);
    VectorXd rhs(m);
    for (Index i = 0; i < m; ++i) {
        const Index si = keep[static_cast<std::size_t>(i)];
        rhs(i) = chain.reward(si) - out.average;
        for (Index j = 0; j < m; ++j)
            A(i, j) = (i == j ? 1.0 : 0.0) - chain.transition(si, keep[static_cast<std::size_t>(j)]);
    }
    const Eigen::PartialPivLU<MatrixXd> lu(A);
    const VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) throw NumericalError("differential-throughput system is singular");
    out.values = VectorXd::Zero(n);
    for (Index i = 0; i < m; ++i) out.values(keep[static_cast<std::size_t>(i)]) = sol(i);
    return out;
}

QValues q_values(const StochasticPolicy& policy, const TransitionModel& model,
                 const State& recurrent_state) {
    const DifferentialThroughput d = differential_throughput(policy, model, recurrent_state);
    const auto& params = model.params();
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    QValues q(model.num_states(), {kNaN, kNaN, kNaN, kNaN});
    for (std::size_t s = 0; s < model.num_states(); ++s) {
        const State st = model.space().state(s);
        for (Action a : model.defined_actions(s).to_vector()) {
            double future = 0.0;
            for (const auto& t : model.row(s, a)) future += t.probability * d.values(idx(t.next));
            q[s][slot(a)] = immediate_throughput(st, a, params, ActionScope::Executable) - d.average + future;
        }
    }
    return q;
}

GradientVector policy_gradient_exact(const ThetaParams& theta, const TransitionModel& model,
                                     const State& recurrent_state) {
    const StochasticPolicy policy = to_policy(theta);
    const StationaryDistribution pi = stationary_distribution(policy, model);
    const QValues q = q_values(policy, model, recurrent_state);
    GradientVector grad(model.num_states(), {0.0, 0.0, 0.0, 0.0});
    for (std::size_t s = 0; s < model.num_states(); ++s) {
        const ActionDistribution chi = policy.at(s);
        // d chi(s,a) / d theta_{s,b} = chi(s,a) (1[a=b] - chi(s,b))
        for (Action b : theta.feasible(s).to_vector()) {
            double acc = 0.0;
            for (Action a : theta.feasible(s).to_vector()) {
                const double dchi = chi[slot(a)] * ((a == b ? 1.0 : 0.0) - chi[slot(b)]);
                acc += dchi * q[s][slot(a)];
            }
            grad[s][slot(b)] = pi.pi(idx(s)) * acc;
        }
    }
    return grad;
}

GradientVector policy_gradient_direct(const ThetaParams& theta, const TransitionModel& model,
                                      const State& recurrent_state) {
    const StochasticPolicy policy = to_policy(theta);
    const InducedChain chain = induce_chain(policy, model);
    const DifferentialThroughput d = differential_throughput(policy, model, recurrent_state);
    const VectorXd pi = solve_balance(chain.transition);
    const VectorXd expected_next = chain.transition * d.values;
    const auto& params = model.params();

    GradientVector grad(model.num_states(), {0.0, 0.0, 0.0, 0.0});
    for (std::size_t s = 0; s < model.num_states(); ++s) {
        const State st = model.space().state(s);
        for (Action b : theta.feasible(s).to_vector()) {
            const double chi_b = policy.probability(s, b);
            // grad r(s) and grad P(s,.) along theta_{s,b}
            const double grad_reward = chi_b * (immediate_throughput(st, b, params) - chain.reward(idx(s)));
            double row_b = 0.0;
            for (const auto& t : model.row(s, b)) row_b += t.probability * d.values(idx(t.next));
            const double grad_future = chi_b * (row_b - expected_next(idx(s)));
            grad[s][slot(b)] = pi(idx(s)) * (grad_reward + grad_future);
        }
    }
    return grad;
}

} // namespace bsmdp
