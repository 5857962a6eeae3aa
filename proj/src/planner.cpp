#include "bsmdp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bsmdp {

double OccupancyMeasure::total() const noexcept {
    double sum = 0.0;
    for (const auto& row : psi)
        for (double v : row) sum += v;
    return sum;
}

double OccupancyMeasure::objective(const TransitionModel& model) const {
    const auto& params = model.params();
    double value = 0.0;
    for (std::size_t s = 0; s < psi.size(); ++s) {
        const State st = model.space().state(s);
        for (Action a : feasible_actions(st, params).to_vector()) {
            value += psi[s][slot(a)] * immediate_throughput(st, a, params);
        }
    }
    return value;
}

double OccupancyMeasure::flow_balance_residual(const TransitionModel& model) const {
    std::vector<double> inflow(psi.size(), 0.0);
    for (std::size_t s = 0; s < psi.size(); ++s) {
        for (Action a : kAllActions) {
            const double mass = psi[s][slot(a)];
            if (mass == 0.0) continue;
            for (const auto& t : model.row(s, a)) inflow[t.next] += mass * t.probability;
        }
    }
    double worst = 0.0;
    for (std::size_t s = 0; s < psi.size(); ++s) {
        double outflow = 0.0;
        for (double v : psi[s]) outflow += v;
        worst = std::max(worst, std::abs(outflow - inflow[s]));
    }
    return worst;
}

OccupancyLp build_lp(const TransitionModel& model) {
    const auto& params = model.params();
    const std::size_t n_states = model.num_states();

    OccupancyLp lp;
    lp.num_states = n_states;
    for (std::size_t s = 0; s < n_states; ++s) {
        for (Action a : feasible_actions(model.space().state(s), params).to_vector()) {
            lp.columns.emplace_back(s, a);
        }
    }

    const auto n_cols = static_cast<Eigen::Index>(lp.columns.size());
    const auto n_rows = static_cast<Eigen::Index>(n_states); // (n_states - 1) balance + 1 normalization
    auto& prog = lp.program;
    prog.A = Eigen::MatrixXd::Zero(n_rows, n_cols);
    prog.b = Eigen::VectorXd::Zero(n_rows);
    prog.c = Eigen::VectorXd::Zero(n_cols);

    const auto last_balance = static_cast<std::size_t>(n_rows - 1);
    for (Eigen::Index j = 0; j < n_cols; ++j) {
        const auto [s, a] = lp.columns[static_cast<std::size_t>(j)];
        prog.c(j) = immediate_throughput(model.space().state(s), a, params);
        // Row s' carries sum_a psi(s',a) - sum_{s,a} psi(s,a) p(s'|s,a).
        if (s < last_balance) prog.A(static_cast<Eigen::Index>(s), j) += 1.0;
        for (const auto& t : model.row(s, a)) {
            if (t.next < last_balance) prog.A(static_cast<Eigen::Index>(t.next), j) -= t.probability;
        }
        prog.A(n_rows - 1, j) = 1.0;
    }
    prog.b(n_rows - 1) = 1.0;
    return lp;
}

OccupancyLp build_lp(const ModelParams& params) {
    return build_lp(build_transition_model(params));
}

OccupancyMeasure solve_lp(const OccupancyLp& lp, const TransitionModel& model, double tolerance,
                          const SimplexOptions& options) {
    const SimplexResult result = solve_simplex(lp.program, options);

    OccupancyMeasure occ;
    occ.psi.assign(lp.num_states, {0.0, 0.0, 0.0, 0.0});
    for (std::size_t j = 0; j < lp.columns.size(); ++j) {
        const auto [s, a] = lp.columns[j];
        occ.psi[s][slot(a)] = result.x(static_cast<Eigen::Index>(j));
    }

    const double norm_err = std::abs(occ.total() - 1.0);
    const double balance_err = occ.flow_balance_residual(model);
    if (norm_err > tolerance || balance_err > tolerance) {
        std::ostringstream os;
        os << "LP solution failed verification: |sum psi - 1| = " << norm_err
           << ", flow-balance residual = " << balance_err << " (tolerance " << tolerance
           << ", " << result.iterations << " pivots)";
        throw LpError(os.str());
    }
    return occ;
}

StochasticPolicy extract_policy(const OccupancyMeasure& psi, const ModelParams& params) {
    const StateSpace space(params);
    if (psi.psi.size() != space.size()) throw ModelError("occupancy measure does not match model size");
    constexpr double kZeroOccupancy = 1e-12;
    StochasticPolicy policy(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) {
        const ActionSet feasible = feasible_actions(space.state(s), params);
        double mass = 0.0;
        for (Action a : feasible.to_vector()) mass += std::max(psi.psi[s][slot(a)], 0.0);
        auto& row = policy.at(s);
        if (mass > kZeroOccupancy) {
            for (Action a : feasible.to_vector()) row[slot(a)] = std::max(psi.psi[s][slot(a)], 0.0) / mass;
        } else {
            for (Action a : feasible.to_vector())
                row[slot(a)] = 1.0 / static_cast<double>(feasible.size());
        }
    }
    return policy;
}

AnalyticMetrics analytic_metrics(const OccupancyMeasure& psi, const ModelParams& params) {
    const StateSpace space(params);
    AnalyticMetrics m;
    for (std::size_t s = 0; s < psi.psi.size(); ++s) {
        const State st = space.state(s);
        for (Action a : kAllActions) {
            const double mass = psi.psi[s][slot(a)];
            if (mass == 0.0) continue;
            m.mean_queue += st.queue * mass;
            if (a == Action::Transmit && st.queue >= params.tx_packets && st.energy >= params.tx_energy)
                m.throughput += params.sigma * params.tx_packets * mass;
            if (a == Action::Backscatter && st.queue >= params.bs_packets)
                m.throughput += params.beta * params.bs_packets * mass;
            if (st.queue == params.max_queue) {
                double drop = 1.0;
                if (a == Action::Transmit) drop = 1.0 - params.sigma;
                if (a == Action::Backscatter) drop = 1.0 - params.beta;
                m.blocking += mass * drop;
            }
        }
    }
    if (params.alpha == 0.0) m.blocking = 0.0;
    if (m.throughput > 0.0) m.delay = m.mean_queue / m.throughput;
    return m;
}

OptimalSolution solve_optimal(const TransitionModel& model, double tolerance) {
    OptimalSolution sol;
    sol.occupancy = solve_lp(build_lp(model), model, tolerance);
    sol.policy = extract_policy(sol.occupancy, model.params());
    sol.metrics = analytic_metrics(sol.occupancy, model.params());
    sol.objective = sol.occupancy.objective(model);
    return sol;
}

} // namespace bsmdp
