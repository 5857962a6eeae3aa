#include "bsmdp/evaluator.hpp"
#include "bsmdp/learner.hpp"
#include "bsmdp/planner.hpp"
#include "bsmdp/simulator.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bsmdp;

namespace {

using Table = py::array_t<double, py::array::c_style | py::array::forcecast>;
using StateTuple = std::tuple<int, int, int>;

State to_state(const StateTuple& t) { return {std::get<0>(t), std::get<1>(t), std::get<2>(t)}; }
StateTuple from_state(const State& s) { return {s.channel, s.queue, s.energy}; }

Table to_array(const StochasticPolicy& policy) {
    Table out({policy.num_states(), kActionCount});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t s = 0; s < policy.num_states(); ++s)
        for (std::size_t k = 0; k < kActionCount; ++k) view(s, k) = policy.at(s)[k];
    return out;
}

StochasticPolicy from_array(const Table& table, const ModelParams& params) {
    const StateSpace space(params);
    if (table.ndim() != 2 || static_cast<std::size_t>(table.shape(0)) != space.size() ||
        table.shape(1) != static_cast<py::ssize_t>(kActionCount))
        throw py::value_error("policy must have shape (num_states, 4)");
    auto view = table.unchecked<2>();
    StochasticPolicy policy(space.size());
    for (std::size_t s = 0; s < space.size(); ++s)
        for (std::size_t k = 0; k < kActionCount; ++k) policy.at(s)[k] = view(s, k);
    policy.validate(params, ActionScope::Executable);
    return policy;
}

py::dict metrics_dict(const AnalyticMetrics& m) {
    py::dict d;
    d["throughput"] = m.throughput;
    d["mean_queue"] = m.mean_queue;
    d["delay"] = m.delay ? py::cast(*m.delay) : py::none();
    d["blocking"] = m.blocking;
    return d;
}

Baseline parse_baseline(const std::string& name) {
    if (name == "htt") return Baseline::Htt;
    if (name == "backscatter") return Baseline::BackscatterOnly;
    if (name == "random") return Baseline::Random;
    throw py::value_error("unknown baseline '" + name + "' (htt, backscatter, random)");
}

py::dict solve(const ModelParams& params) {
    const TransitionModel model(params);
    const OptimalSolution sol = solve_optimal(model);
    Table occupancy({model.num_states(), kActionCount});
    auto view = occupancy.mutable_unchecked<2>();
    for (std::size_t s = 0; s < model.num_states(); ++s)
        for (std::size_t k = 0; k < kActionCount; ++k) view(s, k) = sol.occupancy.psi[s][k];
    py::dict d = metrics_dict(sol.metrics);
    d["objective"] = sol.objective;
    d["policy"] = to_array(sol.policy);
    d["occupancy"] = occupancy;
    return d;
}

py::dict evaluate(const ModelParams& params, const Table& table, const StateTuple& initial) {
    const TransitionModel model(params);
    return metrics_dict(policy_metrics(from_array(table, params), model, to_state(initial)));
}

py::dict simulate(const ModelParams& params, const Table& table, std::uint64_t horizon, std::uint64_t seed,
                  std::optional<std::uint64_t> warmup) {
    SimConfig cfg;
    cfg.params = params;
    cfg.horizon = horizon;
    cfg.seed = seed;
    cfg.warmup = warmup;
    const StochasticPolicy policy = from_array(table, params);
    RunMetrics m;
    {
        py::gil_scoped_release release;
        m = run_policy(policy, cfg);
    }
    py::dict d;
    d["throughput"] = m.throughput;
    d["mean_queue"] = m.mean_queue;
    d["delay"] = m.delay ? py::cast(*m.delay) : py::none();
    d["blocking"] = m.blocking;
    d["blocking_stderr"] = m.blocking_stderr;
    d["slots"] = m.slots;
    d["arrivals"] = m.arrivals;
    d["drops"] = m.drops;
    return d;
}

py::dict train(const ModelParams& params, std::uint64_t horizon, std::uint64_t seed, double rho0, double rho_decay,
               std::uint64_t rho_period, double nu, const py::object& recurrent_state, bool episodic,
               std::uint64_t checkpoint_every) {
    const TransitionModel model(params);
    LearnerConfig cfg;
    cfg.horizon = horizon;
    cfg.seed = seed;
    cfg.rho0 = rho0;
    cfg.rho_decay = rho_decay;
    cfg.rho_period = rho_period;
    cfg.nu = nu;
    cfg.checkpoint_every = checkpoint_every;
    const ThetaParams theta0(params);
    if (py::isinstance<py::str>(recurrent_state)) {
        const auto name = recurrent_state.cast<std::string>();
        if (name == "frequent") cfg.recurrent_state = suggest_recurrent_state(theta0, model);
        else if (name != "initial") throw py::value_error("recurrent_state must be 'initial', 'frequent' or (c, d, e)");
    } else if (!recurrent_state.is_none()) {
        cfg.recurrent_state = to_state(recurrent_state.cast<StateTuple>());
    }
    Environment env(params, seed);
    std::optional<TrainResult> result;
    {
        py::gil_scoped_release release;
        result = episodic ? episodic_train(cfg, env, theta0) : per_step_train(cfg, env, theta0);
    }
    const TrainResult& r = *result;
    const StochasticPolicy policy = to_policy(r.theta);
    py::list curve;
    for (const Checkpoint& c : r.trace.checkpoints)
        curve.append(py::make_tuple(c.step, c.xi_tilde, c.xi_exact ? py::cast(*c.xi_exact) : py::none()));
    py::dict d;
    d["policy"] = to_array(policy);
    d["xi_tilde"] = r.xi_tilde;
    d["xi_exact"] = average_throughput_from(policy, model, {0, 0, 0});
    d["episodes"] = r.episodes;
    d["recurrent_state"] = from_state(r.recurrent_state);
    d["curve"] = curve;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Average-throughput MDP of an energy-harvesting backscatter transmitter";

    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<LpError>(m, "LpError", PyExc_RuntimeError);
    py::register_exception<StructureError>(m, "StructureError", PyExc_RuntimeError);
    py::register_exception<LearningError>(m, "LearningError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double alpha, double eta, double beta, double gamma, double sigma, int D, int E, int d_t,
                         int d_b, int e_t, int e_h) {
                 ModelParams p{alpha, eta, beta, gamma, sigma, D, E, d_t, d_b, e_t, e_h};
                 p.validate();
                 return p;
             }),
             py::kw_only(), py::arg("alpha") = 0.5, py::arg("eta") = 0.5, py::arg("beta") = 0.9,
             py::arg("gamma") = 0.9, py::arg("sigma") = 0.9, py::arg("D") = 10, py::arg("E") = 10,
             py::arg("d_t") = 2, py::arg("d_b") = 1, py::arg("e_t") = 1, py::arg("e_h") = 1)
        .def_readwrite("alpha", &ModelParams::alpha)
        .def_readwrite("eta", &ModelParams::eta)
        .def_readwrite("beta", &ModelParams::beta)
        .def_readwrite("gamma", &ModelParams::gamma)
        .def_readwrite("sigma", &ModelParams::sigma)
        .def_readwrite("D", &ModelParams::max_queue)
        .def_readwrite("E", &ModelParams::max_energy)
        .def_readwrite("d_t", &ModelParams::tx_packets)
        .def_readwrite("d_b", &ModelParams::bs_packets)
        .def_readwrite("e_t", &ModelParams::tx_energy)
        .def_readwrite("e_h", &ModelParams::harvest_energy)
        .def("validate", &ModelParams::validate)
        .def_property_readonly("num_states", [](const ModelParams& p) { return StateSpace(p).size(); })
        .def("index", [](const ModelParams& p, const StateTuple& s) { return StateSpace(p).index(to_state(s)); })
        .def("state", [](const ModelParams& p, std::size_t i) { return from_state(StateSpace(p).state(i)); })
        .def("__repr__", [](const ModelParams& p) {
            return "ModelParams(alpha=" + std::to_string(p.alpha) + ", eta=" + std::to_string(p.eta) +
                   ", D=" + std::to_string(p.max_queue) + ", E=" + std::to_string(p.max_energy) + ")";
        });

    m.attr("ACTIONS") = py::make_tuple("idle", "transmit", "harvest", "backscatter");

    m.def("solve", &solve, py::arg("params"), "Optimal policy, occupancy measure and metrics from the LP.");
    m.def("baseline", [](const ModelParams& p, const std::string& name) { return to_array(baseline_policy(parse_baseline(name), p)); },
          py::arg("params"), py::arg("name"));
    m.def("evaluate", &evaluate, py::arg("params"), py::arg("policy"), py::arg("initial") = StateTuple{0, 0, 0},
          "Exact long-run metrics of a (num_states, 4) policy table.");
    m.def("simulate", &simulate, py::arg("params"), py::arg("policy"), py::arg("horizon") = 1'000'000,
          py::arg("seed") = 1, py::arg("warmup") = py::none());
    m.def("train", &train, py::arg("params"), py::kw_only(), py::arg("horizon") = 500'000, py::arg("seed") = 1,
          py::arg("rho0") = 1e-5, py::arg("rho_decay") = 0.9, py::arg("rho_period") = 18'000, py::arg("nu") = 0.01,
          py::arg("recurrent_state") = py::none(), py::arg("episodic") = false,
          py::arg("checkpoint_every") = 10'000);
}
