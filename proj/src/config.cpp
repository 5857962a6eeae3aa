#include "bsmdp/config.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bsmdp {

using nlohmann::json;

std::string_view to_string(Method m) noexcept {
    switch (m) {
    case Method::Optimal: return "optimal";
    case Method::Learner: return "learner";
    case Method::Htt: return "htt";
    case Method::BackscatterOnly: return "backscatter";
    case Method::Random: return "random";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
    for (Method m : {Method::Optimal, Method::Learner, Method::Htt, Method::BackscatterOnly,
                     Method::Random}) {
        if (name == to_string(m)) return m;
    }
    return std::nullopt;
}

std::vector<Method> parse_method_list(std::string_view list) {
    std::vector<Method> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = std::min(list.find(',', start), list.size());
        const std::string_view name = list.substr(start, comma - start);
        const auto m = parse_method(name);
        if (!m) throw ConfigError("unknown method '" + std::string(name) + "'");
        out.push_back(*m);
        start = comma + 1;
    }
    return out;
}

namespace {

const std::vector<std::string> kModelKeys{"alpha", "eta", "beta", "gamma", "sigma", "D",
                                          "E",     "d_t", "d_b",  "e_t",   "e_h"};

bool is_integer_key(std::string_view key) {
    return key == "D" || key == "E" || key == "d_t" || key == "d_b" || key == "e_t" || key == "e_h";
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config key '" + path + "': " + what);
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

std::uint64_t get_count(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) fail(path, "expected a non-negative integer");
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    fail(path, "expected a non-negative integer");
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

State get_state(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected [c, d, e]");
    State s;
    s.channel = static_cast<int>(get_count(v[0], path + "[0]"));
    s.queue = static_cast<int>(get_count(v[1], path + "[1]"));
    s.energy = static_cast<int>(get_count(v[2], path + "[2]"));
    return s;
}

void read_model(const json& obj, ModelParams& params) {
    reject_unknown(obj, "model", {kModelKeys.begin(), kModelKeys.end()});
    for (const auto& [key, value] : obj.items()) {
        const std::string path = "model." + key;
        const double x = is_integer_key(key) ? static_cast<double>(get_count(value, path))
                                             : get_number(value, path);
        set_model_parameter(params, key, x);
    }
    try {
        params.validate();
    } catch (const ModelError& e) {
        throw ConfigError(std::string("config section 'model': ") + e.what());
    }
}

void read_learner(const json& obj, ExperimentSpec& spec) {
    reject_unknown(obj, "learner",
                   {"rho0", "rho_decay", "rho_period", "nu", "recurrent_state", "horizon", "seed",
                    "theta_max", "xi0", "checkpoint_every", "exact_checkpoints", "algorithm",
                    "xi_reading", "reward"});
    LearnerConfig& c = spec.learner;
    auto path = [](const std::string& key) { return "learner." + key; };
    for (const auto& [key, v] : obj.items()) {
        if (key == "rho0") c.rho0 = get_number(v, path(key));
        else if (key == "rho_decay") c.rho_decay = get_number(v, path(key));
        else if (key == "rho_period") c.rho_period = get_count(v, path(key));
        else if (key == "nu") c.nu = get_number(v, path(key));
        else if (key == "horizon") c.horizon = get_count(v, path(key));
        else if (key == "seed") c.seed = get_count(v, path(key));
        else if (key == "theta_max") c.theta_max = get_number(v, path(key));
        else if (key == "xi0") c.xi0 = get_number(v, path(key));
        else if (key == "checkpoint_every") c.checkpoint_every = get_count(v, path(key));
        else if (key == "exact_checkpoints") c.exact_checkpoints = get_bool(v, path(key));
        else if (key == "recurrent_state") {
            if (v.is_string()) {
                const std::string name = v.get<std::string>();
                if (name == "initial") spec.recurrent.kind = RecurrentChoice::Initial;
                else if (name == "frequent") spec.recurrent.kind = RecurrentChoice::Frequent;
                else fail(path(key), "expected \"initial\", \"frequent\" or [c, d, e]");
            } else {
                spec.recurrent.kind = RecurrentChoice::Fixed;
                spec.recurrent.state = get_state(v, path(key));
            }
        } else if (key == "algorithm") {
            const std::string name = get_string(v, path(key));
            if (name == "per_step") spec.episodic = false;
            else if (name == "episodic") spec.episodic = true;
            else fail(path(key), "expected \"per_step\" or \"episodic\"");
        } else if (key == "xi_reading") {
            const std::string name = get_string(v, path(key));
            if (name == "per_step") c.xi_reading = XiSumReading::PerStep;
            else if (name == "episode_end") c.xi_reading = XiSumReading::EpisodeEnd;
            else fail(path(key), "expected \"per_step\" or \"episode_end\"");
        } else if (key == "reward") {
            const std::string name = get_string(v, path(key));
            if (name == "realized") c.reward = RewardSignal::Realized;
            else if (name == "expected") c.reward = RewardSignal::Expected;
            else fail(path(key), "expected \"realized\" or \"expected\"");
        }
    }
    try {
        c.validate();
    } catch (const ModelError& e) {
        throw ConfigError(std::string("config section 'learner': ") + e.what());
    }
}

void read_simulation(const json& obj, SimulationSpec& sim) {
    reject_unknown(obj, "simulation", {"horizon", "warmup", "seeds"});
    for (const auto& [key, v] : obj.items()) {
        const std::string path = "simulation." + key;
        if (key == "horizon") sim.horizon = get_count(v, path);
        else if (key == "warmup") sim.warmup = get_count(v, path);
        else if (key == "seeds") {
            if (!v.is_array() || v.empty()) fail(path, "expected a non-empty list of seeds");
            sim.seeds.clear();
            for (std::size_t i = 0; i < v.size(); ++i)
                sim.seeds.push_back(get_count(v[i], path + "[" + std::to_string(i) + "]"));
        }
    }
}

void read_sweep(const json& obj, ExperimentSpec& spec) {
    reject_unknown(obj, "sweep", {"parameter", "values"});
    if (!obj.contains("parameter")) fail("sweep.parameter", "missing");
    if (!obj.contains("values")) fail("sweep.values", "missing");
    SweepSpec sweep;
    sweep.parameter = get_string(obj["parameter"], "sweep.parameter");
    const json& values = obj["values"];
    if (!values.is_array() || values.empty()) fail("sweep.values", "expected a non-empty list");
    for (std::size_t i = 0; i < values.size(); ++i)
        sweep.values.push_back(get_number(values[i], "sweep.values[" + std::to_string(i) + "]"));
    spec.sweep = std::move(sweep);
}

} // namespace

void set_model_parameter(ModelParams& params, std::string_view key, double value) {
    auto count = [&]() {
        if (value != std::floor(value) || value < 0 || value > 1e6)
            throw ConfigError("model key '" + std::string(key) + "' must be a non-negative integer");
        return static_cast<int>(value);
    };
    if (key == "alpha") params.alpha = value;
    else if (key == "eta") params.eta = value;
    else if (key == "beta") params.beta = value;
    else if (key == "gamma") params.gamma = value;
    else if (key == "sigma") params.sigma = value;
    else if (key == "D") params.max_queue = count();
    else if (key == "E") params.max_energy = count();
    else if (key == "d_t") params.tx_packets = count();
    else if (key == "d_b") params.bs_packets = count();
    else if (key == "e_t") params.tx_energy = count();
    else if (key == "e_h") params.harvest_energy = count();
    else throw ConfigError("unknown model parameter '" + std::string(key) + "'");
}

double get_model_parameter(const ModelParams& params, std::string_view key) {
    if (key == "alpha") return params.alpha;
    if (key == "eta") return params.eta;
    if (key == "beta") return params.beta;
    if (key == "gamma") return params.gamma;
    if (key == "sigma") return params.sigma;
    if (key == "D") return params.max_queue;
    if (key == "E") return params.max_energy;
    if (key == "d_t") return params.tx_packets;
    if (key == "d_b") return params.bs_packets;
    if (key == "e_t") return params.tx_energy;
    if (key == "e_h") return params.harvest_energy;
    throw ConfigError("unknown model parameter '" + std::string(key) + "'");
}

void ExperimentSpec::validate() const {
    try {
        model.validate();
        learner.validate();
    } catch (const ModelError& e) {
        throw ConfigError(e.what());
    }
    if (methods.empty()) throw ConfigError("config key 'methods': at least one method is required");
    if (simulation.horizon == 0) throw ConfigError("config key 'simulation.horizon': must be positive");
    if (simulation.warmup && *simulation.warmup >= simulation.horizon)
        throw ConfigError("config key 'simulation.warmup': must be shorter than the horizon");
    if (simulation.seeds.empty()) throw ConfigError("config key 'simulation.seeds': empty");
    if (recurrent.kind == RecurrentChoice::Fixed && !StateSpace(model).contains(recurrent.state))
        throw ConfigError("config key 'learner.recurrent_state': " + to_string(recurrent.state) +
                          " is outside the state space");
    if (sweep) {
        for (std::size_t i = 0; i < sweep->values.size(); ++i) {
            ModelParams p = model;
            const std::string path = "sweep.values[" + std::to_string(i) + "]";
            try {
                set_model_parameter(p, sweep->parameter, sweep->values[i]);
                p.validate();
            } catch (const std::exception& e) {
                throw ConfigError("config key '" + path + "': " + e.what());
            }
            if (recurrent.kind == RecurrentChoice::Fixed && !StateSpace(p).contains(recurrent.state))
                throw ConfigError("config key '" + path + "': recurrent state leaves the state space");
        }
    }
}

ExperimentSpec parse_config_text(std::string_view text) {
    ExperimentSpec spec;
    bool blank = true;
    for (char ch : text) {
        if (!std::isspace(static_cast<unsigned char>(ch))) {
            blank = false;
            break;
        }
    }
    if (blank) return spec;

    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    reject_unknown(doc, "", {"model", "learner", "simulation", "sweep", "methods", "evaluation",
                             "output", "threads"});
    if (doc.contains("model")) read_model(doc["model"], spec.model);
    if (doc.contains("learner")) read_learner(doc["learner"], spec);
    if (doc.contains("simulation")) read_simulation(doc["simulation"], spec.simulation);
    if (doc.contains("sweep")) read_sweep(doc["sweep"], spec);
    if (doc.contains("methods")) {
        const json& v = doc["methods"];
        if (!v.is_array()) fail("methods", "expected a list of method names");
        spec.methods.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string path = "methods[" + std::to_string(i) + "]";
            const auto m = parse_method(get_string(v[i], path));
            if (!m) fail(path, "unknown method (optimal, learner, htt, backscatter, random)");
            spec.methods.push_back(*m);
        }
    }
    if (doc.contains("evaluation")) {
        const std::string name = get_string(doc["evaluation"], "evaluation");
        if (name == "exact") spec.evaluation = Evaluation::Exact;
        else if (name == "simulated") spec.evaluation = Evaluation::Simulated;
        else if (name == "both") spec.evaluation = Evaluation::Both;
        else fail("evaluation", "expected \"exact\", \"simulated\" or \"both\"");
    }
    if (doc.contains("output")) spec.output = get_string(doc["output"], "output");
    if (doc.contains("threads")) spec.threads = static_cast<unsigned>(get_count(doc["threads"], "threads"));
    spec.validate();
    return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config_text(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_json(const ExperimentSpec& spec) {
    json doc;
    json& model = doc["model"];
    for (const auto& key : kModelKeys) {
        const double v = get_model_parameter(spec.model, key);
        if (is_integer_key(key)) model[key] = static_cast<std::uint64_t>(v);
        else model[key] = v;
    }
    const LearnerConfig& c = spec.learner;
    json& learner = doc["learner"];
    learner["rho0"] = c.rho0;
    learner["rho_decay"] = c.rho_decay;
    learner["rho_period"] = c.rho_period;
    learner["nu"] = c.nu;
    learner["horizon"] = c.horizon;
    learner["seed"] = c.seed;
    learner["theta_max"] = c.theta_max;
    learner["xi0"] = c.xi0;
    learner["checkpoint_every"] = c.checkpoint_every;
    learner["exact_checkpoints"] = c.exact_checkpoints;
    learner["algorithm"] = spec.episodic ? "episodic" : "per_step";
    learner["xi_reading"] = c.xi_reading == XiSumReading::PerStep ? "per_step" : "episode_end";
    learner["reward"] = c.reward == RewardSignal::Realized ? "realized" : "expected";
    switch (spec.recurrent.kind) {
    case RecurrentChoice::Initial: learner["recurrent_state"] = "initial"; break;
    case RecurrentChoice::Frequent: learner["recurrent_state"] = "frequent"; break;
    case RecurrentChoice::Fixed:
        learner["recurrent_state"] = {spec.recurrent.state.channel, spec.recurrent.state.queue,
                                      spec.recurrent.state.energy};
        break;
    }
    json& sim = doc["simulation"];
    sim["horizon"] = spec.simulation.horizon;
    if (spec.simulation.warmup) sim["warmup"] = *spec.simulation.warmup;
    sim["seeds"] = spec.simulation.seeds;
    if (spec.sweep) {
        doc["sweep"]["parameter"] = spec.sweep->parameter;
        doc["sweep"]["values"] = spec.sweep->values;
    }
    json methods = json::array();
    for (Method m : spec.methods) methods.push_back(std::string(to_string(m)));
    doc["methods"] = methods;
    doc["evaluation"] = spec.evaluation == Evaluation::Exact       ? "exact"
                        : spec.evaluation == Evaluation::Simulated ? "simulated"
                                                                   : "both";
    doc["output"] = spec.output.generic_string();
    doc["threads"] = spec.threads;
    return doc.dump(2) + "\n";
}

} // namespace bsmdp
