#include "bsmdp/experiment.hpp"

#include "bsmdp/evaluator.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace bsmdp {

namespace fs = std::filesystem;

std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 10);
    return std::string(buf, res.ptr);
}

namespace {

std::string optional_number(const std::optional<double>& x) {
    return x ? format_number(*x) : std::string();
}

std::string optional_count(const std::optional<std::uint64_t>& x) {
    return x ? std::to_string(*x) : std::string();
}

std::string value_label(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

struct Point {
    std::optional<double> value;
    ModelParams params;
};

std::vector<Point> sweep_points(const ExperimentSpec& spec) {
    if (!spec.sweep) return {{std::nullopt, spec.model}};
    std::vector<Point> points;
    for (double v : spec.sweep->values) {
        Point p{v, spec.model};
        set_model_parameter(p.params, spec.sweep->parameter, v);
        p.params.validate();
        points.push_back(p);
    }
    return points;
}

std::string point_suffix(const ExperimentSpec& spec, const Point& point) {
    if (!point.value) return "";
    return "_" + spec.sweep->parameter + "_" + value_label(*point.value);
}

void ensure_output(const ExperimentSpec& spec) { fs::create_directories(spec.output); }

template <class Writer>
void write_file(const ExperimentSpec& spec, const fs::path& name, FileList& files, Writer&& writer) {
    std::ofstream out(spec.output / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (spec.output / name).string());
    out.imbue(std::locale::classic());
    writer(out);
    if (!out) throw std::runtime_error("write failed for " + (spec.output / name).string());
    files.push_back(name);
}

MetricsRow exact_row(const Point& point, const ExperimentSpec& spec, Method method,
                     const AnalyticMetrics& m) {
    MetricsRow row;
    if (point.value) {
        row.sweep_parameter = spec.sweep->parameter;
        row.sweep_value = point.value;
    }
    row.method = method;
    row.estimate = "exact";
    row.throughput = m.throughput;
    row.mean_queue = m.mean_queue;
    row.delay = m.delay;
    row.blocking = m.blocking;
    return row;
}

std::vector<MetricsRow> simulated_rows(const Point& point, const ExperimentSpec& spec, Method method,
                                       const StochasticPolicy& policy) {
    std::vector<MetricsRow> rows;
    for (std::uint64_t seed : spec.simulation.seeds) {
        SimConfig cfg;
        cfg.params = point.params;
        cfg.horizon = spec.simulation.horizon;
        cfg.warmup = spec.simulation.warmup;
        cfg.seed = seed;
        const RunMetrics m = run_policy(policy, cfg);
        MetricsRow row;
        if (point.value) {
            row.sweep_parameter = spec.sweep->parameter;
            row.sweep_value = point.value;
        }
        row.method = method;
        row.estimate = "simulated";
        row.seed = seed;
        row.horizon = cfg.horizon;
        row.throughput = m.throughput;
        row.mean_queue = m.mean_queue;
        row.delay = m.delay;
        row.blocking = m.blocking;
        row.blocking_stderr = m.blocking_stderr;
        rows.push_back(row);
    }
    return rows;
}

struct MethodRun {
    StochasticPolicy policy;
    AnalyticMetrics exact;
    FileList files;
};

// Computes a method's policy at one point, writing its per-point artifacts.
MethodRun prepare_method(const ExperimentSpec& spec, const Point& point, Method method,
                         bool write_artifacts) {
    MethodRun run;
    const TransitionModel model(point.params);
    const std::string suffix = point_suffix(spec, point);
    if (method == Method::Optimal) {
        OptimalSolution sol = solve_optimal(model);
        run.policy = std::move(sol.policy);
        run.exact = sol.metrics;
        if (write_artifacts) {
            write_file(spec, "policy" + suffix + ".csv", run.files,
                       [&](std::ostream& out) { run.policy.write_csv(out, point.params); });
        }
        return run;
    }
    if (method == Method::Learner) {
        const TrainResult result = train_learner(spec, point.params);
        run.policy = to_policy(result.theta);
        if (write_artifacts) {
            write_file(spec, "learning" + suffix + ".csv", run.files,
                       [&](std::ostream& out) { result.trace.write_csv(out); });
            write_file(spec, "learned_policy" + suffix + ".csv", run.files,
                       [&](std::ostream& out) { run.policy.write_csv(out, point.params); });
        }
    } else {
        run.policy = method_policy(method, point.params);
    }
    run.exact = policy_metrics(run.policy, model);
    return run;
}

struct Task {
    std::size_t point;
    Method method;
};

std::vector<Task> all_tasks(const ExperimentSpec& spec, std::size_t num_points) {
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < num_points; ++p)
        for (Method m : spec.methods) tasks.push_back({p, m});
    return tasks;
}

void write_compare_csv(std::ostream& out, const std::vector<MetricsRow>& exact,
                       const std::vector<MetricsRow>& simulated) {
    out << "sweep_parameter,sweep_value,method,seed,horizon,metric,analytic,simulated,difference,"
           "stderr\n";
    for (const MetricsRow& sim : simulated) {
        const auto match = std::find_if(exact.begin(), exact.end(), [&](const MetricsRow& e) {
            return e.method == sim.method && e.sweep_value == sim.sweep_value;
        });
        if (match == exact.end()) continue;
        auto line = [&](const char* metric, double a, double s, const std::optional<double>& se) {
            out << sim.sweep_parameter << ',' << optional_number(sim.sweep_value) << ','
                << to_string(sim.method) << ',' << optional_count(sim.seed) << ','
                << optional_count(sim.horizon) << ',' << metric << ',' << format_number(a) << ','
                << format_number(s) << ',' << format_number(s - a) << ',' << optional_number(se)
                << '\n';
        };
        line("throughput", match->throughput, sim.throughput, std::nullopt);
        line("mean_queue", match->mean_queue, sim.mean_queue, std::nullopt);
        if (match->delay && sim.delay) line("delay", *match->delay, *sim.delay, std::nullopt);
        line("blocking", match->blocking, sim.blocking, sim.blocking_stderr);
    }
}

} // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "sweep_parameter,sweep_value,method,estimate,seed,horizon,throughput,mean_queue,delay,"
           "blocking,blocking_stderr\n";
    for (const MetricsRow& r : rows) {
        out << r.sweep_parameter << ',' << optional_number(r.sweep_value) << ','
            << to_string(r.method) << ',' << r.estimate << ',' << optional_count(r.seed) << ','
            << optional_count(r.horizon) << ',' << format_number(r.throughput) << ','
            << format_number(r.mean_queue) << ',' << optional_number(r.delay) << ','
            << format_number(r.blocking) << ',' << optional_number(r.blocking_stderr) << '\n';
    }
}

StochasticPolicy method_policy(Method method, const ModelParams& params) {
    switch (method) {
    case Method::Optimal: return solve_optimal(TransitionModel(params)).policy;
    case Method::Htt: return baseline_policy(Baseline::Htt, params);
    case Method::BackscatterOnly: return baseline_policy(Baseline::BackscatterOnly, params);
    case Method::Random: return baseline_policy(Baseline::Random, params);
    case Method::Learner: break;
    }
    throw ContractViolation("the learner policy requires training");
}

TrainResult train_learner(const ExperimentSpec& spec, const ModelParams& params) {
    LearnerConfig config = spec.learner;
    ThetaParams theta0(params, config.theta_max);
    switch (spec.recurrent.kind) {
    case RecurrentChoice::Initial: config.recurrent_state.reset(); break;
    case RecurrentChoice::Frequent:
        config.recurrent_state = suggest_recurrent_state(theta0, TransitionModel(params));
        break;
    case RecurrentChoice::Fixed: config.recurrent_state = spec.recurrent.state; break;
    }
    Environment env(params, config.seed);
    return spec.episodic ? episodic_train(config, env, std::move(theta0))
                         : per_step_train(config, env, std::move(theta0));
}

OptimalSolution run_solve(const ExperimentSpec& spec, FileList& files) {
    ensure_output(spec);
    const TransitionModel model(spec.model);
    OptimalSolution sol = solve_optimal(model);
    write_file(spec, "policy_map.csv", files,
               [&](std::ostream& out) { sol.policy.write_csv(out, spec.model); });
    write_file(spec, "occupancy.csv", files, [&](std::ostream& out) {
        out << "c,d,e,action,psi\n";
        for (std::size_t s = 0; s < sol.occupancy.psi.size(); ++s) {
            const State st = model.space().state(s);
            for (Action a : kAllActions) {
                const double v = sol.occupancy.at(s, a);
                if (v <= 0.0) continue;
                out << st.channel << ',' << st.queue << ',' << st.energy << ','
                    << static_cast<int>(a) << ',' << format_number(v) << '\n';
            }
        }
    });
    write_file(spec, "solve_metrics.csv", files, [&](std::ostream& out) {
        out << "objective,throughput,mean_queue,delay,blocking\n"
            << format_number(sol.objective) << ',' << format_number(sol.metrics.throughput) << ','
            << format_number(sol.metrics.mean_queue) << ',' << optional_number(sol.metrics.delay)
            << ',' << format_number(sol.metrics.blocking) << '\n';
    });
    return sol;
}

TrainResult run_train(const ExperimentSpec& spec, FileList& files) {
    ensure_output(spec);
    TrainResult result = train_learner(spec, spec.model);
    const TransitionModel model(spec.model);
    const StochasticPolicy policy = to_policy(result.theta);
    const double xi = average_throughput_from(policy, model, {0, 0, 0});
    const double optimum = solve_optimal(model).objective;
    write_file(spec, "learning_curve.csv", files,
               [&](std::ostream& out) { result.trace.write_csv(out); });
    write_file(spec, "learned_policy.csv", files,
               [&](std::ostream& out) { policy.write_csv(out, spec.model); });
    write_file(spec, "train_summary.csv", files, [&](std::ostream& out) {
        out << "algorithm,steps,episodes,recurrent_state,xi_tilde,xi_exact,lp_optimum\n"
            << (spec.episodic ? "episodic" : "per_step") << ',' << spec.learner.horizon << ','
            << result.episodes << ",\"" << to_string(result.recurrent_state) << "\","
            << format_number(result.xi_tilde) << ',' << format_number(xi) << ','
            << format_number(optimum) << '\n';
    });
    return result;
}

std::vector<MetricsRow> run_simulate(const ExperimentSpec& spec,
                                     const std::optional<fs::path>& policy_file, FileList& files) {
    ensure_output(spec);
    const Point point{std::nullopt, spec.model};
    std::vector<MetricsRow> rows;
    if (policy_file) {
        std::ifstream in(*policy_file);
        if (!in) throw std::runtime_error("cannot open policy file " + policy_file->string());
        const StochasticPolicy policy = StochasticPolicy::read_csv(in, spec.model);
        policy.validate(spec.model, ActionScope::Executable);
        // Rows from a policy file are labelled with the first configured method.
        rows = simulated_rows(point, spec, spec.methods.front(), policy);
    } else {
        std::vector<std::vector<MetricsRow>> parts(spec.methods.size());
        run_parallel(spec.methods.size(), spec.threads, [&](std::size_t i) {
            const MethodRun run = prepare_method(spec, point, spec.methods[i], false);
            parts[i] = simulated_rows(point, spec, spec.methods[i], run.policy);
        });
        for (auto& part : parts) rows.insert(rows.end(), part.begin(), part.end());
    }
    write_file(spec, "simulate.csv", files, [&](std::ostream& out) { write_metrics_csv(out, rows); });
    return rows;
}

std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec, FileList& files) {
    spec.validate();
    ensure_output(spec);
    const std::vector<Point> points = sweep_points(spec);
    const std::vector<Task> tasks = all_tasks(spec, points.size());
    std::vector<std::vector<MetricsRow>> results(tasks.size());
    std::vector<FileList> task_files(tasks.size());
    run_parallel(tasks.size(), spec.threads, [&](std::size_t i) {
        const Point& point = points[tasks[i].point];
        MethodRun run = prepare_method(spec, point, tasks[i].method, true);
        task_files[i] = std::move(run.files);
        if (spec.evaluation != Evaluation::Simulated)
            results[i].push_back(exact_row(point, spec, tasks[i].method, run.exact));
        if (spec.evaluation != Evaluation::Exact) {
            auto sim = simulated_rows(point, spec, tasks[i].method, run.policy);
            results[i].insert(results[i].end(), sim.begin(), sim.end());
        }
    });
    std::vector<MetricsRow> rows;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        rows.insert(rows.end(), results[i].begin(), results[i].end());
        files.insert(files.end(), task_files[i].begin(), task_files[i].end());
    }
    const std::string name = spec.sweep ? "sweep_" + spec.sweep->parameter + ".csv" : "experiment.csv";
    write_file(spec, name, files, [&](std::ostream& out) { write_metrics_csv(out, rows); });
    return rows;
}

std::vector<MetricsRow> run_compare(const ExperimentSpec& spec, FileList& files) {
    spec.validate();
    ensure_output(spec);
    const std::vector<Point> points = sweep_points(spec);
    const std::vector<Task> tasks = all_tasks(spec, points.size());
    std::vector<MetricsRow> exact(tasks.size());
    std::vector<std::vector<MetricsRow>> simulated(tasks.size());
    run_parallel(tasks.size(), spec.threads, [&](std::size_t i) {
        const Point& point = points[tasks[i].point];
        const MethodRun run = prepare_method(spec, point, tasks[i].method, false);
        exact[i] = exact_row(point, spec, tasks[i].method, run.exact);
        simulated[i] = simulated_rows(point, spec, tasks[i].method, run.policy);
    });
    std::vector<MetricsRow> rows;
    std::vector<MetricsRow> sims;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        rows.push_back(exact[i]);
        rows.insert(rows.end(), simulated[i].begin(), simulated[i].end());
        sims.insert(sims.end(), simulated[i].begin(), simulated[i].end());
    }
    write_file(spec, "compare.csv", files,
               [&](std::ostream& out) { write_compare_csv(out, exact, sims); });
    return rows;
}

std::string git_blob_sha1(const std::string& content) {
    std::string object = "blob " + std::to_string(content.size());
    object.push_back('\0');
    object += content;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(object.data(), object.size(), digest, &length, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("SHA-1 digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int i = 0; i < length; ++i) {
        const unsigned char byte = digest[i];
        hex.push_back(kHex[byte >> 4]);
        hex.push_back(kHex[byte & 0xf]);
    }
    return hex;
}

void write_manifest(const ExperimentSpec& spec, const std::string& command, const FileList& files) {
    ensure_output(spec);
    nlohmann::json doc;
    doc["command"] = command;
    doc["config"] = nlohmann::json::parse(to_json(spec));
    nlohmann::json entries = nlohmann::json::array();
    std::string listing;
    for (const fs::path& name : files) {
        std::ifstream in(spec.output / name, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        const std::string content = buf.str();
        const std::string sha = git_blob_sha1(content);
        entries.push_back({{"path", name.generic_string()}, {"bytes", content.size()}, {"sha1", sha}});
        listing += sha + "  " + name.generic_string() + "\n";
    }
    doc["files"] = entries;
    doc["content_hash"] = git_blob_sha1(listing);
    std::ofstream out(spec.output / "manifest.json", std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest.json");
}

void run_parallel(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace bsmdp
