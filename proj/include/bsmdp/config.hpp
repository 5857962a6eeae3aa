#pragma once

#include "bsmdp/learner.hpp"
#include "bsmdp/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bsmdp {

/// Bad configuration text or values. The message names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Method { Optimal, Learner, Htt, BackscatterOnly, Random };

std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;
/// Comma-separated list, e.g. "optimal,htt".
std::vector<Method> parse_method_list(std::string_view list);

/// Where the learner restarts its episodes.
struct RecurrentChoice {
    enum Kind { Initial, Frequent, Fixed } kind = Initial;
    State state{0, 0, 0}; ///< used when kind == Fixed
};

enum class Evaluation { Exact, Simulated, Both };

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
};

struct SimulationSpec {
    std::uint64_t horizon = 1'000'000;
    std::optional<std::uint64_t> warmup;
    std::vector<std::uint64_t> seeds{1};
};

struct ExperimentSpec {
    ModelParams model;
    LearnerConfig learner;
    RecurrentChoice recurrent;
    bool episodic = false;
    SimulationSpec simulation;
    std::optional<SweepSpec> sweep;
    std::vector<Method> methods{Method::Optimal, Method::Learner, Method::Htt,
                                Method::BackscatterOnly, Method::Random};
    Evaluation evaluation = Evaluation::Both;
    std::filesystem::path output = "out";
    unsigned threads = 0; ///< 0 = hardware concurrency

    void validate() const;
};

/// Sets one model field by its configuration key (alpha, eta, beta, gamma,
/// sigma, D, E, d_t, d_b, e_t, e_h). Integer keys reject fractional values.
void set_model_parameter(ModelParams& params, std::string_view key, double value);
double get_model_parameter(const ModelParams& params, std::string_view key);

ExperimentSpec parse_config_text(std::string_view text);
ExperimentSpec parse_config(const std::filesystem::path& path);

/// Canonical JSON echo of a spec; parse_config_text(to_json(spec)) == spec.
std::string to_json(const ExperimentSpec& spec);

} // namespace bsmdp
