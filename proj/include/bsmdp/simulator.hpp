#pragma once

#include "bsmdp/model.hpp"
#include "bsmdp/policy.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace bsmdp {

/// Independent, seedable uniform streams, one per event type, so adding a
/// draw of one kind never shifts the others.
class EventStreams {
public:
    enum Stream : std::size_t { Channel = 0, Arrival, Success, Policy, kStreamCount };

    explicit EventStreams(std::uint64_t seed);

    /// Uniform in [0, 1) with 53 random bits.
    double uniform(Stream stream) noexcept {
        return static_cast<double>(engines_[stream]() >> 11) * 0x1.0p-53;
    }

private:
    std::array<std::mt19937_64, kStreamCount> engines_;
};

/// Outcomes of the Bernoulli events of one slot. `success` is only consulted
/// for Transmit, Harvest and Backscatter.
struct EventDraws {
    bool success = false;
    bool arrival = false;
    bool next_channel_idle = false;
};

struct StepOutcome {
    State next;
    int delivered = 0;
    bool arrived = false;
    bool dropped = false;
};

/// Applies one slot: act, resolve mode success, admit an arrival into the
/// post-service queue (dropping it if the queue is still full), then draw the
/// next channel. Throws ContractViolation for a non-executable action.
StepOutcome env_step(const State& s, Action a, const ModelParams& params, const EventDraws& draws);
StepOutcome env_step(const State& s, Action a, const ModelParams& params, EventStreams& rng);

/// Index of the action drawn from `dist` with a uniform variate `u`.
Action sample_action(const std::array<double, kActionCount>& dist, double u);

/// Stateful environment used by the simulator and the online learners.
class Environment {
public:
    Environment(const ModelParams& params, std::uint64_t seed, const State& initial = {0, 0, 0});

    const ModelParams& params() const noexcept { return params_; }
    const State& state() const noexcept { return state_; }
    std::uint64_t slots() const noexcept { return slots_; }

    StepOutcome step(Action a);

private:
    ModelParams params_;
    EventStreams rng_;
    State state_;
    std::uint64_t slots_ = 0;
};

struct SimConfig {
    ModelParams params;
    std::uint64_t horizon = 1'000'000;
    std::uint64_t seed = 1;
    /// Slots excluded from the metrics; defaults to 10% of the horizon.
    std::optional<std::uint64_t> warmup;
    State initial{0, 0, 0};

    std::uint64_t effective_warmup() const noexcept { return warmup ? *warmup : horizon / 10; }
    void validate() const;
};

struct RunMetrics {
    double throughput = 0.0;  ///< delivered packets per slot
    double mean_queue = 0.0;  ///< queue length at slot start
    std::optional<double> delay; ///< mean_queue / throughput; empty when nothing was delivered
    double blocking = 0.0;    ///< dropped / arrived, 0 without arrivals
    double blocking_stderr = 0.0; ///< batch-means standard error of `blocking`
    std::uint64_t slots = 0;
    std::uint64_t arrivals = 0;
    std::uint64_t drops = 0;
};

/// Simulates `policy` for `config.horizon` slots and averages over the slots
/// after the warmup. Deterministic in (policy, config).
RunMetrics run_policy(const StochasticPolicy& policy, const SimConfig& config);

enum class Baseline { Htt, BackscatterOnly, Random };

std::string_view to_string(Baseline b) noexcept;

/// Heuristic comparison policies:
///  - Htt: harvest while busy (idle once storage is full), transmit when idle
///    if data and energy allow.
///  - BackscatterOnly: backscatter while busy if data allows, otherwise idle;
///    never harvests or transmits.
///  - Random: equal probability over the mode-appropriate options.
/// Validated against the executable action sets.
StochasticPolicy baseline_policy(Baseline kind, const ModelParams& params);

} // namespace bsmdp
