#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bsmdp {

/// Thrown when parameters or states are outside their valid domain.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a caller breaks an operation's precondition, e.g. asks for the
/// dynamics of an action that is not allowed in the given state.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Actions of the secondary transmitter. Numeric values follow the usual
/// 1..4 labelling so exported policy maps are directly readable.
enum class Action : std::uint8_t { Idle = 1, Transmit = 2, Harvest = 3, Backscatter = 4 };

inline constexpr std::size_t kActionCount = 4;
inline constexpr std::array<Action, kActionCount> kAllActions{
    Action::Idle, Action::Transmit, Action::Harvest, Action::Backscatter};

/// Zero-based slot of an action, used for per-state arrays.
constexpr std::size_t slot(Action a) noexcept { return static_cast<std::size_t>(a) - 1; }
constexpr Action action_at(std::size_t slot) noexcept { return static_cast<Action>(slot + 1); }

std::string_view to_string(Action a) noexcept;
std::optional<Action> parse_action(std::string_view name) noexcept;

/// Environment and device parameters.
struct ModelParams {
    double alpha = 0.5;  ///< packet arrival probability per slot
    double eta = 0.5;    ///< incumbent channel idle probability
    double beta = 0.9;   ///< backscatter success probability
    double gamma = 0.9;  ///< harvest success probability
    double sigma = 0.9;  ///< active transmission success probability
    int max_queue = 10;  ///< D
    int max_energy = 10; ///< E
    int tx_packets = 2;  ///< d_t, packets per active transmission
    int bs_packets = 1;  ///< d_b, packets per backscatter
    int tx_energy = 1;   ///< e_t, energy units per active transmission
    int harvest_energy = 1; ///< e_h, energy units per successful harvest

    /// Throws ModelError naming the first offending field.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

struct State {
    int channel = 0; ///< 0 idle, 1 busy
    int queue = 0;
    int energy = 0;

    bool channel_idle() const noexcept { return channel == 0; }
    bool operator==(const State&) const = default;
};

std::string to_string(const State& s);

/// Small bitset over the four actions. Iteration yields actions in ascending
/// numeric order.
class ActionSet {
public:
    constexpr ActionSet() = default;
    constexpr ActionSet(std::initializer_list<Action> actions) {
        for (Action a : actions) insert(a);
    }

    constexpr void insert(Action a) noexcept { bits_ |= bit(a); }
    constexpr bool contains(Action a) const noexcept { return (bits_ & bit(a)) != 0; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::size_t size() const noexcept {
        std::size_t n = 0;
        for (Action a : kAllActions) n += contains(a) ? 1 : 0;
        return n;
    }
    std::vector<Action> to_vector() const;

    constexpr bool operator==(const ActionSet&) const = default;

private:
    static constexpr std::uint8_t bit(Action a) noexcept {
        return static_cast<std::uint8_t>(1u << slot(a));
    }
    std::uint8_t bits_ = 0;
};

std::string to_string(const ActionSet& set);

/// Dense indexing of (channel, queue, energy). Channel is the outermost
/// coordinate and energy the innermost, so every matrix, LP column and policy
/// table in the library shares one layout.
class StateSpace {
public:
    explicit StateSpace(const ModelParams& params);

    std::size_t size() const noexcept { return size_; }
    int max_queue() const noexcept { return max_queue_; }
    int max_energy() const noexcept { return max_energy_; }

    bool contains(const State& s) const noexcept;
    std::size_t index(const State& s) const;
    State state(std::size_t index) const;

private:
    int max_queue_;
    int max_energy_;
    std::size_t size_;
};

/// All states in canonical index order.
std::vector<State> enumerate_states(const ModelParams& params);

/// Actions that cannot drive the system to an unreachable configuration.
ActionSet feasible_actions(const State& s, const ModelParams& params);

/// Actions that are physically executable: the feasible set plus Idle.
/// Heuristic baselines are allowed to idle where the MDP would not.
ActionSet executable_actions(const State& s, const ModelParams& params);

/// Which action set an operation validates against.
enum class ActionScope { Feasible, Executable };

ActionSet allowed_actions(const State& s, const ModelParams& params, ActionScope scope);

/// Expected packets delivered in one slot: sigma*d_t for Transmit,
/// beta*d_b for Backscatter, zero otherwise.
double immediate_throughput(const State& s, Action a, const ModelParams& params,
                            ActionScope scope = ActionScope::Feasible);

} // namespace bsmdp
