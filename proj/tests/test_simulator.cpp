#include "bsmdp/planner.hpp"
#include "bsmdp/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace bsmdp;

TEST_CASE("forced draws") {
    const ModelParams p;
    SUBCASE("backscatter success with arrival") {
        const StepOutcome out = env_step({1, 3, 2}, Action::Backscatter, p, {true, true, false});
        CHECK(out.next == State{1, 3, 2});
        CHECK(out.delivered == 1);
        CHECK(out.arrived);
        CHECK_FALSE(out.dropped);
    }
    SUBCASE("idle without arrival") {
        const StepOutcome out = env_step({0, 4, 4}, Action::Idle, p, {false, false, true});
        CHECK(out.next == State{0, 4, 4});
        CHECK(out.delivered == 0);
    }
    SUBCASE("transmit always spends energy") {
        CHECK(env_step({0, 5, 3}, Action::Transmit, p, {false, false, true}).next == State{0, 5, 2});
        const StepOutcome ok = env_step({0, 5, 3}, Action::Transmit, p, {true, false, true});
        CHECK(ok.next == State{0, 3, 2});
        CHECK(ok.delivered == 2);
    }
    SUBCASE("arrival to a full queue after a failed send is dropped") {
        const StepOutcome out = env_step({1, 10, 3}, Action::Backscatter, p, {false, true, false});
        CHECK(out.dropped);
        CHECK(out.next.queue == 10);
    }
    SUBCASE("arrival after a successful send from a full queue is admitted") {
        const StepOutcome out = env_step({0, 10, 3}, Action::Transmit, p, {true, true, false});
        CHECK_FALSE(out.dropped);
        CHECK(out.next == State{1, 9, 2});
    }
    SUBCASE("harvest saturates") {
        CHECK(env_step({1, 2, 10}, Action::Idle, p, {true, false, false}).next.energy == 10);
        CHECK(env_step({1, 0, 9}, Action::Harvest, p, {true, false, false}).next.energy == 10);
    }
    SUBCASE("non-executable actions") {
        CHECK_THROWS_AS(env_step({0, 0, 0}, Action::Transmit, p, {true, true, true}), ContractViolation);
    }
}

TEST_CASE("bounds hold along random trajectories") {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p = testing::random_params(gen);
        const StochasticPolicy policy = StochasticPolicy::uniform(p);
        Environment env(p, static_cast<std::uint64_t>(trial));
        EventStreams choice(static_cast<std::uint64_t>(trial) + 100);
        const StateSpace space(p);
        for (int k = 0; k < 5000; ++k) {
            const Action a = sample_action(policy.at(space.index(env.state())),
                                           choice.uniform(EventStreams::Policy));
            const StepOutcome out = env.step(a);
            REQUIRE(space.contains(out.next));
            CHECK((out.delivered == 0 || out.delivered == p.tx_packets || out.delivered == p.bs_packets));
            if (out.dropped) CHECK(out.arrived);
        }
    }
}

TEST_CASE("sample_action") {
    CHECK(sample_action({0.25, 0.75, 0, 0}, 0.0) == Action::Idle);
    CHECK(sample_action({0.25, 0.75, 0, 0}, 0.3) == Action::Transmit);
    CHECK(sample_action({0, 0, 0, 1.0}, 0.999999) == Action::Backscatter);
    CHECK(sample_action({0.5, 0.5 - 1e-17, 0, 0}, 1.0 - 1e-18) == Action::Transmit);
    CHECK_THROWS_AS(sample_action({0, 0, 0, 0}, 0.5), ModelError);
}

TEST_CASE("no arrivals: zero throughput and zero blocking") {
    ModelParams p;
    p.alpha = 0.0;
    SimConfig cfg;
    cfg.params = p;
    cfg.horizon = 20000;
    const RunMetrics m = run_policy(baseline_policy(Baseline::Random, p), cfg);
    CHECK(m.throughput == 0.0);
    CHECK(m.blocking == 0.0);
    CHECK_FALSE(m.delay.has_value());
}

TEST_CASE("Little's law and determinism") {
    const ModelParams p;
    SimConfig cfg;
    cfg.params = p;
    cfg.horizon = 200000;
    cfg.seed = 42;
    const StochasticPolicy policy = baseline_policy(Baseline::Htt, p);
    const RunMetrics a = run_policy(policy, cfg);
    const RunMetrics b = run_policy(policy, cfg);
    CHECK(a.throughput == b.throughput);
    CHECK(a.mean_queue == b.mean_queue);
    CHECK(a.drops == b.drops);
    REQUIRE(a.delay.has_value());
    CHECK(*a.delay * a.throughput == doctest::Approx(a.mean_queue).epsilon(1e-12));
    CHECK(a.slots == 180000);
}

TEST_CASE("LP policy throughput matches the analytic value") {
    ModelParams p;
    p.eta = 0.7;
    const OptimalSolution sol = solve_optimal(TransitionModel(p));
    SimConfig cfg;
    cfg.params = p;
    cfg.horizon = 1'000'000;
    const RunMetrics m = run_policy(sol.policy, cfg);
    CHECK(m.throughput == doctest::Approx(sol.metrics.throughput).epsilon(0.02));
    CHECK(std::abs(m.blocking - sol.metrics.blocking) < 4 * m.blocking_stderr + 1e-4);
}

TEST_CASE("random baseline is below the LP policy") {
    ModelParams p;
    SimConfig cfg;
    cfg.params = p;
    cfg.params.eta = 0.7;
    cfg.horizon = 300000;
    const RunMetrics random = run_policy(baseline_policy(Baseline::Random, cfg.params), cfg);
    const RunMetrics lp = run_policy(solve_optimal(TransitionModel(cfg.params)).policy, cfg);
    CHECK(random.throughput < lp.throughput);
}

TEST_CASE("baselines") {
    const ModelParams p;
    const StateSpace space(p);
    const StochasticPolicy htt = baseline_policy(Baseline::Htt, p);
    CHECK(htt.probability(space.index({0, 4, 2}), Action::Transmit) == 1.0);
    CHECK(htt.probability(space.index({1, 4, 2}), Action::Harvest) == 1.0);
    CHECK(htt.probability(space.index({1, 4, 10}), Action::Idle) == 1.0);
    const StochasticPolicy bs = baseline_policy(Baseline::BackscatterOnly, p);
    CHECK(bs.probability(space.index({1, 4, 2}), Action::Backscatter) == 1.0);
    CHECK(bs.probability(space.index({0, 4, 2}), Action::Idle) == 1.0);
    const StochasticPolicy rnd = baseline_policy(Baseline::Random, p);
    CHECK(rnd.probability(space.index({1, 4, 2}), Action::Harvest) == 0.5);
    for (std::size_t s = 0; s < space.size(); ++s) {
        CHECK(htt.probability(s, Action::Backscatter) == 0.0);
        CHECK(bs.probability(s, Action::Harvest) == 0.0);
        CHECK(bs.probability(s, Action::Transmit) == 0.0);
    }
}

TEST_CASE("warmup validation") {
    SimConfig cfg;
    cfg.horizon = 10;
    cfg.warmup = 10;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
}
