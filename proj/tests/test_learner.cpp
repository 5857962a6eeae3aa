#include "bsmdp/evaluator.hpp"
#include "bsmdp/learner.hpp"
#include "bsmdp/softmax_policy.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace bsmdp;

TEST_CASE("softmax policy") {
    const ModelParams p;
    const StateSpace space(p);
    ThetaParams theta(p);
    const std::size_t s = space.index({1, 5, 3});
    auto chi = softmax_policy(theta, s);
    CHECK(chi[slot(Action::Harvest)] == doctest::Approx(0.5));
    CHECK(chi[slot(Action::Idle)] == 0.0);
    CHECK(chi[slot(Action::Transmit)] == 0.0);
    theta.set(s, Action::Backscatter, std::log(3.0));
    chi = softmax_policy(theta, s);
    CHECK(chi[slot(Action::Harvest)] == doctest::Approx(0.25));
    CHECK(chi[slot(Action::Backscatter)] == doctest::Approx(0.75));

    const auto g = log_policy_gradient(theta, s, Action::Backscatter);
    CHECK(g[slot(Action::Harvest)] == doctest::Approx(-0.25));
    CHECK(g[slot(Action::Backscatter)] == doctest::Approx(0.25));
    const ThetaParams flat(p);
    const auto u = log_policy_gradient(flat, s, Action::Harvest);
    CHECK(u[slot(Action::Harvest)] == doctest::Approx(0.5));
    CHECK(u[slot(Action::Backscatter)] == doctest::Approx(-0.5));
}

TEST_CASE("theta is clipped and restricted to feasible pairs") {
    const ModelParams p;
    const StateSpace space(p);
    ThetaParams theta(p, 5.0);
    const std::size_t s = space.index({1, 5, 3});
    theta.set(s, Action::Harvest, 100.0);
    CHECK(theta.get(s, Action::Harvest) == 5.0);
    theta.add(s, Action::Harvest, -100.0);
    CHECK(theta.get(s, Action::Harvest) == -5.0);
    CHECK_THROWS_AS(theta.set(s, Action::Transmit, 1.0), ContractViolation);
    CHECK_THROWS(theta.set(s, Action::Harvest, std::nan("")));
}

TEST_CASE("log-gradient expectation vanishes and stays in [-1, 1]") {
    std::mt19937_64 rng(1);
    const ModelParams p;
    ThetaParams theta(p);
    std::normal_distribution<double> n(0, 3);
    for (std::size_t s = 0; s < theta.num_states(); ++s)
        for (Action a : theta.feasible(s).to_vector()) theta.set(s, a, n(rng));
    for (std::size_t s = 0; s < theta.num_states(); ++s) {
        const auto chi = softmax_policy(theta, s);
        std::array<double, kActionCount> mean{};
        for (Action a : theta.feasible(s).to_vector()) {
            const auto g = log_policy_gradient(theta, s, a);
            for (std::size_t k = 0; k < kActionCount; ++k) {
                CHECK(std::abs(g[k]) <= 1.0);
                mean[k] += chi[slot(a)] * g[k];
            }
        }
        for (double m : mean) CHECK(std::abs(m) < 1e-12);
    }
}

TEST_CASE("step schedule") {
    const LearnerConfig cfg;
    CHECK(step_schedule(0, cfg) == doctest::Approx(1e-5));
    CHECK(step_schedule(17999, cfg) == doctest::Approx(1e-5));
    CHECK(step_schedule(18000, cfg) == doctest::Approx(0.9e-5));
    CHECK(step_schedule(36000, cfg) == doctest::Approx(0.81e-5));
}

TEST_CASE("episode gradient: suffix and trace forms agree") {
    std::mt19937_64 rng(5);
    const ModelParams p = testing::tiny_params();
    ThetaParams theta(p);
    std::normal_distribution<double> n(0, 1);
    for (std::size_t s = 0; s < theta.num_states(); ++s)
        for (Action a : theta.feasible(s).to_vector()) theta.set(s, a, n(rng));
    Environment env(p, 3);
    EventStreams choice(4);
    for (int m = 0; m < 20; ++m) {
        const auto episode = sample_episode(theta, env, choice, {0, 0, 0}, RewardSignal::Realized, 100000);
        const GradientVector a = episode_gradient(theta, episode, 0.3);
        const GradientVector b = episode_gradient_traced(theta, episode, 0.3);
        for (std::size_t s = 0; s < a.size(); ++s)
            for (std::size_t k = 0; k < kActionCount; ++k) CHECK(a[s][k] == doctest::Approx(b[s][k]));
    }
}

TEST_CASE("rewards equal to the estimate leave theta unchanged") {
    const ModelParams p = testing::tiny_params();
    const ThetaParams theta(p);
    std::vector<EpisodeStep> episode{{0, Action::Idle, 0.4}, {4, Action::Harvest, 0.4}, {6, Action::Backscatter, 0.4}};
    for (const auto& row : episode_gradient(theta, episode, 0.4))
        for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("per-step learner: determinism and trace") {
    const ModelParams p;
    LearnerConfig cfg;
    cfg.horizon = 30000;
    cfg.rho0 = 1e-3;
    cfg.nu = 1.0;
    cfg.seed = 9;
    Environment e1(p, 9), e2(p, 9);
    const TrainResult a = per_step_train(cfg, e1, ThetaParams(p));
    const TrainResult b = per_step_train(cfg, e2, ThetaParams(p));
    CHECK(a.theta == b.theta);
    CHECK(a.xi_tilde == b.xi_tilde);
    REQUIRE(a.trace.checkpoints.size() == 4);
    for (std::size_t i = 1; i < a.trace.checkpoints.size(); ++i)
        CHECK(a.trace.checkpoints[i].step > a.trace.checkpoints[i - 1].step);
    CHECK(a.trace.checkpoints.back().xi_exact.has_value());
    std::ostringstream csv;
    a.trace.write_csv(csv);
    CHECK(csv.str().rfind("step,xi_tilde,xi_exact,rho\n0,0,", 0) == 0);
}

TEST_CASE("per-step learner improves the policy at eta = 0.7") {
    ModelParams p;
    p.eta = 0.7;
    const TransitionModel model(p);
    LearnerConfig cfg;
    cfg.horizon = 300000;
    cfg.rho0 = 3e-3;
    cfg.rho_decay = 1.0;
    cfg.nu = 1.0;
    cfg.exact_checkpoints = false;
    cfg.recurrent_state = suggest_recurrent_state(ThetaParams(p), model);
    Environment env(p, cfg.seed);
    const TrainResult r = per_step_train(cfg, env, ThetaParams(p));
    const double before = average_throughput_exact(to_policy(ThetaParams(p)), model);
    const double after = average_throughput_from(to_policy(r.theta), model, {0, 0, 0});
    CHECK(after > before + 0.02);
    CHECK(r.xi_tilde == doctest::Approx(after).epsilon(0.15));
}

TEST_CASE("episodic learner runs and reports episodes") {
    const ModelParams p = testing::tiny_params();
    LearnerConfig cfg;
    cfg.horizon = 50000;
    cfg.rho0 = 1e-2;
    cfg.nu = 1.0;
    Environment env(p, 2);
    const TrainResult r = episodic_train(cfg, env, ThetaParams(p));
    CHECK(r.episodes > 100);
    CHECK(r.xi_tilde > 0.0);
}

TEST_CASE("episodic learner fails when the recurrent state is never revisited") {
    ModelParams p;
    p.alpha = 1.0;
    p.tx_packets = 1;
    LearnerConfig cfg;
    cfg.horizon = 2000;
    cfg.exact_checkpoints = false;
    Environment env(p, 1);
    CHECK_THROWS_WITH_AS(episodic_train(cfg, env, ThetaParams(p)), doctest::Contains("no return"),
                         LearningError);
}

TEST_CASE("frozen-theta episode gradients are unbiased for E[T] grad xi") {
    std::mt19937_64 rng(21);
    const ModelParams p = testing::tiny_params();
    const TransitionModel model(p);
    ThetaParams theta(p);
    std::normal_distribution<double> n(0, 1);
    for (std::size_t s = 0; s < theta.num_states(); ++s)
        for (Action a : theta.feasible(s).to_vector()) theta.set(s, a, n(rng));
    const State anchor{0, 0, 0};
    const StochasticPolicy policy = to_policy(theta);
    const double xi = average_throughput_exact(policy, model);
    const StationaryDistribution pi = stationary_distribution(policy, model);
    const double mean_return = 1.0 / pi.pi(static_cast<Eigen::Index>(model.space().index(anchor)));
    const GradientVector grad = policy_gradient_exact(theta, model, anchor);

    Environment env(p, 8);
    EventStreams choice(9);
    GradientVector mean(theta.num_states(), {0, 0, 0, 0});
    constexpr int kEpisodes = 10000;
    for (int m = 0; m < kEpisodes; ++m) {
        const auto ep = sample_episode(theta, env, choice, anchor, RewardSignal::Realized, 100000);
        const GradientVector F = episode_gradient(theta, ep, xi);
        for (std::size_t s = 0; s < F.size(); ++s)
            for (std::size_t k = 0; k < kActionCount; ++k) mean[s][k] += F[s][k] / kEpisodes;
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t s = 0; s < mean.size(); ++s) {
        for (std::size_t k = 0; k < kActionCount; ++k) {
            const double target = mean_return * grad[s][k];
            dot += mean[s][k] * target;
            na += mean[s][k] * mean[s][k];
            nb += target * target;
        }
    }
    CHECK(dot / std::sqrt(na * nb) > 0.9);
}
