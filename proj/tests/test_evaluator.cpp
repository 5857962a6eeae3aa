#include "bsmdp/evaluator.hpp"
#include "bsmdp/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace bsmdp;

namespace {

ThetaParams random_theta(const ModelParams& p, std::mt19937_64& rng, double scale = 2.0) {
    ThetaParams theta(p);
    std::normal_distribution<double> n(0.0, scale);
    for (std::size_t s = 0; s < theta.num_states(); ++s)
        for (Action a : theta.feasible(s).to_vector()) theta.set(s, a, n(rng));
    return theta;
}

} // namespace

TEST_CASE("stationary distribution: LU and power iteration agree") {
    std::mt19937_64 rng(4);
    ModelParams p;
    p.max_queue = 5;
    p.max_energy = 4;
    const TransitionModel model(p);
    const StochasticPolicy policy = to_policy(random_theta(p, rng));
    const StationaryDistribution lu = stationary_distribution(policy, model);
    const StationaryDistribution power = stationary_distribution_power(policy, model);
    const InducedChain chain = induce_chain(policy, model);
    CHECK(lu.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lu.balance_residual(chain.transition) < 1e-12);
    CHECK((lu.pi - power.pi).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("full-support policies induce irreducible aperiodic chains") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const ModelParams p = testing::random_params(rng, true);
        const TransitionModel model(p);
        const ChainStructure cs = analyze_chain(StochasticPolicy::uniform(p), model);
        CHECK(cs.irreducible());
        CHECK(cs.aperiodic());
    }
}

TEST_CASE("larger energy steps can leave energy levels unreachable") {
    ModelParams p;
    p.max_queue = 3;
    p.max_energy = 4;
    p.tx_energy = 2;
    p.harvest_energy = 2;
    const TransitionModel model(p);
    const ChainStructure cs = analyze_chain(StochasticPolicy::uniform(p), model);
    CHECK_FALSE(cs.irreducible());
    CHECK(cs.unichain());
    CHECK_FALSE(cs.recurrent(model.space().index({0, 0, 1})));
}

TEST_CASE("periodic chains are detected") {
    Eigen::MatrixXd P(3, 3);
    P << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    const ChainStructure cs = analyze_chain(P);
    CHECK(cs.irreducible());
    CHECK(cs.closed_periods.at(0) == 3);
    CHECK_FALSE(cs.aperiodic());
}

TEST_CASE("multichain policies") {
    const ModelParams p;
    const TransitionModel model(p);
    const StochasticPolicy policy = baseline_policy(Baseline::BackscatterOnly, p);
    CHECK_FALSE(analyze_chain(policy, model).unichain());
    CHECK_THROWS_AS(stationary_distribution(policy, model), StructureError);
    const Eigen::VectorXd pi = limiting_distribution(policy, model, {0, 0, 0});
    CHECK(pi.sum() == doctest::Approx(1.0));
    // energy never changes, so all mass stays at e = 0
    for (std::size_t s = 0; s < model.num_states(); ++s)
        if (model.space().state(s).energy != 0) CHECK(pi(static_cast<Eigen::Index>(s)) == 0.0);
}

TEST_CASE("average throughput does not depend on the start state") {
    std::mt19937_64 rng(6);
    ModelParams p;
    p.max_queue = 4;
    p.max_energy = 3;
    const TransitionModel model(p);
    const StochasticPolicy policy = to_policy(random_theta(p, rng));
    const double xi = average_throughput_exact(policy, model);
    for (const State& s : {State{0, 0, 0}, State{1, 4, 3}, State{0, 2, 1}})
        CHECK(average_throughput_from(policy, model, s) == doctest::Approx(xi).epsilon(1e-12));
    // long-horizon average of the distribution from a fixed start
    const InducedChain chain = induce_chain(policy, model);
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(chain.reward.size());
    mu(model.space().index({1, 4, 3})) = 1.0;
    double acc = 0.0;
    constexpr int kSteps = 20000;
    for (int k = 0; k < kSteps; ++k) {
        acc += mu.dot(chain.reward);
        mu = mu * chain.transition;
    }
    CHECK(acc / kSteps == doctest::Approx(xi).epsilon(1e-3));
}

TEST_CASE("differential throughput solves the Bellman equation") {
    std::mt19937_64 rng(9);
    ModelParams p;
    p.max_queue = 4;
    p.max_energy = 4;
    const TransitionModel model(p);
    const StochasticPolicy policy = to_policy(random_theta(p, rng));
    const DifferentialThroughput d = differential_throughput(policy, model, {0, 0, 0});
    CHECK(d.values(static_cast<Eigen::Index>(d.anchor)) == 0.0);
    CHECK(d.bellman_residual(induce_chain(policy, model)) < 1e-10);
    CHECK(d.average == doctest::Approx(average_throughput_exact(policy, model)));
}

TEST_CASE("zero rewards give zero values and zero gradient") {
    ModelParams p = testing::tiny_params();
    p.beta = 0.0;
    p.sigma = 0.0;
    const TransitionModel model(p);
    std::mt19937_64 rng(1);
    const ThetaParams theta = random_theta(p, rng);
    // nothing leaves the queue, so the anchor must sit at a full queue
    const State anchor{0, p.max_queue, p.max_energy};
    const DifferentialThroughput d = differential_throughput(to_policy(theta), model, anchor);
    CHECK(d.values.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& row : policy_gradient_exact(theta, model, anchor))
        for (double g : row) CHECK(g == 0.0);
}

TEST_CASE("q-values are consistent with the values") {
    std::mt19937_64 rng(10);
    const ModelParams p = testing::tiny_params();
    const TransitionModel model(p);
    const StochasticPolicy policy = to_policy(random_theta(p, rng));
    const DifferentialThroughput d = differential_throughput(policy, model, {0, 0, 0});
    const QValues q = q_values(policy, model, {0, 0, 0});
    for (std::size_t s = 0; s < model.num_states(); ++s) {
        double v = 0.0;
        for (Action a : kAllActions) {
            const double chi = policy.probability(s, a);
            if (chi > 0.0) v += chi * q[s][slot(a)];
            if (!model.has_row(s, a)) CHECK(std::isnan(q[s][slot(a)]));
        }
        CHECK(v == doctest::Approx(d.values(static_cast<Eigen::Index>(s))).epsilon(1e-10));
    }
}

TEST_CASE("exact gradient matches finite differences and the direct form") {
    std::mt19937_64 rng(12);
    const ModelParams p = testing::tiny_params();
    const TransitionModel model(p);
    for (int trial = 0; trial < 5; ++trial) {
        const ThetaParams theta = random_theta(p, rng);
        const GradientVector g = policy_gradient_exact(theta, model, {0, 0, 0});
        const GradientVector h = policy_gradient_direct(theta, model, {0, 0, 0});
        for (std::size_t s = 0; s < theta.num_states(); ++s) {
            for (Action a : theta.feasible(s).to_vector()) {
                ThetaParams up = theta, down = theta;
                constexpr double kStep = 1e-5;
                up.add(s, a, kStep);
                down.add(s, a, -kStep);
                const double fd = (average_throughput_exact(to_policy(up), model) -
                                   average_throughput_exact(to_policy(down), model)) /
                                  (2 * kStep);
                CHECK(g[s][slot(a)] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
                CHECK(std::abs(g[s][slot(a)] - h[s][slot(a)]) < 1e-9);
            }
        }
    }
}

TEST_CASE("regenerative Monte-Carlo estimate of differential values") {
    std::mt19937_64 rng(14);
    const ModelParams p = testing::tiny_params();
    const TransitionModel model(p);
    const StochasticPolicy policy = to_policy(random_theta(p, rng, 1.0));
    const State anchor{0, 0, 0};
    const DifferentialThroughput d = differential_throughput(policy, model, anchor);
    EventStreams choice(3);
    for (const State start : {State{1, 1, 0}, State{0, 1, 1}}) {
        Environment env(p, 17, start);
        constexpr int kRuns = 20000;
        double sum = 0.0, sq = 0.0;
        for (int run = 0; run < kRuns; ++run) {
            env = Environment(p, 1000 + static_cast<std::uint64_t>(run), start);
            double total = 0.0;
            do {
                const State s = env.state();
                const std::size_t si = model.space().index(s);
                const Action a = sample_action(policy.at(si), choice.uniform(EventStreams::Policy));
                total += immediate_throughput(s, a, p) - d.average;
                env.step(a);
            } while (!(env.state() == anchor));
            sum += total;
            sq += total * total;
        }
        const double mean = sum / kRuns;
        const double se = std::sqrt((sq / kRuns - mean * mean) / kRuns);
        INFO("start " << to_string(start));
        CHECK(std::abs(mean - d.values(static_cast<Eigen::Index>(model.space().index(start)))) < 4 * se);
    }
}

TEST_CASE("policy metrics from the limiting occupancy") {
    const ModelParams p;
    const TransitionModel model(p);
    const StochasticPolicy htt = baseline_policy(Baseline::Htt, p);
    const AnalyticMetrics m = policy_metrics(htt, model);
    CHECK(m.throughput == doctest::Approx(average_throughput_from(htt, model, {0, 0, 0})));
    CHECK(m.blocking >= 0.0);
    CHECK(m.blocking <= 1.0);
}
