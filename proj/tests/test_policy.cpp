#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gar/policy.hpp"

using namespace gar;

namespace {

Tensor random_scenario(std::mt19937_64& rng, std::size_t M, std::size_t T) {
    std::normal_distribution<double> dist(0.0, 0.02);
    Tensor y = Tensor::zeros(M, T);
    for (auto& v : y.data) v = dist(rng);
    return y;
}

PolicyParams benchmark(PolicyKind kind, int M, double kappa = 1.0) {
    PolicyParams p;
    p.kind = kind;
    p.n_assets = M;
    p.exposure_cap = kappa;
    return p;
}

}  // namespace

TEST_CASE("identity_sum rows are equal weights") {
    Tensor y = Tensor::full(2, 4, 0.01);
    ActionSequence a = policy_actions(benchmark(PolicyKind::identity_sum, 2), y);
    REQUIRE(a.weights.rows() == 3);
    REQUIRE(a.weights.cols() == 2);
    for (double w : a.weights.data) CHECK(w == doctest::Approx(0.5));
}

TEST_CASE("mean reversion normalizes the negated latest return") {
    Tensor y = Tensor::zeros(2, 2);
    y.at(0, 0) = 0.02;
    y.at(1, 0) = -0.01;
    ActionSequence a = policy_actions(benchmark(PolicyKind::mean_reversion, 2), y);
    CHECK(a.weights.at(0, 0) == doctest::Approx(-2.0 / 3.0));
    CHECK(a.weights.at(0, 1) == doctest::Approx(1.0 / 3.0));

    ActionSequence tf = policy_actions(benchmark(PolicyKind::trend_following, 2), y);
    CHECK(tf.weights.at(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(tf.weights.at(0, 1) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("every action row has L1 norm exactly kappa") {
    std::mt19937_64 rng(3);
    const double kappa = 1.7;
    std::vector<PolicyParams> policies{
        benchmark(PolicyKind::identity_sum, 4, kappa),
        benchmark(PolicyKind::mean_reversion, 4, kappa),
        benchmark(PolicyKind::trend_following, 4, kappa),
        init_gru_policy(4, 2, kappa, 99),
    };
    for (const auto& pp : policies) {
        for (int rep = 0; rep < 10; ++rep) {
            Tensor y = random_scenario(rng, 4, 6);
            ActionSequence a = policy_actions(pp, y);
            for (std::size_t t = 0; t < a.weights.rows(); ++t) {
                double norm = 0.0;
                for (std::size_t j = 0; j < a.weights.cols(); ++j)
                    norm += std::abs(a.weights.at(t, j));
                CHECK(std::abs(norm - kappa) <= 1e-12 * kappa);
            }
        }
    }
}

TEST_CASE("degenerate GRU state falls back to equal weights") {
    PolicyParams pp = init_gru_policy(3, 2, 1.0, 7);
    for (auto& [name, t] : pp.gru) std::fill(t.data.begin(), t.data.end(), 0.0);
    ActionSequence a = policy_actions(pp, Tensor::zeros(3, 4));
    for (double w : a.weights.data) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("aggregate_pnl examples") {
    {
        Tensor y = Tensor::full(3, 5, 0.02);  // zero increments
        PolicyParams pp = benchmark(PolicyKind::identity_sum, 3);
        CHECK(policy_functional(pp, y) == doctest::Approx(0.0));
    }
    {
        Tensor y = Tensor::zeros(1, 2);
        y.at(0, 1) = 0.03;
        PolicyParams pp = benchmark(PolicyKind::identity_sum, 1);
        CHECK(policy_functional(pp, y) == doctest::Approx(0.03));
    }
    {
        std::mt19937_64 rng(17);
        Tensor y = random_scenario(rng, 3, 6);
        const double kappa = 2.0;
        PolicyParams pp = benchmark(PolicyKind::identity_sum, 3, kappa);
        double telescoped = 0.0;  // equal weights telescope to the end-start gap
        for (std::size_t j = 0; j < 3; ++j)
            telescoped += (kappa / 3.0) * (y.at(j, 5) - y.at(j, 0));
        CHECK(policy_functional(pp, y) == doctest::Approx(telescoped).epsilon(1e-12));
    }
}

TEST_CASE("shape validation") {
    PolicyParams pp = benchmark(PolicyKind::identity_sum, 2);
    CHECK_THROWS(policy_actions(pp, Tensor::zeros(3, 4)));   // wrong asset count
    CHECK_THROWS(policy_actions(pp, Tensor::zeros(2, 1)));   // T < 2
}

TEST_CASE("non-anticipativity under future perturbations") {
    std::mt19937_64 rng(23);
    PolicyParams gru = init_gru_policy(3, 2, 1.0, 31);
    PolicyParams mr = benchmark(PolicyKind::mean_reversion, 3);
    for (const auto& pp : {gru, mr}) {
        for (int rep = 0; rep < 25; ++rep) {
            Tensor y = random_scenario(rng, 3, 7);
            ActionSequence base = policy_actions(pp, y);
            const std::size_t cut = 1 + rng() % 6;  // perturb columns cut..T-1
            Tensor pert = y;
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t t = cut; t < 7; ++t)
                    pert.at(j, t) += 0.05 + 0.01 * static_cast<double>(rng() % 7);
            ActionSequence moved = policy_actions(pp, pert);
            // Rows strictly before `cut` see the same history y_{1:t}.
            for (std::size_t t = 0; t + 1 < cut; ++t)
                for (std::size_t j = 0; j < 3; ++j)
                    CHECK(moved.weights.at(t, j) == base.weights.at(t, j));
        }
    }
}

TEST_CASE("causality probe: perturbing the final column changes no action row") {
    std::mt19937_64 rng(29);
    PolicyParams pp = init_gru_policy(2, 3, 1.0, 41);
    Tensor y = random_scenario(rng, 2, 5);
    ActionSequence base = policy_actions(pp, y);
    Tensor pert = y;
    pert.at(0, 4) += 0.4;
    pert.at(1, 4) -= 0.2;
    ActionSequence moved = policy_actions(pp, pert);
    CHECK(moved.weights.data == base.weights.data);
    // Only the final increment term moves the functional.
    double delta = 0.0;
    for (std::size_t j = 0; j < 2; ++j)
        delta += base.weights.at(3, j) * ((pert.at(j, 4) - pert.at(j, 3)) -
                                          (y.at(j, 4) - y.at(j, 3)));
    CHECK(policy_functional(pp, pert) - policy_functional(pp, y) ==
          doctest::Approx(delta).epsilon(1e-12));
}

TEST_CASE("Hoelder bound on the aggregate PnL") {
    std::mt19937_64 rng(37);
    const double kappa = 1.3;
    std::vector<PolicyParams> policies{benchmark(PolicyKind::mean_reversion, 3, kappa),
                                       init_gru_policy(3, 2, kappa, 5)};
    for (const auto& pp : policies) {
        for (int rep = 0; rep < 20; ++rep) {
            Tensor y = random_scenario(rng, 3, 6);
            double bound = 0.0;
            for (std::size_t t = 0; t + 1 < 6; ++t) {
                double worst = 0.0;
                for (std::size_t j = 0; j < 3; ++j)
                    worst = std::max(worst, std::abs(y.at(j, t + 1) - y.at(j, t)));
                bound += worst;
            }
            CHECK(std::abs(policy_functional(pp, y)) <= kappa * bound + 1e-12);
        }
    }
}

TEST_CASE("gradient flows through the GRU parameters") {
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 5; ++rep) {
        PolicyParams pp = init_gru_policy(3, 2, 1.0, 600 + static_cast<std::uint64_t>(rep));
        Tensor y = random_scenario(rng, 3, 5);
        for (auto& v : y.data) v *= 25.0;  // keep ||h||_1 away from the tiny-norm regime
        Graph g;
        auto p = pp.gru.bind(g, /*requires_grad=*/true);
        NodeId Y = g.constant(Tensor({15, 1}, y.data));  // (M*T) x 1, row j*T + t
        // Reorder: scenario tensor is M x T row-major, which is already row j*T+t.
        auto actions = policy_action_nodes(g, pp, p, Y, 3, 5);
        NodeId pnl = g.sum(aggregate_pnl_node(g, Y, actions, 3, 5));
        NodeId out = g.tanh(pnl);
        std::vector<NodeId> leaves;
        for (const auto& [name, id] : p) leaves.push_back(id);
        CHECK(g.check_gradient(out, leaves, 1e-5) <= 1e-4);
    }
}

TEST_CASE("policy names round-trip") {
    for (auto kind : {PolicyKind::adversarial_gru, PolicyKind::mean_reversion,
                      PolicyKind::trend_following, PolicyKind::identity_sum})
        CHECK(policy_from_name(policy_name(kind)) == kind);
    CHECK_THROWS(policy_from_name("nope"));
}
