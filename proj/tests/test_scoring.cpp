#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gar/scoring.hpp"
#include "oracles.hpp"

using namespace gar;

namespace {

ScoreConfig quantile_cfg(double alpha, bool smooth = false) {
    ScoreConfig c;
    c.family = ScoreFamily::quantile;
    c.alpha = alpha;
    c.smooth = smooth;
    return c;
}

ScoreConfig expectile_cfg(double tau) {
    ScoreConfig c;
    c.family = ScoreFamily::expectile;
    c.alpha = tau;
    return c;
}

ScoreConfig joint_cfg(bool smooth = false, double alpha = 0.05) {
    ScoreConfig c;
    c.alpha = alpha;
    c.smooth = smooth;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    ScoreConfig c;
    c.alpha = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.alpha = 0.05;
    c.h2_scale = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.h2_scale = 2.0;
    c.sharpness = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("quantile score examples") {
    CHECK(quantile_score(1.0, 1.0, quantile_cfg(0.05)) == doctest::Approx(0.0));
    CHECK(quantile_score(0.0, 1.0, quantile_cfg(0.05)) == doctest::Approx(0.05));
    CHECK(quantile_score(1.0, 0.0, quantile_cfg(0.05)) == doctest::Approx(0.95));
}

TEST_CASE("expectile score examples") {
    CHECK(expectile_score(1.3, 1.3, expectile_cfg(0.5)) == doctest::Approx(0.0));
    CHECK(expectile_score(0.0, 2.0, expectile_cfg(0.5)) == doctest::Approx(2.0));
    CHECK(expectile_score(2.0, 0.0, expectile_cfg(0.25)) == doctest::Approx(3.0));
}

TEST_CASE("joint score examples") {
    RiskEstimate zero{0.0, 0.0};
    CHECK(joint_var_es_score(zero, 0.0, joint_cfg()) == doctest::Approx(-2.0));
    RiskEstimate one{1.0, 1.0};
    CHECK(joint_var_es_score(one, 1.0, joint_cfg()) ==
          doctest::Approx(-2.0 * std::exp(0.5)));
    RiskEstimate mis{0.0, -1.0};
    CHECK(joint_var_es_score(mis, 1.0, joint_cfg()) ==
          doctest::Approx(0.05 - 3.0 * std::exp(-0.5)));
}

TEST_CASE("joint score overflow guard") {
    RiskEstimate est{0.0, 1500.0};
    CHECK_THROWS_AS(joint_var_es_score(est, 0.0, joint_cfg()), ScoreOverflow);
}

TEST_CASE("smooth indicator examples") {
    CHECK(smooth_indicator(0.0, 10.0) == doctest::Approx(0.5));
    CHECK(smooth_indicator(1e6, 10.0) == doctest::Approx(1.0));
    CHECK(smooth_indicator(0.1, 10.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("oracle bound examples") {
    std::vector<double> a{0.0};
    CHECK(oracle_bound(a, joint_cfg()) == doctest::Approx(-2.0));
    std::vector<double> b{0.0, 0.0};
    CHECK(oracle_bound(b, joint_cfg()) == doctest::Approx(-2.0));
    std::vector<double> c{2.0};
    CHECK(oracle_bound(c, joint_cfg()) == doctest::Approx(-2.0 * std::exp(1.0)));
    std::vector<double> empty;
    CHECK_THROWS_AS(oracle_bound(empty, joint_cfg()), std::invalid_argument);
}

TEST_CASE("strict consistency: quantile grid argmin matches the Gaussian oracle") {
    const auto draws = oracle::normal_sample(100000, 42);
    const ScoreConfig cfg = quantile_cfg(0.05);
    double best_a = 0.0, best = 1e300;
    for (double a = -2.2; a <= -1.0; a += 0.005) {
        double s = 0.0;
        for (double l : draws) s += quantile_score(a, l, cfg);
        if (s < best) {
            best = s;
            best_a = a;
        }
    }
    CHECK(std::abs(best_a - oracle::normal_quantile(0.05)) <= 0.03);
}

TEST_CASE("strict consistency: joint grid argmin matches Gaussian VaR/ES") {
    auto draws = oracle::normal_sample(100000, 43);
    const ScoreConfig cfg = joint_cfg();
    const double n = static_cast<double>(draws.size());

    // Mean hard joint score via sorted prefix sums: with cnt = #{l <= v} and
    // tail = sum of those l, the sample mean of Eq-12 terms collapses to a
    // closed form per (v, e). Spot-checked against the scalar score below.
    std::sort(draws.begin(), draws.end());
    std::vector<double> prefix(draws.size() + 1, 0.0);
    for (std::size_t i = 0; i < draws.size(); ++i) prefix[i + 1] = prefix[i] + draws[i];
    const double total = prefix.back();
    auto mean_score = [&](double v, double e) {
        const auto it = std::upper_bound(draws.begin(), draws.end(), v);
        const double cnt = static_cast<double>(it - draws.begin());
        const double tail = prefix[static_cast<std::size_t>(it - draws.begin())];
        const double h2p = std::exp(e / 2.0);
        const double exceed = cnt * v - tail;  // sum over l <= v of (v - l)
        return (exceed - cfg.alpha * (n * v - total)) / n + h2p / cfg.alpha * exceed / n +
               h2p * (e - v) - 2.0 * h2p;
    };
    for (double v : {-1.8, -1.5}) {  // identity check against the library score
        double direct = 0.0;
        for (double l : draws) direct += joint_var_es_score({v, -2.1}, l, cfg);
        CHECK(mean_score(v, -2.1) == doctest::Approx(direct / n).epsilon(1e-10));
    }

    double best_v = 0.0, best_e = 0.0, best = 1e300;
    for (double v = -2.0; v <= -1.3; v += 0.005) {
        for (double e = -2.5; e <= v; e += 0.005) {
            const double s = mean_score(v, e);
            if (s < best) {
                best = s;
                best_v = v;
                best_e = e;
            }
        }
    }
    CHECK(std::abs(best_v - oracle::normal_quantile(0.05)) <= 0.03);
    CHECK(std::abs(best_e - oracle::normal_es(0.05)) <= 0.03);
}

TEST_CASE("surrogate converges monotonically to the hard score") {
    const RiskEstimate est{-1.2, -1.7};
    for (double ell : {-1.5, -0.9, 0.4}) {
        const double hard = joint_var_es_score(est, ell, joint_cfg(false));
        double prev_gap = 1e300;
        for (double k : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
            ScoreConfig cfg = joint_cfg(true);
            cfg.sharpness = k;
            const double gap = std::abs(joint_var_es_score(est, ell, cfg) - hard);
            CHECK(gap <= prev_gap + 1e-15);
            prev_gap = gap;
            if (k == 10000.0) CHECK(gap <= 1e-3);
        }
    }
}

TEST_CASE("expectile score at tau=0.5 is half the squared error") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3, 3);
    for (int i = 0; i < 50; ++i) {
        const double a = dist(rng), l = dist(rng);
        CHECK(expectile_score(a, l, expectile_cfg(0.5)) ==
              doctest::Approx(0.5 * (l - a) * (l - a)).epsilon(1e-12));
    }
}

TEST_CASE("smooth joint score node passes check_gradient") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(-2, 2);
    for (int i = 0; i < 20; ++i) {
        double v = dist(rng), e = dist(rng) - 1.0, l = dist(rng);
        if (std::abs(v - l) < 0.05) l += 0.2;  // stay off the indicator kink
        Graph g;
        Tensor tv = Tensor::scalar(v), te = Tensor::scalar(e);
        tv.requires_grad = te.requires_grad = true;
        NodeId nv = g.leaf("v", tv), ne = g.leaf("e", te);
        NodeId s = joint_score_node(g, nv, ne, g.constant(l), joint_cfg(true));
        CHECK(g.check_gradient(s, {nv, ne}, 1e-5) <= 1e-4);
    }
}

TEST_CASE("score nodes match plain evaluations") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-2, 2);
    for (bool smooth : {false, true}) {
        for (int i = 0; i < 20; ++i) {
            const double v = dist(rng), e = dist(rng) - 1.0, l = dist(rng);
            Graph g;
            NodeId s = joint_score_node(g, g.constant(v), g.constant(e), g.constant(l),
                                        joint_cfg(smooth));
            CHECK(g.scalar_value(s) ==
                  doctest::Approx(joint_var_es_score({v, e}, l, joint_cfg(smooth)))
                      .epsilon(1e-12));
        }
    }
}
