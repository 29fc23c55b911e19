#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gar/rng.hpp"
#include "gar/trainer.hpp"

using namespace gar;

namespace {

GeneratorSpec small_spec() {
    GeneratorSpec s;
    s.arch = GeneratorArch::simple_linear;
    s.n_assets = 2;
    s.cond_len = 3;
    s.horizon = 4;
    s.latent_dim = 2;
    s.hidden_dim = 4;
    s.mlp_layers = 2;
    return s;
}

GeneratorParams zero_generator(const GeneratorSpec& spec) {
    GeneratorParams gp = init_generator(spec, 1);
    for (auto& [name, t] : gp.params) std::fill(t.data.begin(), t.data.end(), 0.0);
    return gp;
}

WindowSample make_window(const GeneratorSpec& spec, std::uint64_t seed, double sd) {
    WindowSample w;
    w.context = Tensor::zeros(static_cast<std::size_t>(spec.n_assets),
                              static_cast<std::size_t>(spec.cond_len));
    w.scenario = Tensor::zeros(static_cast<std::size_t>(spec.n_assets),
                               static_cast<std::size_t>(spec.horizon));
    SequentialRng rng(seed);
    for (double& x : w.context.data) x = sd * rng.normal();
    for (double& x : w.scenario.data) x = sd * rng.normal();
    return w;
}

// Constant-column scenario: zero increments, so every policy's PnL is zero.
WindowSample flat_window(const GeneratorSpec& spec, double level) {
    WindowSample w = make_window(spec, 0, 0.0);
    for (double& x : w.scenario.data) x = level;
    return w;
}

PolicyParams bench(PolicyKind kind, int M, double kappa = 1.0) {
    PolicyParams p;
    p.kind = kind;
    p.n_assets = M;
    p.exposure_cap = kappa;
    return p;
}

double eval_loss(const GeneratorParams& gen, const std::vector<PolicyParams>& policies,
                 const std::vector<const WindowSample*>& batch, const ScoreConfig& score,
                 int mc, std::uint64_t draw_seed) {
    Graph g;
    BoundModel m;
    NodeId loss = fixed_policy_loss(g, m, gen, policies, batch, score, mc, draw_seed);
    return g.scalar_value(loss);
}

const ScoreConfig kSmooth{ScoreFamily::joint_var_es, 0.05, 2.0, 10.0, true};

}  // namespace

TEST_CASE("one-cycle schedule hits its anchor points") {
    LrScheduleCfg sched;
    sched.initial_lr = 1e-10;
    sched.max_lr = 1e-3;
    CHECK(lr_at(0, 1000, sched) == doctest::Approx(sched.initial_lr));
    CHECK(lr_at(300, 1000, sched) == doctest::Approx(sched.max_lr));
    CHECK(lr_at(650, 1000, sched) < sched.max_lr);
    CHECK(lr_at(999, 1000, sched) >= sched.initial_lr / 25.0);
    CHECK(lr_at(999, 1000, sched) < lr_at(650, 1000, sched));

    LrScheduleCfg flat;
    flat.kind = LrSchedule::constant;
    flat.max_lr = 0.01;
    CHECK(lr_at(0, 1000, flat) == 0.01);
    CHECK(lr_at(777, 1000, flat) == 0.01);

    CHECK_THROWS_AS(lr_at(-1, 1000, sched), std::out_of_range);
    CHECK_THROWS_AS(lr_at(1000, 1000, sched), std::out_of_range);
}

TEST_CASE("fixed_policy_loss: degenerate generator and flat data hit -s") {
    const GeneratorSpec spec = small_spec();
    GeneratorParams gen = zero_generator(spec);
    WindowSample w = flat_window(spec, 0.01);
    std::vector<const WindowSample*> batch{&w};
    std::vector<PolicyParams> pols{bench(PolicyKind::identity_sum, spec.n_assets)};

    // Generator outcomes and the realized PnL are all zero, so every term is
    // the joint score at v = e = l = 0, which equals -s regardless of draws.
    CHECK(eval_loss(gen, pols, batch, kSmooth, 16, 3) == doctest::Approx(-2.0).epsilon(1e-12));

    // Duplicating the batch or the policy set leaves the mean unchanged.
    std::vector<const WindowSample*> batch2{&w, &w};
    CHECK(eval_loss(gen, pols, batch2, kSmooth, 16, 3) ==
          doctest::Approx(-2.0).epsilon(1e-12));
    pols.push_back(bench(PolicyKind::mean_reversion, spec.n_assets));
    CHECK(eval_loss(gen, pols, batch2, kSmooth, 16, 3) ==
          doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("fixed_policy_loss matches the plain score for a degenerate generator") {
    const GeneratorSpec spec = small_spec();
    GeneratorParams gen = zero_generator(spec);
    // Constant increments: l = kappa/M * sum_j delta_j * (T-1) for identity_sum.
    WindowSample w = flat_window(spec, 0.0);
    for (int j = 0; j < spec.n_assets; ++j)
        for (int t = 0; t < spec.horizon; ++t)
            w.scenario.at(static_cast<std::size_t>(j), static_cast<std::size_t>(t)) =
                0.02 * (j + 1) * t;
    std::vector<PolicyParams> pols{bench(PolicyKind::identity_sum, spec.n_assets)};
    const double ell = policy_functional(pols[0], w.scenario);
    CHECK(ell == doctest::Approx(0.5 * (0.02 + 0.04) * 3).epsilon(1e-12));

    std::vector<const WindowSample*> batch{&w};
    const double loss = eval_loss(gen, pols, batch, kSmooth, 16, 5);
    CHECK(loss ==
          doctest::Approx(joint_var_es_score({0.0, 0.0}, ell, kSmooth)).epsilon(1e-12));

    CHECK_THROWS(eval_loss(gen, {}, batch, kSmooth, 16, 5));
    CHECK_THROWS(eval_loss(gen, pols, {}, kSmooth, 16, 5));
}

TEST_CASE("adversary_step freezes theta and skips zero-gradient batches") {
    const GeneratorSpec spec = small_spec();
    TrainConfig cfg;
    cfg.mode = TrainMode::adversarial;
    cfg.schedule.kind = LrSchedule::constant;
    cfg.lr_phi = 1e-3;
    cfg.mc_samples = 16;

    TrainState state;
    state.generator = init_generator(spec, 7);
    state.adversary = init_gru_policy(spec.n_assets, 2, 1.0, 11);

    // Real batch: theta stays bit-identical, phi moves.
    WindowSample w = make_window(spec, 21, 0.02);
    std::vector<const WindowSample*> batch{&w};
    const std::uint64_t theta_sum = state.generator.params.checksum();
    const std::uint64_t phi_sum = state.adversary->gru.checksum();
    adversary_step(state, batch, cfg, 101);
    CHECK(state.generator.params.checksum() == theta_sum);
    CHECK(state.adversary->gru.checksum() != phi_sum);

    // Degenerate generator and flat data: the score cannot depend on phi, so
    // the gradient is exactly zero and phi stays bit-identical.
    TrainState flat;
    flat.generator = zero_generator(spec);
    flat.adversary = init_gru_policy(spec.n_assets, 2, 1.0, 11);
    WindowSample fw = flat_window(spec, 0.005);
    std::vector<const WindowSample*> fbatch{&fw};
    const std::uint64_t phi0 = flat.adversary->gru.checksum();
    adversary_step(flat, fbatch, cfg, 101);
    CHECK(flat.adversary->gru.checksum() == phi0);

    TrainState no_adv;
    no_adv.generator = init_generator(spec, 7);
    CHECK_THROWS_AS(adversary_step(no_adv, batch, cfg, 101), TrainError);
}

TEST_CASE("generator_step freezes phi and skips zero-gradient batches") {
    const GeneratorSpec spec = small_spec();
    TrainConfig cfg;
    cfg.mode = TrainMode::adversarial;
    cfg.schedule.kind = LrSchedule::constant;
    cfg.lr_theta = 1e-3;
    cfg.mc_samples = 16;

    TrainState state;
    state.generator = init_generator(spec, 7);
    state.adversary = init_gru_policy(spec.n_assets, 2, 1.0, 11);
    WindowSample w = make_window(spec, 22, 0.02);
    std::vector<const WindowSample*> batch{&w};
    const std::uint64_t theta_sum = state.generator.params.checksum();
    const std::uint64_t phi_sum = state.adversary->gru.checksum();
    generator_step(state, batch, cfg, 55);
    CHECK(state.adversary->gru.checksum() == phi_sum);
    CHECK(state.generator.params.checksum() != theta_sum);

    // A zero-exposure policy makes every PnL identically zero, so the score is
    // a constant in theta and the parameters stay put.
    TrainConfig fixed_cfg = cfg;
    fixed_cfg.mode = TrainMode::fixed_policy;
    fixed_cfg.fixed_policies = {bench(PolicyKind::identity_sum, spec.n_assets, 0.0)};
    TrainState zs;
    zs.generator = init_generator(spec, 7);
    const std::uint64_t t0 = zs.generator.params.checksum();
    generator_step(zs, batch, fixed_cfg, 55);
    CHECK(zs.generator.params.checksum() == t0);
}

TEST_CASE("adversary steps strictly increase the minibatch score") {
    const GeneratorSpec spec = small_spec();
    TrainConfig cfg;
    cfg.mode = TrainMode::adversarial;
    cfg.schedule.kind = LrSchedule::constant;
    cfg.lr_phi = 3e-3;
    cfg.mc_samples = 48;

    TrainState state;
    state.generator = init_generator(spec, 7);
    state.adversary = init_gru_policy(spec.n_assets, 2, 1.0, 11);
    WindowSample w1 = make_window(spec, 31, 0.02);
    WindowSample w2 = make_window(spec, 32, 0.02);
    std::vector<const WindowSample*> batch{&w1, &w2};

    const std::uint64_t draw_seed = 909;
    for (int step = 0; step < 5; ++step) {
        const double before =
            eval_loss(state.generator, {*state.adversary}, batch, kSmooth, 48, draw_seed);
        adversary_step(state, batch, cfg, draw_seed);
        const double after =
            eval_loss(state.generator, {*state.adversary}, batch, kSmooth, 48, draw_seed);
        CHECK(after > before);
    }
}

TEST_CASE("one generator step descends the fixed-policy objective") {
    const GeneratorSpec spec = small_spec();
    TrainConfig cfg;
    cfg.mode = TrainMode::fixed_policy;
    cfg.fixed_policies = {bench(PolicyKind::identity_sum, spec.n_assets)};
    cfg.schedule.kind = LrSchedule::constant;
    cfg.lr_theta = 1e-3;
    cfg.mc_samples = 48;

    TrainState state;
    state.generator = init_generator(spec, 13);
    WindowSample w = make_window(spec, 41, 0.02);
    std::vector<const WindowSample*> batch{&w};
    const std::uint64_t draw_seed = 77;
    const double before =
        eval_loss(state.generator, cfg.fixed_policies, batch, kSmooth, 48, draw_seed);
    generator_step(state, batch, cfg, draw_seed);
    const double after =
        eval_loss(state.generator, cfg.fixed_policies, batch, kSmooth, 48, draw_seed);
    CHECK(after < before);
}

TEST_CASE("train: epochs=0 returns the initial state untouched") {
    const GeneratorSpec spec = small_spec();
    ReturnPanel panel;
    panel.assets = {"A", "B"};
    panel.returns = Tensor::zeros(20, 2);
    SequentialRng rng(5);
    for (std::size_t t = 0; t < 20; ++t) {
        panel.dates.push_back("2020-01-" + std::to_string(10 + t));
        for (std::size_t j = 0; j < 2; ++j) panel.returns.at(t, j) = 0.02 * rng.normal();
    }
    WindowDataset ds = make_windows(panel, spec.cond_len, spec.horizon, 1);
    split_dataset(ds, {0.6, 0.2, 0.2});

    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 99;
    cfg.fixed_policies = {bench(PolicyKind::identity_sum, spec.n_assets)};
    TrainState state = train(ds, spec, cfg);
    CHECK(state.history.empty());
    CHECK(state.generator.params.checksum() == init_generator(spec, 99).params.checksum());
}

TEST_CASE("train is deterministic under a fixed seed") {
    const GeneratorSpec spec = small_spec();
    ReturnPanel panel;
    panel.assets = {"A", "B"};
    panel.returns = Tensor::zeros(27, 2);
    SequentialRng rng(6);
    for (std::size_t t = 0; t < 27; ++t) {
        panel.dates.push_back("2020-02-" + std::to_string(10 + t));
        for (std::size_t j = 0; j < 2; ++j) panel.returns.at(t, j) = 0.02 * rng.normal();
    }
    WindowDataset ds = make_windows(panel, spec.cond_len, spec.horizon, 2);
    split_dataset(ds, {0.6, 0.2, 0.2});

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.mc_samples = 24;
    cfg.seed = 321;
    cfg.schedule.kind = LrSchedule::constant;
    cfg.lr_theta = 1e-3;
    cfg.fixed_policies = {bench(PolicyKind::identity_sum, spec.n_assets)};

    TrainState a = train(ds, spec, cfg);
    TrainState b = train(ds, spec, cfg);
    REQUIRE(a.history.size() == 2);
    REQUIRE(b.history.size() == 2);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_score == b.history[i].train_score);
        CHECK(a.history[i].val_score == b.history[i].val_score);
        CHECK(a.history[i].lr == b.history[i].lr);
        CHECK(std::isfinite(a.history[i].val_score));
    }
    CHECK(a.generator.params.checksum() == b.generator.params.checksum());
    CHECK(a.best_val <= a.history[0].val_score);
    CHECK(a.best_val <= a.history[1].val_score);
}

TEST_CASE("non-finite losses abort with diagnostics") {
    const GeneratorSpec spec = small_spec();
    TrainConfig cfg;
    cfg.mode = TrainMode::fixed_policy;
    cfg.fixed_policies = {bench(PolicyKind::identity_sum, spec.n_assets)};
    cfg.schedule.kind = LrSchedule::constant;
    cfg.mc_samples = 16;

    TrainState state;
    state.generator = init_generator(spec, 7);
    state.generator.params.at("mlp.b2").data[0] = std::numeric_limits<double>::quiet_NaN();
    WindowSample w = make_window(spec, 61, 0.02);
    std::vector<const WindowSample*> batch{&w};
    try {
        generator_step(state, batch, cfg, 9);
        FAIL("expected TrainError");
    } catch (const TrainError& e) {
        CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("convex toy: full-batch descent reaches the oracle bound") {
    // Generator replaced by a direct (v, e) pair on constant data; the mean
    // hard joint score is minimized exactly at v = e = l with value -s exp(l/s).
    const double l = -0.3;
    std::vector<double> data(4, l);
    const ScoreConfig hard{ScoreFamily::joint_var_es, 0.05, 2.0, 10.0, false};
    const double bound = oracle_bound(data, hard);

    double v = l - 0.01, e = l + 3e-4;
    const double lr = 5e-8;
    double prev = std::numeric_limits<double>::infinity();
    bool reached = false;
    for (long it = 0; it < 400000; ++it) {
        Graph g;
        Tensor tv = Tensor::zeros(1, 1), te = Tensor::zeros(1, 1);
        tv.data[0] = v;
        te.data[0] = e;
        tv.requires_grad = te.requires_grad = true;
        NodeId nv = g.leaf("v", tv), ne = g.leaf("e", te);
        NodeId acc = -1;
        for (double ell : data) {
            NodeId s = joint_score_node(g, nv, ne, g.constant(ell), hard);
            acc = acc < 0 ? s : g.add(acc, s);
        }
        NodeId loss = g.scale(acc, 1.0 / static_cast<double>(data.size()));
        const double val = g.scalar_value(loss);
        CHECK(val <= prev + 1e-15);
        prev = val;
        if (val <= bound + 1e-6) {
            reached = true;
            break;
        }
        g.backward(loss);
        v -= lr * g.grad(nv)[0];
        e -= lr * g.grad(ne)[0];
    }
    CHECK(reached);
}

TEST_CASE("history CSV format") {
    std::vector<HistoryRow> h{{0, 1.5, -2.0, 0.001}, {1, 0.25, -2.125, 0.5}};
    const std::string path = "/tmp/gar_trainer_hist.csv";
    write_history_csv(h, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_score,val_score,lr");
    std::getline(in, line);
    CHECK(line == "0,1.5,-2,0.001");
    std::getline(in, line);
    CHECK(line == "1,0.25,-2.125,0.5");
    CHECK(!std::getline(in, line));
    std::remove(path.c_str());
}
