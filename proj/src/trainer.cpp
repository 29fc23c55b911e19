#include "gar/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gar/rng.hpp"

namespace gar {

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (mc_samples < 2) throw std::invalid_argument("mc_samples must be >= 2");
    if (mode == TrainMode::fixed_policy && fixed_policies.empty())
        throw std::invalid_argument("fixed_policy mode needs a nonempty policy set");
    score.validate();
}

double lr_at(long step, long total_steps, const LrScheduleCfg& sched) {
    if (step < 0 || step >= total_steps)
        throw std::out_of_range("lr_at: step " + std::to_string(step) + " outside [0, " +
                                std::to_string(total_steps) + ")");
    if (sched.kind == LrSchedule::constant) return sched.max_lr;
    const double pi = 3.14159265358979323846;
    const double ramp = 0.3 * static_cast<double>(total_steps);
    const double s = static_cast<double>(step);
    if (s <= ramp || ramp == 0.0) {
        const double u = ramp == 0.0 ? 1.0 : s / ramp;
        return sched.initial_lr +
               (sched.max_lr - sched.initial_lr) * 0.5 * (1.0 - std::cos(pi * u));
    }
    const double final_lr = sched.initial_lr / 25.0;
    const double d = (s - ramp) / (static_cast<double>(total_steps) - ramp);
    return final_lr + (sched.max_lr - final_lr) * 0.5 * (1.0 + std::cos(pi * d));
}

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) {
    return mix64(mix64(mix64(base ^ mix64(a)) ^ mix64(b)) ^ mix64(c));
}

struct LossGraph {
    Graph g;
    std::map<std::string, NodeId> gen_ids;
    std::map<std::string, NodeId> pol_ids;
    NodeId loss = -1;
    std::vector<NodeId> per_sample;
};

// Minibatch mean score: for fixed sets the policies carry no gradient; in
// adversarial mode the single policy is bound with grad_phi.
void build_minibatch_loss(LossGraph& lg, const GeneratorParams& gen,
                          const std::vector<const PolicyParams*>& policies,
                          std::span<const WindowSample* const> batch,
                          const ScoreConfig& score, int mc_samples,
                          std::uint64_t draw_seed, bool grad_theta, bool grad_phi) {
    Graph& g = lg.g;
    lg.gen_ids = gen.params.bind(g, grad_theta);
    if (policies.size() == 1)
        lg.pol_ids = policies[0]->gru.bind(g, grad_phi);
    NodeId acc = -1;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        BoundModel m;
        m.spec = &gen.spec;
        m.gen = lg.gen_ids;
        m.policy = policies[k];
        m.pol = policies.size() == 1 ? lg.pol_ids : policies[k]->gru.bind(g, false);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            McConfig mc{mc_samples, derive_seed(draw_seed, k, i)};
            auto [v, e] = implied_risk_nodes(g, m, batch[i]->context, mc, score.alpha);
            NodeId ell = real_outcome_node(g, m, batch[i]->scenario);
            NodeId s = joint_score_node(g, v, e, ell, score);
            lg.per_sample.push_back(s);
            acc = acc < 0 ? s : g.add(acc, s);
        }
    }
    lg.loss = g.scale(acc, 1.0 / static_cast<double>(policies.size() * batch.size()));
}

void check_finite(const LossGraph& lg, long step) {
    const double loss = lg.g.scalar_value(lg.loss);
    if (std::isfinite(loss)) return;
    for (std::size_t i = 0; i < lg.per_sample.size(); ++i) {
        const double s = lg.g.scalar_value(lg.per_sample[i]);
        if (!std::isfinite(s))
            throw TrainError("non-finite loss at step " + std::to_string(step) +
                             ", batch term " + std::to_string(i) + " = " + std::to_string(s));
    }
    throw TrainError("non-finite loss at step " + std::to_string(step));
}

void adam_step(ParamStore& ps, const Graph& g, const std::map<std::string, NodeId>& ids,
               AdamBuffers& buf, const TrainConfig& cfg, double lr, bool ascent) {
    double gnorm_sq = 0.0;
    if (cfg.grad_clip > 0.0)
        for (auto& [name, t] : ps)
            for (double gi : g.grad(ids.at(name))) gnorm_sq += gi * gi;
    const double clip_scale =
        cfg.grad_clip > 0.0 && std::sqrt(gnorm_sq) > cfg.grad_clip
            ? cfg.grad_clip / std::sqrt(gnorm_sq)
            : 1.0;

    buf.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(buf.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(buf.t));
    for (auto& [name, t] : ps) {
        const auto& grad = g.grad(ids.at(name));
        auto& m = buf.m[name];
        auto& v = buf.v[name];
        if (m.size() != grad.size()) m.assign(grad.size(), 0.0);
        if (v.size() != grad.size()) v.assign(grad.size(), 0.0);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double gi = grad[i] * clip_scale;
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * gi;
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * gi * gi;
            const double update = lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
            t.data[i] += ascent ? update : -update;
        }
    }
}

double side_lr(const TrainState& state, const TrainConfig& cfg, bool phi) {
    if (cfg.schedule.kind == LrSchedule::constant) return phi ? cfg.lr_phi : cfg.lr_theta;
    const long total = std::max<long>(state.total_steps, 1);
    return lr_at(std::min(state.step, total - 1), total, cfg.schedule);
}

}  // namespace

NodeId fixed_policy_loss(Graph& g, BoundModel& bound_out, const GeneratorParams& gen,
                         const std::vector<PolicyParams>& policies,
                         std::span<const WindowSample* const> batch,
                         const ScoreConfig& score, int mc_samples,
                         std::uint64_t draw_seed) {
    if (policies.empty() || batch.empty())
        throw std::invalid_argument("fixed_policy_loss: empty batch or policy set");
    std::vector<const PolicyParams*> ptrs;
    for (const auto& p : policies) ptrs.push_back(&p);
    auto gen_ids = gen.params.bind(g, true);
    NodeId acc = -1;
    for (std::size_t k = 0; k < ptrs.size(); ++k) {
        BoundModel m;
        m.spec = &gen.spec;
        m.gen = gen_ids;
        m.policy = ptrs[k];
        m.pol = ptrs[k]->gru.bind(g, false);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            McConfig mc{mc_samples, derive_seed(draw_seed, k, i)};
            auto [v, e] = implied_risk_nodes(g, m, batch[i]->context, mc, score.alpha);
            NodeId ell = real_outcome_node(g, m, batch[i]->scenario);
            NodeId s = joint_score_node(g, v, e, ell, score);
            acc = acc < 0 ? s : g.add(acc, s);
        }
        if (k == 0) bound_out = m;
    }
    return g.scale(acc, 1.0 / static_cast<double>(ptrs.size() * batch.size()));
}

void adversary_step(TrainState& state, std::span<const WindowSample* const> batch,
                    const TrainConfig& cfg, std::uint64_t draw_seed) {
    if (!state.adversary) throw TrainError("adversary_step without an adversary");
    LossGraph lg;
    build_minibatch_loss(lg, state.generator, {&*state.adversary}, batch, cfg.score,
                         cfg.mc_samples, draw_seed, /*grad_theta=*/false,
                         /*grad_phi=*/true);
    check_finite(lg, state.step);
    lg.g.backward(lg.loss);
    adam_step(state.adversary->gru, lg.g, lg.pol_ids, state.adam_phi, cfg,
              side_lr(state, cfg, true), /*ascent=*/true);
}

void generator_step(TrainState& state, std::span<const WindowSample* const> batch,
                    const TrainConfig& cfg, std::uint64_t draw_seed) {
    if (state.history.empty()) state.history.push_back({0, 0.0, 0.0, 0.0});
    LossGraph lg;
    std::vector<const PolicyParams*> policies;
    if (cfg.mode == TrainMode::adversarial) {
        if (!state.adversary) throw TrainError("generator_step: adversary missing");
        policies = {&*state.adversary};
    } else {
        for (const auto& p : cfg.fixed_policies) policies.push_back(&p);
    }
    build_minibatch_loss(lg, state.generator, policies, batch, cfg.score, cfg.mc_samples,
                         draw_seed, /*grad_theta=*/true, /*grad_phi=*/false);
    check_finite(lg, state.step);
    lg.g.backward(lg.loss);
    adam_step(state.generator.params, lg.g, lg.gen_ids, state.adam_theta, cfg,
              side_lr(state, cfg, false), /*ascent=*/false);
    state.history.back().train_score = lg.g.scalar_value(lg.loss);
}

double mean_joint_score(const GeneratorParams& gen,
                        const std::vector<PolicyParams>& policies,
                        std::span<const WindowSample* const> samples,
                        const ScoreConfig& score, const McConfig& mc) {
    if (samples.empty() || policies.empty())
        throw std::invalid_argument("mean_joint_score: empty input");
    ScoreConfig hard = score;
    hard.smooth = false;
    double acc = 0.0;
    for (std::size_t k = 0; k < policies.size(); ++k)
        for (std::size_t i = 0; i < samples.size(); ++i) {
            McConfig smc{mc.n_samples, derive_seed(mc.seed, k, i)};
            RiskEstimate est =
                implied_risk(gen, policies[k], samples[i]->context, smc, score.alpha);
            const double ell = policy_functional(policies[k], samples[i]->scenario);
            acc += joint_var_es_score(est, ell, hard);
        }
    return acc / static_cast<double>(policies.size() * samples.size());
}

TrainState train(const WindowDataset& dataset, const GeneratorSpec& spec,
                 const TrainConfig& cfg) {
    cfg.validate();
    auto train_samples = dataset.of(Split::train);
    auto val_samples = dataset.of(Split::val);
    if (train_samples.empty()) throw TrainError("train: empty training split");

    TrainState state;
    state.generator = init_generator(spec, cfg.seed);
    if (cfg.mode == TrainMode::adversarial)
        state.adversary = init_gru_policy(spec.n_assets, cfg.adv_gru_layers,
                                          cfg.exposure_cap, derive_seed(cfg.seed, 0x617476));
    state.best = state.generator;
    state.best_val = std::numeric_limits<double>::infinity();

    const long n_batches =
        (static_cast<long>(train_samples.size()) + cfg.batch_size - 1) / cfg.batch_size;
    state.total_steps = static_cast<long>(cfg.epochs) * n_batches;
    if (cfg.epochs == 0) return state;

    std::vector<std::size_t> order(train_samples.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Seeded shuffle per epoch.
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        SequentialRng shuffle_rng(derive_seed(cfg.seed, 0x73687566, epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.integer(i)]);

        state.history.push_back({epoch, 0.0, 0.0, 0.0});
        double epoch_train = 0.0;
        for (long b = 0; b < n_batches; ++b) {
            std::vector<const WindowSample*> batch;
            for (long i = b * cfg.batch_size;
                 i < std::min<long>((b + 1) * cfg.batch_size,
                                    static_cast<long>(train_samples.size()));
                 ++i)
                batch.push_back(train_samples[order[static_cast<std::size_t>(i)]]);

            if (cfg.mode == TrainMode::adversarial)
                for (int a = 0; a < cfg.adv_steps_per_gen; ++a)
                    adversary_step(state, batch, cfg,
                                   derive_seed(cfg.seed, 0xadu, state.step, a));
            generator_step(state, batch, cfg, derive_seed(cfg.seed, 0x67u, state.step));
            epoch_train += state.history.back().train_score;
            state.history.back().lr = side_lr(state, cfg, false);
            state.step += 1;
        }
        state.history.back().train_score = epoch_train / static_cast<double>(n_batches);

        if (!val_samples.empty() && !cfg.fixed_policies.empty()) {
            McConfig mc{cfg.mc_samples, derive_seed(cfg.seed, 0x76616cu, epoch)};
            state.history.back().val_score =
                mean_joint_score(state.generator, cfg.fixed_policies, val_samples,
                                 cfg.score, mc);
            if (state.history.back().val_score < state.best_val) {
                state.best_val = state.history.back().val_score;
                state.best = state.generator;
            }
        } else {
            state.best = state.generator;
        }
    }
    return state;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write history csv: " + path);
    out << "epoch,train_score,val_score,lr\n";
    char buf[128];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", row.epoch, row.train_score,
                      row.val_score, row.lr);
        out << buf;
    }
}

}  // namespace gar
