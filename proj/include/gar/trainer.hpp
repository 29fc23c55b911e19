#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gar/datapipe.hpp"
#include "gar/pipeline.hpp"

namespace gar {

enum class TrainMode { fixed_policy, adversarial };
enum class LrSchedule { constant, one_cycle };

struct LrScheduleCfg {
    LrSchedule kind = LrSchedule::one_cycle;
    double initial_lr = 1e-10;
    double max_lr = 1e-3;   // OneCycle peak; the paper names only the schedule
};

// OneCycle: cosine ramp initial->max over the first 30% of steps, then cosine
// anneal to initial/25.
double lr_at(long step, long total_steps, const LrScheduleCfg& sched);

struct TrainConfig {
    int epochs = 10;
    int batch_size = 128;
    double lr_theta = 1e-3;  // constant-schedule rates
    double lr_phi = 1e-3;
    LrScheduleCfg schedule;
    int mc_samples = 2000;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::fixed_policy;
    std::vector<PolicyParams> fixed_policies;  // training set (fixed mode) and
                                               // validation benchmark set
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    double grad_clip = 0.0;  // global-norm cap; 0 disables
    int adv_steps_per_gen = 1;
    ScoreConfig score{ScoreFamily::joint_var_es, 0.05, 2.0, 10.0, /*smooth=*/true};
    int adv_gru_layers = 3;
    double exposure_cap = 1.0;
    bool deterministic = true;

    void validate() const;
};

struct AdamBuffers {
    std::map<std::string, std::vector<double>> m, v;
    long t = 0;
};

struct HistoryRow {
    int epoch = 0;
    double train_score = 0.0;  // minibatch-mean training objective (smooth)
    double val_score = 0.0;    // hard-indicator benchmark score
    double lr = 0.0;
};

struct TrainState {
    GeneratorParams generator;
    std::optional<PolicyParams> adversary;
    long step = 0;
    long total_steps = 0;
    AdamBuffers adam_theta, adam_phi;
    std::vector<HistoryRow> history;
    GeneratorParams best;  // best-validation checkpoint
    double best_val = 0.0;
};

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mean smooth score over the batch and policy set, differentiable in theta.
NodeId fixed_policy_loss(Graph& g, BoundModel& bound_out,
                         const GeneratorParams& gen,
                         const std::vector<PolicyParams>& policies,
                         std::span<const WindowSample* const> batch,
                         const ScoreConfig& score, int mc_samples,
                         std::uint64_t draw_seed);

// One Adam ascent step on phi with theta frozen (fresh latent draws).
void adversary_step(TrainState& state, std::span<const WindowSample* const> batch,
                    const TrainConfig& cfg, std::uint64_t draw_seed);
// One Adam descent step on theta with phi (or the fixed set) frozen.
void generator_step(TrainState& state, std::span<const WindowSample* const> batch,
                    const TrainConfig& cfg, std::uint64_t draw_seed);

TrainState train(const WindowDataset& dataset, const GeneratorSpec& spec,
                 const TrainConfig& cfg);

// Hard-indicator mean joint score of a generator over samples and policies.
double mean_joint_score(const GeneratorParams& gen,
                        const std::vector<PolicyParams>& policies,
                        std::span<const WindowSample* const> samples,
                        const ScoreConfig& score, const McConfig& mc);

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

}  // namespace gar
