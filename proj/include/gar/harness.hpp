#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gar/baselines.hpp"
#include "gar/datapipe.hpp"
#include "gar/pipeline.hpp"
#include "gar/trainer.hpp"

namespace gar {

// A conditional risk model: everything the evaluation loop needs from a
// trained generator, a direct forecaster, or an econometric baseline.
class RiskModel {
public:
    virtual ~RiskModel() = default;
    virtual std::string name() const = 0;

    // Monte Carlo policy outcomes for one context (simulation-based models).
    virtual std::vector<double> outcomes(const Tensor& context, int policy_index,
                                         const PolicyParams& policy,
                                         const McConfig& mc) const;

    // Simulated scenarios (M x T) for one context; used for density export.
    virtual std::vector<Tensor> scenarios(const Tensor& context, const McConfig& mc) const;

    // Implied (VaR, ES); default is the plug-in estimate over outcomes().
    virtual RiskEstimate implied(const Tensor& context, int policy_index,
                                 const PolicyParams& policy, const McConfig& mc,
                                 double alpha) const;
};

class GeneratorRiskModel : public RiskModel {
public:
    GeneratorRiskModel(GeneratorParams gen, std::string name)
        : gen_(std::move(gen)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::vector<double> outcomes(const Tensor& context, int policy_index,
                                 const PolicyParams& policy,
                                 const McConfig& mc) const override;
    std::vector<Tensor> scenarios(const Tensor& context, const McConfig& mc) const override;
    const GeneratorParams& generator() const { return gen_; }

private:
    GeneratorParams gen_;
    std::string name_;
};

class DirectLinearRiskModel : public RiskModel {
public:
    DirectLinearRiskModel(DirectLinearModel model, std::string name)
        : model_(std::move(model)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    RiskEstimate implied(const Tensor& context, int policy_index, const PolicyParams&,
                         const McConfig&, double alpha) const override;

private:
    DirectLinearModel model_;
    std::string name_;
};

class DccGarchRiskModel : public RiskModel {
public:
    DccGarchRiskModel(GarchParams params, int horizon, std::string name)
        : params_(std::move(params)), horizon_(horizon), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::vector<double> outcomes(const Tensor& context, int policy_index,
                                 const PolicyParams& policy,
                                 const McConfig& mc) const override;
    std::vector<Tensor> scenarios(const Tensor& context, const McConfig& mc) const override;

private:
    GarchParams params_;
    int horizon_;
    std::string name_;
};

// --- Synthetic family Y = (1 + |C|) * Z * u ---------------------------------
// Context carries the scalar c at entry (0, 0); scenario column t is
// (t+1) * (1+|c|) * z * u, so each PnL increment is (1+|c|) * z * u.

struct SyntheticFamily {
    int n_assets = 3;
    int cond_len = 5;
    int horizon = 10;
    std::vector<double> u;  // direction; defaults to all-ones if empty
    double kappa = 1.0;     // exposure of the identity-sum policy

    std::vector<double> direction() const;
};

// Std-dev of PnL | c = 0 under the identity-sum policy.
double synthetic_pnl_scale(const SyntheticFamily& fam);
double synthetic_var(const SyntheticFamily& fam, double c, double alpha = 0.05);
double synthetic_es(const SyntheticFamily& fam, double c, double alpha = 0.05);

WindowDataset make_synthetic_dataset(const SyntheticFamily& fam, int n_windows,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

// The correctly specified model: samples the true conditional law.
class SyntheticOracleModel : public RiskModel {
public:
    explicit SyntheticOracleModel(SyntheticFamily fam) : fam_(std::move(fam)) {}
    std::string name() const override { return "synthetic_oracle"; }
    std::vector<double> outcomes(const Tensor& context, int policy_index,
                                 const PolicyParams& policy,
                                 const McConfig& mc) const override;
    std::vector<Tensor> scenarios(const Tensor& context, const McConfig& mc) const override;

private:
    SyntheticFamily fam_;
};

// --- Evaluation metrics ------------------------------------------------------

struct ScoreEval {
    std::vector<double> per_policy;
    double overall = 0.0;
    double oracle_bound = 0.0;  // over the pooled realized outcomes
};

ScoreEval evaluate_score(const RiskModel& model,
                         std::span<const WindowSample* const> windows,
                         const std::vector<PolicyParams>& policies,
                         const ScoreConfig& score, const McConfig& mc);

double violation_rate(const RiskModel& model,
                      std::span<const WindowSample* const> windows, int policy_index,
                      const PolicyParams& policy, double alpha, const McConfig& mc);

struct WorstCaseConfig {
    int steps = 150;
    int batch_size = 32;
    double lr = 3e-3;
    int gru_layers = 3;
    double exposure_cap = 1.0;
    int mc_samples = 500;
    std::uint64_t seed = 17;
    ScoreConfig score{ScoreFamily::joint_var_es, 0.05, 2.0, 10.0, /*smooth=*/true};
};

// Trains a fresh seeded GRU adversary against the frozen generator and
// reports the final hard-indicator mean score on the split.
double worst_case_eval(const GeneratorParams& gen,
                       std::span<const WindowSample* const> windows,
                       const WorstCaseConfig& cfg);

// --- Reports -----------------------------------------------------------------

struct PolicyEvalRow {
    std::string policy;
    double score = 0.0;
    double violation_rate_pct = 0.0;
};

struct EvalReport {
    std::string model;
    std::string arch = "-";
    std::string mode = "-";
    std::string split;
    std::vector<PolicyEvalRow> per_policy;
    double mean_score = 0.0;
    double violation_rate_pct = 0.0;  // mean across policies
    double oracle_bound = 0.0;
    std::optional<double> worst_case_score;
    int worst_case_steps = 0;  // adversary budget used (0 = not evaluated)
    std::string config_fingerprint;
    std::uint64_t seed = 0;
};

EvalReport evaluate(const RiskModel& model, const WindowDataset& dataset, Split split,
                    const std::vector<PolicyParams>& policies, const ScoreConfig& score,
                    const McConfig& mc);

void save_eval_json(const EvalReport& report, const std::string& path);
EvalReport load_eval_json(const std::string& path);

// One row per (model, split); deterministic, byte-stable.
void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path);

// Collects <dir>/*/eval.json in lexicographic order.
std::vector<EvalReport> collect_reports(const std::string& runs_dir);

// --- Checkpoint I/O ----------------------------------------------------------

void save_generator_checkpoint(const GeneratorParams& gen, const std::string& mode,
                               std::uint64_t seed, const std::string& fingerprint,
                               const std::string& path);

struct LoadedCheckpoint {
    GeneratorParams gen;
    std::string mode;
    std::uint64_t seed = 0;
    std::string fingerprint;
};
LoadedCheckpoint load_generator_checkpoint(const std::string& path);

// --- Density export ----------------------------------------------------------

double silverman_bandwidth(std::span<const double> samples);
std::vector<double> gaussian_kde(std::span<const double> samples,
                                 std::span<const double> grid);

// Writes <prefix>_pnl_density.csv (per context x policy, with the tail region
// below the empirical 5% quantile flagged) and <prefix>_tail_marginals.csv
// (per-asset, per-time densities of tail-contributing scenario increments).
void export_pnl_density(const RiskModel& model, const std::vector<Tensor>& contexts,
                        const std::vector<PolicyParams>& policies, const McConfig& mc,
                        std::span<const double> grid, const std::string& prefix,
                        double alpha = 0.05);

}  // namespace gar
