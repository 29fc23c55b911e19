#include "gar/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gar/checkpoint.hpp"
#include "gar/rng.hpp"

#include "json.hpp"

namespace gar {

namespace {

// Content-addressed MC seed: duplicated windows get identical draws, so a
// duplicated split evaluates to the identical mean.
std::uint64_t context_seed(const Tensor& context, std::uint64_t base) {
    std::uint64_t h = mix64(base ^ 0x636f6e74657874ULL);
    for (double d : context.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

}  // namespace

// --- RiskModel defaults -----------------------------------------------------

std::vector<double> RiskModel::outcomes(const Tensor&, int, const PolicyParams&,
                                        const McConfig&) const {
    throw std::runtime_error(name() + ": outcome simulation not supported");
}

std::vector<Tensor> RiskModel::scenarios(const Tensor&, const McConfig&) const {
    throw std::runtime_error(name() + ": scenario simulation not supported");
}

RiskEstimate RiskModel::implied(const Tensor& context, int policy_index,
                                const PolicyParams& policy, const McConfig& mc,
                                double alpha) const {
    const std::vector<double> ell = outcomes(context, policy_index, policy, mc);
    RiskEstimate est;
    est.v = empirical_var(ell, alpha);
    est.e = empirical_es(ell, alpha);
    return est;
}

// --- GeneratorRiskModel ------------------------------------------------------

std::vector<double> GeneratorRiskModel::outcomes(const Tensor& context, int,
                                                 const PolicyParams& policy,
                                                 const McConfig& mc) const {
    Graph g;
    BoundModel m = bind_model(g, gen_, policy, false, false);
    NodeId ell = synthetic_outcomes_node(g, m, context, mc);
    g.forward();
    return g.value(ell).data;
}

std::vector<Tensor> GeneratorRiskModel::scenarios(const Tensor& context,
                                                  const McConfig& mc) const {
    return sample_scenarios(gen_, context, mc.n_samples, mc.seed);
}

// --- DirectLinearRiskModel ---------------------------------------------------

RiskEstimate DirectLinearRiskModel::implied(const Tensor& context, int policy_index,
                                            const PolicyParams&, const McConfig&,
                                            double) const {
    return model_.predict(context, policy_index);
}

// --- DccGarchRiskModel -------------------------------------------------------

std::vector<Tensor> DccGarchRiskModel::scenarios(const Tensor& context,
                                                 const McConfig& mc) const {
    const std::size_t M = params_.n_assets();
    if (context.rows() != M)
        throw std::invalid_argument("DccGarchRiskModel: context asset count mismatch");
    // Filter the context returns from the unconditional state.
    std::vector<double> sigma2(M);
    for (std::size_t j = 0; j < M; ++j)
        sigma2[j] = params_.omega[j] / (1.0 - params_.a[j] - params_.b[j]);
    Tensor q = params_.qbar;
    std::vector<double> z(M, 0.0);
    for (std::size_t t = 0; t < context.cols(); ++t) {
        std::vector<double> znow(M);
        for (std::size_t j = 0; j < M; ++j) {
            const double r = context.at(j, t);
            znow[j] = r / std::sqrt(sigma2[j]);
            sigma2[j] = params_.omega[j] + params_.a[j] * r * r + params_.b[j] * sigma2[j];
        }
        Tensor qn = Tensor::zeros(M, M);
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t k = 0; k < M; ++k)
                qn.at(i, k) = (1.0 - params_.dcc_a - params_.dcc_b) * params_.qbar.at(i, k) +
                              params_.dcc_a * znow[i] * znow[k] +
                              params_.dcc_b * q.at(i, k);
        q = qn;
        z = znow;
    }
    GarchState state{sigma2, q, z};
    return simulate_dcc_garch(params_, state, horizon_, mc.n_samples, mc.seed);
}

std::vector<double> DccGarchRiskModel::outcomes(const Tensor& context, int,
                                                const PolicyParams& policy,
                                                const McConfig& mc) const {
    std::vector<double> ell;
    for (const Tensor& y : scenarios(context, mc)) ell.push_back(policy_functional(policy, y));
    return ell;
}

// --- Synthetic family --------------------------------------------------------

std::vector<double> SyntheticFamily::direction() const {
    if (!u.empty()) {
        if (static_cast<int>(u.size()) != n_assets)
            throw std::invalid_argument("SyntheticFamily: direction length != n_assets");
        return u;
    }
    return std::vector<double>(static_cast<std::size_t>(n_assets), 1.0);
}

double synthetic_pnl_scale(const SyntheticFamily& fam) {
    const auto dir = fam.direction();
    const double usum = std::accumulate(dir.begin(), dir.end(), 0.0);
    return std::abs(usum) * fam.kappa / static_cast<double>(fam.n_assets) *
           static_cast<double>(fam.horizon - 1);
}

namespace {

constexpr double kSqrt2Pi = 2.506628274631000502;

double normal_quantile_lower(double alpha) {
    // Bisection on the standard normal CDF; plenty for evaluation use.
    auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Tensor synthetic_scenario(const SyntheticFamily& fam, double c, double z) {
    const auto dir = fam.direction();
    Tensor y = Tensor::zeros(static_cast<std::size_t>(fam.n_assets),
                             static_cast<std::size_t>(fam.horizon));
    for (int j = 0; j < fam.n_assets; ++j)
        for (int t = 0; t < fam.horizon; ++t)
            y.at(static_cast<std::size_t>(j), static_cast<std::size_t>(t)) =
                static_cast<double>(t + 1) * (1.0 + std::abs(c)) * z *
                dir[static_cast<std::size_t>(j)];
    return y;
}

}  // namespace

double synthetic_var(const SyntheticFamily& fam, double c, double alpha) {
    return normal_quantile_lower(alpha) * (1.0 + std::abs(c)) * synthetic_pnl_scale(fam);
}

double synthetic_es(const SyntheticFamily& fam, double c, double alpha) {
    const double za = normal_quantile_lower(alpha);
    const double es_z = -std::exp(-0.5 * za * za) / kSqrt2Pi / alpha;
    return es_z * (1.0 + std::abs(c)) * synthetic_pnl_scale(fam);
}

WindowDataset make_synthetic_dataset(const SyntheticFamily& fam, int n_windows,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
    if (n_windows < 3) throw std::invalid_argument("make_synthetic_dataset: too few windows");
    WindowDataset ds;
    ds.assets.resize(static_cast<std::size_t>(fam.n_assets));
    for (int j = 0; j < fam.n_assets; ++j) ds.assets[static_cast<std::size_t>(j)] = "S" + std::to_string(j + 1);
    ds.cond_len = fam.cond_len;
    ds.horizon = fam.horizon;
    ds.stride = fam.cond_len + fam.horizon;  // non-overlapping by construction

    const int n_train = static_cast<int>(std::floor(ratios[0] * n_windows));
    const int n_val = static_cast<int>(std::floor(ratios[1] * n_windows));
    SequentialRng rng(mix64(seed ^ 0x73796e7468ULL));
    for (int i = 0; i < n_windows; ++i) {
        const double c = rng.normal();
        const double z = rng.normal();
        WindowSample w;
        w.context = Tensor::zeros(static_cast<std::size_t>(fam.n_assets),
                                  static_cast<std::size_t>(fam.cond_len));
        w.context.at(0, 0) = c;
        w.scenario = synthetic_scenario(fam, c, z);
        w.origin = i * ds.stride;
        w.origin_date = "w" + std::to_string(i);
        w.split = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
        ds.samples.push_back(std::move(w));
    }
    return ds;
}

std::vector<double> SyntheticOracleModel::outcomes(const Tensor& context, int,
                                                   const PolicyParams& policy,
                                                   const McConfig& mc) const {
    const double c = context.at(0, 0);
    CounterRng rng(mix64(mc.seed ^ 0x6f7261636c65ULL));
    std::vector<double> ell(static_cast<std::size_t>(mc.n_samples));
    for (int i = 0; i < mc.n_samples; ++i)
        ell[static_cast<std::size_t>(i)] =
            policy_functional(policy, synthetic_scenario(fam_, c, rng.normal(static_cast<std::uint64_t>(i))));
    return ell;
}

std::vector<Tensor> SyntheticOracleModel::scenarios(const Tensor& context,
                                                    const McConfig& mc) const {
    const double c = context.at(0, 0);
    CounterRng rng(mix64(mc.seed ^ 0x6f7261636c65ULL));
    std::vector<Tensor> out;
    for (int i = 0; i < mc.n_samples; ++i)
        out.push_back(synthetic_scenario(fam_, c, rng.normal(static_cast<std::uint64_t>(i))));
    return out;
}

// --- Evaluation metrics ------------------------------------------------------

ScoreEval evaluate_score(const RiskModel& model,
                         std::span<const WindowSample* const> windows,
                         const std::vector<PolicyParams>& policies,
                         const ScoreConfig& score, const McConfig& mc) {
    if (windows.empty()) throw std::invalid_argument("evaluate_score: empty split");
    if (policies.empty()) throw std::invalid_argument("evaluate_score: no policies");
    ScoreConfig hard = score;
    hard.smooth = false;
    ScoreEval out;
    std::vector<double> pooled;
    for (const auto& policy : policies) {
        const int k = static_cast<int>(out.per_policy.size());
        double acc = 0.0;
        for (const auto* w : windows) {
            McConfig wmc = mc;
            wmc.seed = context_seed(w->context, mc.seed);
            const RiskEstimate est = model.implied(w->context, k, policy, wmc, hard.alpha);
            const double ell = policy_functional(policy, w->scenario);
            acc += joint_var_es_score(est, ell, hard);
            pooled.push_back(ell);
        }
        out.per_policy.push_back(acc / static_cast<double>(windows.size()));
    }
    out.overall = std::accumulate(out.per_policy.begin(), out.per_policy.end(), 0.0) /
                  static_cast<double>(out.per_policy.size());
    out.oracle_bound = oracle_bound(pooled, hard);
    return out;
}

double violation_rate(const RiskModel& model,
                      std::span<const WindowSample* const> windows, int policy_index,
                      const PolicyParams& policy, double alpha, const McConfig& mc) {
    if (windows.empty()) throw std::invalid_argument("violation_rate: empty split");
    std::size_t violations = 0;
    for (const auto* w : windows) {
        McConfig wmc = mc;
        wmc.seed = context_seed(w->context, mc.seed);
        const RiskEstimate est = model.implied(w->context, policy_index, policy, wmc, alpha);
        if (policy_functional(policy, w->scenario) < est.v) ++violations;
    }
    return 100.0 * static_cast<double>(violations) / static_cast<double>(windows.size());
}

double worst_case_eval(const GeneratorParams& gen,
                       std::span<const WindowSample* const> windows,
                       const WorstCaseConfig& cfg) {
    if (windows.empty()) throw std::invalid_argument("worst_case_eval: empty split");
    TrainState state;
    state.generator = gen;  // trained on a copy; the caller's parameters stay frozen
    state.adversary = init_gru_policy(gen.spec.n_assets, cfg.gru_layers,
                                      cfg.exposure_cap, mix64(cfg.seed ^ 0x776f727374ULL));
    state.total_steps = cfg.steps;

    TrainConfig tc;
    tc.mode = TrainMode::adversarial;
    tc.schedule.kind = LrSchedule::constant;
    tc.lr_phi = cfg.lr;
    tc.mc_samples = cfg.mc_samples;
    tc.score = cfg.score;
    tc.score.smooth = true;
    tc.batch_size = cfg.batch_size;

    SequentialRng pick(mix64(cfg.seed ^ 0x62617463ULL));
    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                 windows.size());
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<const WindowSample*> batch;
        for (std::size_t i = 0; i < bs; ++i)
            batch.push_back(windows[pick.integer(windows.size())]);
        adversary_step(state, batch, tc, mix64(cfg.seed + static_cast<std::uint64_t>(step)));
        state.step += 1;
    }
    ScoreConfig hard = cfg.score;
    hard.smooth = false;
    return mean_joint_score(state.generator, {*state.adversary}, windows, hard,
                            McConfig{cfg.mc_samples, mix64(cfg.seed ^ 0x6576616cULL)});
}

// --- Reports -----------------------------------------------------------------

EvalReport evaluate(const RiskModel& model, const WindowDataset& dataset, Split split,
                    const std::vector<PolicyParams>& policies, const ScoreConfig& score,
                    const McConfig& mc) {
    auto windows = dataset.of(split);
    ScoreEval se = evaluate_score(model, windows, policies, score, mc);
    EvalReport r;
    r.model = model.name();
    r.split = split_name(split);
    r.mean_score = se.overall;
    r.oracle_bound = se.oracle_bound;
    r.seed = mc.seed;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        PolicyEvalRow row;
        row.policy = policy_name(policies[k].kind);
        row.score = se.per_policy[k];
        row.violation_rate_pct = violation_rate(model, windows, static_cast<int>(k),
                                                policies[k], score.alpha, mc);
        r.violation_rate_pct += row.violation_rate_pct;
        r.per_policy.push_back(std::move(row));
    }
    r.violation_rate_pct /= static_cast<double>(policies.size());
    return r;
}

void save_eval_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["model"] = report.model;
    j["arch"] = report.arch;
    j["mode"] = report.mode;
    j["split"] = report.split;
    j["mean_score"] = report.mean_score;
    j["violation_rate_pct"] = report.violation_rate_pct;
    j["oracle_bound"] = report.oracle_bound;
    if (report.worst_case_score) j["worst_case_score"] = *report.worst_case_score;
    j["worst_case_steps"] = report.worst_case_steps;
    j["config_fingerprint"] = report.config_fingerprint;
    j["seed"] = report.seed;
    for (const auto& row : report.per_policy)
        j["per_policy"].push_back({{"policy", row.policy},
                                   {"score", row.score},
                                   {"violation_rate_pct", row.violation_rate_pct}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

EvalReport load_eval_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.arch = j.value("arch", "-");
    r.mode = j.value("mode", "-");
    r.split = j.at("split").get<std::string>();
    r.mean_score = j.at("mean_score").get<double>();
    r.violation_rate_pct = j.at("violation_rate_pct").get<double>();
    r.oracle_bound = j.at("oracle_bound").get<double>();
    if (j.contains("worst_case_score")) r.worst_case_score = j["worst_case_score"].get<double>();
    r.worst_case_steps = j.value("worst_case_steps", 0);
    r.config_fingerprint = j.value("config_fingerprint", "");
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("per_policy"))
        for (const auto& row : j["per_policy"])
            r.per_policy.push_back({row.at("policy").get<std::string>(),
                                    row.at("score").get<double>(),
                                    row.at("violation_rate_pct").get<double>()});
    return r;
}

void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "model,arch,mode,split,policy,score,violation_rate_pct,oracle_bound,"
           "worst_case_score,seed\n";
    char buf[512];
    for (const auto& r : reports) {
        std::string policy;
        for (const auto& row : r.per_policy) {
            if (!policy.empty()) policy += '+';
            policy += row.policy;
        }
        std::string wc;
        if (r.worst_case_score) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.worst_case_score);
            wc = buf;
        }
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%s,%.17g,%.17g,%.17g,%s,%llu\n",
                      r.model.c_str(), r.arch.c_str(), r.mode.c_str(), r.split.c_str(),
                      policy.c_str(), r.mean_score, r.violation_rate_pct, r.oracle_bound,
                      wc.c_str(), static_cast<unsigned long long>(r.seed));
        out << buf;
    }
}

std::vector<EvalReport> collect_reports(const std::string& runs_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(runs_dir))
        throw std::runtime_error("report: not a directory: " + runs_dir);
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
        const fs::path eval = entry.path() / "eval.json";
        if (entry.is_directory() && fs::exists(eval)) paths.push_back(eval);
    }
    std::sort(paths.begin(), paths.end());
    std::vector<EvalReport> reports;
    for (const auto& p : paths) reports.push_back(load_eval_json(p.string()));
    return reports;
}

// --- Checkpoint I/O ----------------------------------------------------------

void save_generator_checkpoint(const GeneratorParams& gen, const std::string& mode,
                               std::uint64_t seed, const std::string& fingerprint,
                               const std::string& path) {
    nlohmann::json meta;
    meta["kind"] = "generator";
    meta["arch"] = arch_name(gen.spec.arch);
    meta["n_assets"] = gen.spec.n_assets;
    meta["cond_len"] = gen.spec.cond_len;
    meta["horizon"] = gen.spec.horizon;
    meta["latent_dim"] = gen.spec.latent_dim;
    meta["hidden_dim"] = gen.spec.hidden_dim;
    meta["mlp_layers"] = gen.spec.mlp_layers;
    meta["decoder_layers"] = gen.spec.decoder_layers;
    meta["lstm_layers"] = gen.spec.lstm_layers;
    meta["unconditional"] = gen.spec.unconditional;
    meta["leaky_slope"] = gen.spec.leaky_slope;
    meta["mode"] = mode;
    meta["seed"] = seed;
    meta["fingerprint"] = fingerprint;
    save_named_tensors(path, meta, gen.params);
}

LoadedCheckpoint load_generator_checkpoint(const std::string& path) {
    LoadedCheckpoint out;
    nlohmann::json meta = load_named_tensors(path, out.gen.params);
    if (meta.value("kind", "") != "generator")
        throw std::runtime_error(path + ": not a generator checkpoint");
    GeneratorSpec& s = out.gen.spec;
    s.arch = arch_from_name(meta.at("arch").get<std::string>());
    s.n_assets = meta.at("n_assets").get<int>();
    s.cond_len = meta.at("cond_len").get<int>();
    s.horizon = meta.at("horizon").get<int>();
    s.latent_dim = meta.at("latent_dim").get<int>();
    s.hidden_dim = meta.at("hidden_dim").get<int>();
    s.mlp_layers = meta.at("mlp_layers").get<int>();
    s.decoder_layers = meta.at("decoder_layers").get<int>();
    s.lstm_layers = meta.at("lstm_layers").get<int>();
    s.unconditional = meta.at("unconditional").get<bool>();
    s.leaky_slope = meta.at("leaky_slope").get<double>();
    out.mode = meta.value("mode", "-");
    out.seed = meta.value("seed", std::uint64_t{0});
    out.fingerprint = meta.value("fingerprint", "");
    return out;
}

// --- Density export ----------------------------------------------------------

double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("silverman_bandwidth: need >= 2 samples");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                        static_cast<double>(n);
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double idx = p * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const double frac = idx - static_cast<double>(lo);
        return lo + 1 < n ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac : sorted[lo];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double a = std::sqrt(var);
    if (iqr > 0.0) a = std::min(a, iqr / 1.349);
    if (a <= 0.0) a = 1e-12;  // degenerate sample; keep the kernel finite
    return 0.9 * a * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> gaussian_kde(std::span<const double> samples,
                                 std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("gaussian_kde: empty grid");
    const double h = silverman_bandwidth(samples);
    std::vector<double> density(grid.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * h * kSqrt2Pi);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0.0;
        for (double x : samples) {
            const double u = (grid[i] - x) / h;
            acc += std::exp(-0.5 * u * u);
        }
        density[i] = acc * norm;
    }
    return density;
}

void export_pnl_density(const RiskModel& model, const std::vector<Tensor>& contexts,
                        const std::vector<PolicyParams>& policies, const McConfig& mc,
                        std::span<const double> grid, const std::string& prefix,
                        double alpha) {
    if (grid.empty()) throw std::invalid_argument("export_pnl_density: empty grid");
    if (contexts.empty() || policies.empty())
        throw std::invalid_argument("export_pnl_density: nothing to export");

    std::ofstream pnl(prefix + "_pnl_density.csv");
    if (!pnl) throw std::runtime_error("cannot write " + prefix + "_pnl_density.csv");
    pnl << "context,policy,x,density,in_tail\n";
    std::ofstream marg(prefix + "_tail_marginals.csv");
    if (!marg) throw std::runtime_error("cannot write " + prefix + "_tail_marginals.csv");
    marg << "context,policy,asset,time,x,density\n";

    char buf[256];
    for (std::size_t ci = 0; ci < contexts.size(); ++ci) {
        const std::vector<Tensor> scen = model.scenarios(contexts[ci], mc);
        for (std::size_t k = 0; k < policies.size(); ++k) {
            std::vector<double> ell;
            for (const Tensor& y : scen) ell.push_back(policy_functional(policies[k], y));
            const double q = empirical_var(ell, alpha);
            const std::vector<double> density = gaussian_kde(ell, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%d\n", ci,
                              policy_name(policies[k].kind).c_str(), grid[i], density[i],
                              grid[i] <= q ? 1 : 0);
                pnl << buf;
            }
            // Tail-contributing scenarios: per-asset, per-time increment marginals.
            std::vector<const Tensor*> tail;
            for (std::size_t i = 0; i < scen.size(); ++i)
                if (ell[i] < q) tail.push_back(&scen[i]);
            if (tail.size() < 2) continue;
            const std::size_t M = scen.front().rows(), T = scen.front().cols();
            for (std::size_t j = 0; j < M; ++j) {
                for (std::size_t t = 0; t + 1 < T; ++t) {
                    std::vector<double> inc;
                    for (const Tensor* y : tail) inc.push_back(y->at(j, t + 1) - y->at(j, t));
                    const std::vector<double> d = gaussian_kde(inc, grid);
                    for (std::size_t i = 0; i < grid.size(); ++i) {
                        std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%zu,%.17g,%.17g\n", ci,
                                      policy_name(policies[k].kind).c_str(), j, t, grid[i],
                                      d[i]);
                        marg << buf;
                    }
                }
            }
        }
    }
}

}  // namespace gar
