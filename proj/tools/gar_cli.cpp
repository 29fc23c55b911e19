// gar: train and evaluate policy-conditional scenario generators.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "gar/harness.hpp"
#include "gar/rng.hpp"

namespace fs = std::filesystem;
using namespace gar;

namespace {

// Flat key=value config; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

template <typename T>
T get_or(const std::map<std::string, std::string>& kv, const std::string& key, T fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::istringstream ss(it->second);
    T v;
    if (!(ss >> v)) throw std::runtime_error("config: bad value for " + key);
    return v;
}

std::vector<PolicyParams> parse_policies(const std::string& csv, int n_assets, double kappa) {
    std::vector<PolicyParams> out;
    std::stringstream ss(csv);
    std::string name;
    while (std::getline(ss, name, ',')) {
        PolicyParams p;
        p.kind = policy_from_name(name);
        p.n_assets = n_assets;
        p.exposure_cap = kappa;
        out.push_back(std::move(p));
    }
    if (out.empty()) throw std::runtime_error("no policies given");
    return out;
}

WindowDataset load_any_dataset(const std::string& path,
                               const std::map<std::string, std::string>& cfg) {
    if (!fs::exists(path)) throw std::runtime_error("data cache not found: " + path);
    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    in.close();
    if (header.find("window_dataset") != std::string::npos) return load_dataset(path);
    ReturnPanel panel = load_panel(path);
    WindowDataset ds = make_windows(panel, get_or(cfg, "cond_len", 5),
                                    get_or(cfg, "horizon", 10), get_or(cfg, "stride", 1));
    split_dataset(ds, {get_or(cfg, "split_train", 0.8), get_or(cfg, "split_val", 0.1),
                       get_or(cfg, "split_test", 0.1)});
    return ds;
}

std::string fingerprint_config(const std::map<std::string, std::string>& kv) {
    std::uint64_t h = 0x66696e6765ULL;
    for (const auto& [k, v] : kv) {
        for (char c : k) h = mix64(h ^ static_cast<std::uint64_t>(c));
        for (char c : v) h = mix64(h ^ static_cast<std::uint64_t>(c));
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int cmd_ingest(const std::string& csv, const std::string& out) {
    ReturnPanel panel = load_prices(csv);
    save_panel(panel, out);
    std::printf("ingested %zu rows x %zu assets (%zu rows dropped) -> %s\n",
                panel.n_rows(), panel.n_assets(), panel.dropped_rows, out.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::string& mode_flag,
              const std::string& arch_flag, long long seed_flag, int epochs_flag) {
    auto kv = read_config(config_path);
    WindowDataset ds = load_any_dataset(data_path, kv);
    const int M = static_cast<int>(ds.assets.size());

    GeneratorSpec spec;
    spec.arch = arch_from_name(!arch_flag.empty() ? arch_flag
                                                  : get_or<std::string>(kv, "arch", "encoder_linear"));
    spec.n_assets = M;
    spec.cond_len = ds.cond_len;
    spec.horizon = ds.horizon;
    spec.latent_dim = get_or(kv, "latent_dim", 4);
    spec.hidden_dim = get_or(kv, "hidden_dim", 4);
    spec.mlp_layers = get_or(kv, "mlp_layers", 2);
    spec.decoder_layers = get_or(kv, "decoder_layers", 2);
    spec.lstm_layers = get_or(kv, "lstm_layers", 1);
    spec.unconditional = get_or(kv, "unconditional", 0) != 0;

    TrainConfig tc;
    tc.epochs = epochs_flag >= 0 ? epochs_flag : get_or(kv, "epochs", 10);
    tc.batch_size = get_or(kv, "batch_size", 128);
    tc.schedule.kind = get_or<std::string>(kv, "lr_schedule", "onecycle") == "constant"
                           ? LrSchedule::constant
                           : LrSchedule::one_cycle;
    tc.schedule.initial_lr = get_or(kv, "initial_lr", 1e-10);
    tc.schedule.max_lr = get_or(kv, "max_lr", 1e-3);
    tc.lr_theta = get_or(kv, "lr_theta", 1e-3);
    tc.lr_phi = get_or(kv, "lr_phi", 1e-3);
    tc.mc_samples = get_or(kv, "mc_samples", 2000);
    tc.seed = seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag)
                             : get_or<std::uint64_t>(kv, "seed", 0);
    const std::string mode =
        !mode_flag.empty() ? mode_flag : get_or<std::string>(kv, "mode", "fixed");
    if (mode == "fixed")
        tc.mode = TrainMode::fixed_policy;
    else if (mode == "adversarial")
        tc.mode = TrainMode::adversarial;
    else
        throw std::runtime_error("mode must be fixed or adversarial, got " + mode);
    const double kappa = get_or(kv, "exposure_cap", 1.0);
    tc.fixed_policies = parse_policies(
        get_or<std::string>(kv, "policies", "mean_reversion,trend_following"), M, kappa);
    tc.exposure_cap = kappa;
    tc.adv_gru_layers = get_or(kv, "gru_layers", 3);
    tc.adv_steps_per_gen = get_or(kv, "adv_steps_per_gen", 1);
    tc.score.alpha = get_or(kv, "alpha", 0.05);
    tc.score.h2_scale = get_or(kv, "h2_scale", 2.0);
    tc.score.sharpness = get_or(kv, "sharpness", 10.0);
    tc.grad_clip = get_or(kv, "grad_clip", 0.0);
    tc.deterministic = get_or(kv, "deterministic", 1) != 0;

    TrainState state = train(ds, spec, tc);

    fs::create_directories(out_dir);
    const std::string fp = fingerprint_config(kv);
    save_generator_checkpoint(state.generator, mode, tc.seed, fp,
                              out_dir + "/checkpoint.bin");
    save_generator_checkpoint(state.best, mode, tc.seed, fp, out_dir + "/best.bin");
    write_history_csv(state.history, out_dir + "/history.csv");
    std::printf("trained %s (%s mode) for %d epochs -> %s\n",
                arch_name(spec.arch).c_str(), mode.c_str(), tc.epochs, out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& split_str, const std::string& policies_str,
             bool worst_case, int mc_samples, long long seed, const std::string& out_dir,
             const std::string& config_path) {
    if (!fs::exists(checkpoint))
        throw std::runtime_error("checkpoint not found: " + checkpoint);
    auto kv = config_path.empty() ? std::map<std::string, std::string>{}
                                  : read_config(config_path);
    LoadedCheckpoint ckpt = load_generator_checkpoint(checkpoint);
    WindowDataset ds = load_any_dataset(data_path, kv);
    const Split split = split_from_name(split_str);
    const int M = static_cast<int>(ds.assets.size());
    auto policies = parse_policies(policies_str, M, get_or(kv, "exposure_cap", 1.0));

    GeneratorRiskModel model(ckpt.gen, "generator_" + arch_name(ckpt.gen.spec.arch));
    ScoreConfig score;
    McConfig mc{mc_samples, seed >= 0 ? static_cast<std::uint64_t>(seed) : ckpt.seed};
    EvalReport report = evaluate(model, ds, split, policies, score, mc);
    report.arch = arch_name(ckpt.gen.spec.arch);
    report.mode = ckpt.mode;
    report.config_fingerprint = ckpt.fingerprint;
    if (worst_case) {
        WorstCaseConfig wc;
        wc.seed = mc.seed;
        wc.mc_samples = mc_samples;
        report.worst_case_score = worst_case_eval(ckpt.gen, ds.of(split), wc);
        report.worst_case_steps = wc.steps;
    }
    const std::string dir = out_dir.empty() ? fs::path(checkpoint).parent_path().string()
                                            : out_dir;
    fs::create_directories(dir.empty() ? "." : dir);
    save_eval_json(report, (dir.empty() ? "." : dir) + std::string("/eval.json"));
    std::printf("%s %s: score %.6f (oracle %.6f), violation rate %.2f%%", report.model.c_str(),
                report.split.c_str(), report.mean_score, report.oracle_bound,
                report.violation_rate_pct);
    if (report.worst_case_score) std::printf(", worst-case %.6f", *report.worst_case_score);
    std::printf("\n");
    return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& out) {
    auto reports = collect_reports(runs_dir);
    write_report_csv(reports, out);
    std::printf("wrote %zu rows -> %s\n", reports.size(), out.c_str());
    return 0;
}

int cmd_synth(const std::string& family, int windows, int assets, int cond_len,
              int horizon, long long seed, const std::string& out) {
    if (family != "scaled_normal")
        throw std::runtime_error("unknown synthetic family: " + family);
    SyntheticFamily fam;
    fam.n_assets = assets;
    fam.cond_len = cond_len;
    fam.horizon = horizon;
    WindowDataset ds = make_synthetic_dataset(fam, windows, {0.8, 0.1, 0.1},
                                              static_cast<std::uint64_t>(seed));
    save_dataset(ds, out);
    std::printf("wrote %zu synthetic windows (%d assets) -> %s\n", ds.samples.size(),
                assets, out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gar: policy-conditional scenario generation and risk evaluation"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "build a return-panel cache from a price CSV");
    std::string in_csv, ingest_out;
    ingest->add_option("csv", in_csv, "price CSV (date,asset columns)")->required();
    ingest->add_option("--out", ingest_out, "output cache path")->required();

    auto* train_cmd = app.add_subcommand("train", "train a conditional generator");
    std::string cfg_path, data_path, run_dir, mode_flag, arch_flag;
    long long seed_flag = -1;
    int epochs_flag = -1;
    train_cmd->add_option("--config", cfg_path, "key=value config file")->required();
    train_cmd->add_option("--data", data_path, "panel or dataset cache")->required();
    train_cmd->add_option("--out", run_dir, "run directory")->required();
    train_cmd->add_option("--mode", mode_flag, "fixed | adversarial");
    train_cmd->add_option("--arch", arch_flag, "simple_linear | encoder_linear | encoder_lstm");
    train_cmd->add_option("--seed", seed_flag, "RNG seed");
    train_cmd->add_option("--epochs", epochs_flag, "epoch count override");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained generator");
    std::string ckpt_path, split_str = "test", eval_policies = "mean_reversion,trend_following";
    std::string eval_out, eval_cfg;
    bool worst_case = false;
    int eval_mc = 2000;
    long long eval_seed = -1;
    eval_cmd->add_option("--checkpoint", ckpt_path, "generator checkpoint")->required();
    eval_cmd->add_option("--data", data_path, "panel or dataset cache")->required();
    eval_cmd->add_option("--split", split_str, "train | val | test");
    eval_cmd->add_option("--policies", eval_policies, "comma-separated policy names");
    eval_cmd->add_flag("--worst-case", worst_case, "also train a fresh adversary");
    eval_cmd->add_option("--mc", eval_mc, "Monte Carlo sample size");
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");
    eval_cmd->add_option("--out", eval_out, "output directory (default: checkpoint dir)");
    eval_cmd->add_option("--config", eval_cfg, "config for dataset windowing");

    auto* report_cmd = app.add_subcommand("report", "aggregate run directories into a CSV");
    std::string runs_dir, report_out = "report.csv";
    report_cmd->add_option("--runs", runs_dir, "directory of run subdirectories")->required();
    report_cmd->add_option("--out", report_out, "output CSV path");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset cache");
    std::string family = "scaled_normal", synth_out;
    int synth_windows = 2500, synth_assets = 3, synth_cond = 5, synth_horizon = 10;
    long long synth_seed = 7;
    synth_cmd->add_option("--family", family, "synthetic family name");
    synth_cmd->add_option("--windows", synth_windows, "number of windows");
    synth_cmd->add_option("--assets", synth_assets, "number of assets");
    synth_cmd->add_option("--cond-len", synth_cond, "conditioning window length");
    synth_cmd->add_option("--horizon", synth_horizon, "scenario length");
    synth_cmd->add_option("--seed", synth_seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "output dataset cache")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(in_csv, ingest_out);
        if (app.got_subcommand(train_cmd))
            return cmd_train(cfg_path, data_path, run_dir, mode_flag, arch_flag, seed_flag,
                             epochs_flag);
        if (app.got_subcommand(eval_cmd))
            return cmd_eval(ckpt_path, data_path, split_str, eval_policies, worst_case,
                            eval_mc, eval_seed, eval_out, eval_cfg);
        if (app.got_subcommand(report_cmd)) return cmd_report(runs_dir, report_out);
        if (app.got_subcommand(synth_cmd))
            return cmd_synth(family, synth_windows, synth_assets, synth_cond, synth_horizon,
                             synth_seed, synth_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
