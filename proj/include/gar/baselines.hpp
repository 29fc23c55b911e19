#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gar/datapipe.hpp"
#include "gar/trainer.hpp"

namespace gar {

// --- Direct linear VaR/ES model -------------------------------------------

struct DirectLinearModel {
    int n_assets = 0;
    int cond_len = 0;
    int n_policies = 0;           // K
    Tensor W_var, W_es;           // D x K, D = M * T_c
    Tensor b_var, b_es;           // K x 1

    // Column k: (v, e) prediction for policy k.
    RiskEstimate predict(const Tensor& context, int k) const;
};

struct DirectLinearFitConfig {
    int iterations = 1500;
    double lr = 0.05;
    ScoreConfig score{ScoreFamily::joint_var_es, 0.05, 2.0, 10.0, /*smooth=*/true};
    std::uint64_t seed = 0;
};

DirectLinearModel fit_direct_linear(const WindowDataset& dataset,
                                    const std::vector<PolicyParams>& policies,
                                    const DirectLinearFitConfig& cfg);

// --- Unconditional generator ----------------------------------------------

// Same trainer, context channel severed (spec.unconditional = true).
TrainState fit_unconditional(const WindowDataset& dataset, GeneratorSpec spec,
                             const TrainConfig& cfg);

// --- DCC-GARCH(1,1) ---------------------------------------------------------

struct Garch11Fit {
    double omega = 0.0, a = 0.0, b = 0.0;
    std::vector<double> sigma2;  // in-sample conditional variances
    double loglik = 0.0;
};

struct GarchParams {
    std::vector<double> omega, a, b;  // per asset
    double dcc_a = 0.0, dcc_b = 0.0;
    Tensor qbar;  // M x M unconditional correlation

    std::size_t n_assets() const { return omega.size(); }
    void validate() const;
};

struct GarchState {
    std::vector<double> sigma2;  // sigma^2_{T+1} forecast per asset
    Tensor q;                    // Q_T
    std::vector<double> z;       // last standardized residual
};

struct QmleOptions {
    int max_iterations = 2000;
    double lr = 0.05;
    double grad_tol = 1e-6;
};

struct QmleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Garch11Fit fit_garch11(std::span<const double> returns, const QmleOptions& opt = {});

struct DccFit {
    double a = 0.0, b = 0.0;
    Tensor qbar;
    double loglik = 0.0;
};

// Two-stage estimation: residuals already standardized by the univariate fits.
DccFit fit_dcc(const Tensor& std_residuals, const QmleOptions& opt = {});

// Fit the full model to a return panel (per-asset GARCH(1,1), then DCC).
std::pair<GarchParams, GarchState> fit_dcc_garch(const Tensor& returns,
                                                 const QmleOptions& opt = {});

// n seeded M x T return paths from the filtered state.
std::vector<Tensor> simulate_dcc_garch(const GarchParams& params, const GarchState& state,
                                       int horizon, int n, std::uint64_t seed);

void save_garch_json(const GarchParams& params, const GarchState& state,
                     const std::string& path);
std::pair<GarchParams, GarchState> load_garch_json(const std::string& path);

}  // namespace gar
