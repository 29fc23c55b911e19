#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "gar/graph.hpp"

namespace gar {

enum class ScoreFamily { quantile, expectile, joint_var_es };

struct ScoreConfig {
    ScoreFamily family = ScoreFamily::joint_var_es;
    double alpha = 0.05;      // quantile level (tau for expectiles)
    double h2_scale = 2.0;    // s in H2(e) = s*exp(e/s)
    double sharpness = 10.0;  // k in the sigmoid surrogate
    bool smooth = false;      // hard indicator for evaluation, smooth for training

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha outside (0,1)");
        if (!(h2_scale > 0.0)) throw std::invalid_argument("h2_scale must be positive");
        if (!(sharpness > 0.0)) throw std::invalid_argument("sharpness must be positive");
    }
};

// (v, e) forecast pair; e is present only for the joint VaR/ES family.
struct RiskEstimate {
    double v = 0.0;
    std::optional<double> e;
};

struct ScoreOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double smooth_indicator(double x, double k);

double quantile_score(double a, double ell, const ScoreConfig& cfg);
double expectile_score(double a, double ell, const ScoreConfig& cfg);
double joint_var_es_score(const RiskEstimate& est, double ell, const ScoreConfig& cfg);

// Lowest attainable in-sample mean score, -(s/N) sum exp(l_i/s).
double oracle_bound(std::span<const double> outcomes, const ScoreConfig& cfg);

// Differentiable joint score over graph nodes. With cfg.smooth=false the
// indicator enters as a constant evaluated at the current forward values
// (the a.e. gradient of the hard score).
NodeId joint_score_node(Graph& g, NodeId v, NodeId e, NodeId ell, const ScoreConfig& cfg);

}  // namespace gar
