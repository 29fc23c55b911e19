#include "gar/scoring.hpp"

#include <cmath>

namespace gar {

double smooth_indicator(double x, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("smooth_indicator: k must be positive");
    return 1.0 / (1.0 + std::exp(-k * x));
}

namespace {
double indicator(double v, double ell, const ScoreConfig& cfg) {
    if (cfg.smooth) return smooth_indicator(v - ell, cfg.sharpness);
    return ell <= v ? 1.0 : 0.0;
}
}  // namespace

double quantile_score(double a, double ell, const ScoreConfig& cfg) {
    cfg.validate();
    return std::abs(cfg.alpha - indicator(a, ell, cfg)) * std::abs(ell - a);
}

double expectile_score(double a, double ell, const ScoreConfig& cfg) {
    cfg.validate();
    return std::abs(cfg.alpha - indicator(a, ell, cfg)) * (ell - a) * (ell - a);
}

double joint_var_es_score(const RiskEstimate& est, double ell, const ScoreConfig& cfg) {
    cfg.validate();
    if (!est.e) throw std::invalid_argument("joint score requires an ES component");
    const double v = est.v, e = *est.e, s = cfg.h2_scale;
    if (e / s > 700.0)
        throw ScoreOverflow("joint_var_es_score: e/s = " + std::to_string(e / s) +
                            " overflows exp");
    const double ind = indicator(v, ell, cfg);
    const double h2p = std::exp(e / s);  // H2'(e) for H2(e) = s*exp(e/s)
    return (ind - cfg.alpha) * (v - ell) + (1.0 / cfg.alpha) * h2p * ind * (v - ell) +
           h2p * (e - v) - s * h2p;
}

double oracle_bound(std::span<const double> outcomes, const ScoreConfig& cfg) {
    cfg.validate();
    if (outcomes.empty()) throw std::invalid_argument("oracle_bound: empty outcomes");
    const double s = cfg.h2_scale;
    double acc = 0.0;
    for (double l : outcomes) acc += std::exp(l / s);
    return -s * acc / static_cast<double>(outcomes.size());
}

NodeId joint_score_node(Graph& g, NodeId v, NodeId e, NodeId ell, const ScoreConfig& cfg) {
    cfg.validate();
    const double s = cfg.h2_scale;
    if (g.scalar_value(e) / s > 700.0)
        throw ScoreOverflow("joint_score_node: e/s overflows exp");

    const NodeId diff = g.sub(v, ell);  // v - l
    NodeId ind;
    if (cfg.smooth) {
        ind = g.sigmoid(g.scale(diff, cfg.sharpness));
    } else {
        ind = g.constant(g.scalar_value(ell) <= g.scalar_value(v) ? 1.0 : 0.0);
    }
    const NodeId h2p = g.exp(g.scale(e, 1.0 / s));
    NodeId out = g.mul(g.shift(ind, -cfg.alpha), diff);
    out = g.add(out, g.scale(g.mul(h2p, g.mul(ind, diff)), 1.0 / cfg.alpha));
    out = g.add(out, g.mul(h2p, g.sub(e, v)));
    out = g.sub(out, g.scale(h2p, s));
    return out;
}

}  // namespace gar
