#include "gar/pipeline.hpp"

namespace gar {

BoundModel bind_model(Graph& g, const GeneratorParams& gp, const PolicyParams& pp,
                      bool grad_theta, bool grad_phi) {
    BoundModel m;
    m.spec = &gp.spec;
    m.gen = gp.params.bind(g, grad_theta);
    m.policy = &pp;
    m.pol = pp.gru.bind(g, grad_phi);
    return m;
}

NodeId synthetic_outcomes_node(Graph& g, const BoundModel& m, const Tensor& context,
                               const McConfig& mc) {
    if (mc.n_samples < 2) throw GraphError("Monte Carlo sample size must be >= 2");
    const GeneratorSpec& spec = *m.spec;
    NodeId Z = g.constant(latent_batch(spec.latent_dim, mc.n_samples, mc.seed));
    NodeId Y = generator_batch_node(g, spec, m.gen, Z, context);
    auto actions = policy_action_nodes(g, *m.policy, m.pol, Y, spec.n_assets, spec.horizon);
    return aggregate_pnl_node(g, Y, actions, spec.n_assets, spec.horizon);
}

std::pair<NodeId, NodeId> implied_risk_nodes(Graph& g, const BoundModel& m,
                                             const Tensor& context, const McConfig& mc,
                                             double alpha) {
    NodeId outcomes = synthetic_outcomes_node(g, m, context, mc);
    return {empirical_var_node(g, outcomes, alpha), empirical_es_node(g, outcomes, alpha)};
}

NodeId real_outcome_node(Graph& g, const BoundModel& m, const Tensor& scenario) {
    const int M = static_cast<int>(scenario.rows());
    const int T = static_cast<int>(scenario.cols());
    NodeId Y = g.constant(Tensor({static_cast<std::size_t>(M * T), 1}, scenario.data));
    auto actions = policy_action_nodes(g, *m.policy, m.pol, Y, M, T);
    return g.select(aggregate_pnl_node(g, Y, actions, M, T), 0);
}

RiskEstimate implied_risk(const GeneratorParams& gp, const PolicyParams& pp,
                          const Tensor& context, const McConfig& mc, double alpha) {
    Graph g;
    BoundModel m = bind_model(g, gp, pp, false, false);
    auto [v, e] = implied_risk_nodes(g, m, context, mc, alpha);
    RiskEstimate est;
    est.v = g.scalar_value(v);
    est.e = g.scalar_value(e);
    return est;
}

}  // namespace gar
