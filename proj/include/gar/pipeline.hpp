#pragma once

#include <cstdint>
#include <map>

#include "gar/generators.hpp"
#include "gar/policy.hpp"
#include "gar/risk.hpp"
#include "gar/scoring.hpp"

namespace gar {

// Generator (and optionally policy) parameters bound to one graph.
struct BoundModel {
    const GeneratorSpec* spec = nullptr;
    std::map<std::string, NodeId> gen;     // generator leaves
    const PolicyParams* policy = nullptr;  // parameters live outside the graph
    std::map<std::string, NodeId> pol;     // GRU leaves (empty for benchmarks)
};

BoundModel bind_model(Graph& g, const GeneratorParams& gp, const PolicyParams& pp,
                      bool grad_theta, bool grad_phi);

// Monte Carlo synthetic outcomes for one context: 1 x n_samples node.
NodeId synthetic_outcomes_node(Graph& g, const BoundModel& m, const Tensor& context,
                               const McConfig& mc);

// Plug-in (VaR, ES) nodes over the synthetic outcome sample.
std::pair<NodeId, NodeId> implied_risk_nodes(Graph& g, const BoundModel& m,
                                             const Tensor& context, const McConfig& mc,
                                             double alpha);

// Real outcome Pi_phi(y) as a scalar node (differentiable in phi).
NodeId real_outcome_node(Graph& g, const BoundModel& m, const Tensor& scenario);

// Non-graph plug-in estimate for evaluation paths.
RiskEstimate implied_risk(const GeneratorParams& gp, const PolicyParams& pp,
                          const Tensor& context, const McConfig& mc, double alpha);

}  // namespace gar
