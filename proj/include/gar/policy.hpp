#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gar/graph.hpp"
#include "gar/paramstore.hpp"

namespace gar {

enum class PolicyKind { adversarial_gru, mean_reversion, trend_following, identity_sum };

std::string policy_name(PolicyKind k);
PolicyKind policy_from_name(const std::string& s);

struct PolicyParams {
    PolicyKind kind = PolicyKind::identity_sum;
    int n_assets = 1;       // M; also the GRU hidden dim (d_h = M)
    int gru_layers = 3;
    double exposure_cap = 1.0;  // kappa
    ParamStore gru;             // empty for the benchmark kinds
};

// (T-1) x M weight rows; row t has L1 norm exactly kappa.
struct ActionSequence {
    Tensor weights;
};

PolicyParams init_gru_policy(int n_assets, int layers, double kappa, std::uint64_t seed);

// Builds action nodes over a batch of scenarios. Y is (M*T) x N with scenario
// element (j, t) at row j*T + t; returns T-1 nodes of shape M x N, already
// L1-normalized to kappa per column. Row t depends only on y_{1:t}.
std::vector<NodeId> policy_action_nodes(Graph& g, const PolicyParams& pp,
                                        const std::map<std::string, NodeId>& p, NodeId Y,
                                        int M, int T);

// Batched PnL: sum_t sum_j w_tj * (y_{j,t+1} - y_{j,t}) per column -> 1 x N.
NodeId aggregate_pnl_node(Graph& g, NodeId Y, const std::vector<NodeId>& actions, int M,
                          int T);

// Plain single-scenario evaluations.
ActionSequence policy_actions(const PolicyParams& pp, const Tensor& scenario);
double aggregate_pnl(const Tensor& scenario, const ActionSequence& actions);
double policy_functional(const PolicyParams& pp, const Tensor& scenario);

}  // namespace gar
