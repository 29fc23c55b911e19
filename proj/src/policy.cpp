#include "gar/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "gar/rng.hpp"

namespace gar {

std::string policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::adversarial_gru: return "adversarial_gru";
        case PolicyKind::mean_reversion: return "mean_reversion";
        case PolicyKind::trend_following: return "trend_following";
        case PolicyKind::identity_sum: return "identity_sum";
    }
    return "?";
}

PolicyKind policy_from_name(const std::string& s) {
    if (s == "adversarial_gru") return PolicyKind::adversarial_gru;
    if (s == "mean_reversion") return PolicyKind::mean_reversion;
    if (s == "trend_following") return PolicyKind::trend_following;
    if (s == "identity_sum") return PolicyKind::identity_sum;
    throw std::invalid_argument("unknown policy kind: " + s);
}

PolicyParams init_gru_policy(int n_assets, int layers, double kappa, std::uint64_t seed) {
    if (n_assets < 1 || layers < 1) throw std::invalid_argument("bad GRU policy dimensions");
    if (!(kappa > 0.0)) throw std::invalid_argument("exposure cap must be positive");
    PolicyParams pp;
    pp.kind = PolicyKind::adversarial_gru;
    pp.n_assets = n_assets;
    pp.gru_layers = layers;
    pp.exposure_cap = kappa;
    SequentialRng rng(mix64(seed) ^ 0x706f6c696379ULL);
    const int M = n_assets;
    for (int l = 0; l < layers; ++l) {
        const std::string pre = "gru.l" + std::to_string(l + 1);
        const double bound = 1.0 / std::sqrt(static_cast<double>(M));
        // Gate row order within the stacked 3*M block: r, z, n.
        Tensor Wx = Tensor::zeros(static_cast<std::size_t>(3 * M), static_cast<std::size_t>(M));
        for (auto& x : Wx.data) x = rng.uniform(-bound, bound);
        pp.gru.add(pre + ".Wx", std::move(Wx));
        Tensor Wh = Tensor::zeros(static_cast<std::size_t>(3 * M), static_cast<std::size_t>(M));
        for (auto& x : Wh.data) x = rng.uniform(-bound, bound);
        pp.gru.add(pre + ".Wh", std::move(Wh));
        pp.gru.add(pre + ".bx", Tensor::zeros(static_cast<std::size_t>(3 * M)));
        pp.gru.add(pre + ".bh", Tensor::zeros(static_cast<std::size_t>(3 * M)));
    }
    return pp;
}

namespace {

std::vector<int> time_rows(int M, int T, int t) {
    std::vector<int> rows(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) rows[static_cast<std::size_t>(j)] = j * T + t;
    return rows;
}

}  // namespace

std::vector<NodeId> policy_action_nodes(Graph& g, const PolicyParams& pp,
                                        const std::map<std::string, NodeId>& p, NodeId Y,
                                        int M, int T) {
    if (T < 2) throw GraphError("policy needs a scenario with T >= 2");
    if (pp.n_assets != M) throw GraphError("policy asset count differs from scenario");
    const int N = static_cast<int>(g.value(Y).cols());
    const double kappa = pp.exposure_cap;
    std::vector<NodeId> actions;
    actions.reserve(static_cast<std::size_t>(T - 1));

    if (pp.kind == PolicyKind::identity_sum) {
        NodeId w = g.constant(Tensor::full(static_cast<std::size_t>(M),
                                           static_cast<std::size_t>(N),
                                           kappa / static_cast<double>(M)));
        for (int t = 0; t < T - 1; ++t) actions.push_back(w);
        return actions;
    }

    if (pp.kind == PolicyKind::adversarial_gru) {
        std::vector<NodeId> h(static_cast<std::size_t>(pp.gru_layers));
        for (int l = 0; l < pp.gru_layers; ++l)
            h[static_cast<std::size_t>(l)] = g.constant(
                Tensor::zeros(static_cast<std::size_t>(M), static_cast<std::size_t>(N)));
        NodeId ones = g.constant(Tensor::full(static_cast<std::size_t>(M),
                                              static_cast<std::size_t>(N), 1.0));
        for (int t = 0; t < T - 1; ++t) {
            NodeId x = g.gather_rows(Y, time_rows(M, T, t));
            for (int l = 0; l < pp.gru_layers; ++l) {
                const std::string pre = "gru.l" + std::to_string(l + 1);
                NodeId& hl = h[static_cast<std::size_t>(l)];
                NodeId gx = g.add_col_broadcast(g.matmul(p.at(pre + ".Wx"), x),
                                                p.at(pre + ".bx"));
                NodeId gh = g.add_col_broadcast(g.matmul(p.at(pre + ".Wh"), hl),
                                                p.at(pre + ".bh"));
                NodeId r = g.sigmoid(g.add(g.slice_rows(gx, 0, M), g.slice_rows(gh, 0, M)));
                NodeId z = g.sigmoid(g.add(g.slice_rows(gx, M, M), g.slice_rows(gh, M, M)));
                NodeId n = g.tanh(g.add(g.slice_rows(gx, 2 * M, M),
                                        g.mul(r, g.slice_rows(gh, 2 * M, M))));
                hl = g.add(g.mul(g.sub(ones, z), n), g.mul(z, hl));
                x = hl;
            }
            actions.push_back(g.l1_normalize_cols(h.back(), kappa));
        }
        return actions;
    }

    // Benchmark strategies: L1-normalized bet on the latest cross-sectional
    // return, against it (mean reversion) or with it (trend following).
    const double sign = pp.kind == PolicyKind::mean_reversion ? -1.0 : 1.0;
    for (int t = 0; t < T - 1; ++t) {
        NodeId raw = g.scale(g.gather_rows(Y, time_rows(M, T, t)), sign);
        actions.push_back(g.l1_normalize_cols(raw, kappa));
    }
    return actions;
}

NodeId aggregate_pnl_node(Graph& g, NodeId Y, const std::vector<NodeId>& actions, int M,
                          int T) {
    if (static_cast<int>(actions.size()) != T - 1)
        throw GraphError("aggregate_pnl: need T-1 action rows, got " +
                         std::to_string(actions.size()));
    NodeId pnl = -1;
    for (int t = 0; t < T - 1; ++t) {
        NodeId dy = g.sub(g.gather_rows(Y, time_rows(M, T, t + 1)),
                          g.gather_rows(Y, time_rows(M, T, t)));
        NodeId term = g.col_sum(g.mul(actions[static_cast<std::size_t>(t)], dy));
        pnl = t == 0 ? term : g.add(pnl, term);
    }
    return pnl;
}

ActionSequence policy_actions(const PolicyParams& pp, const Tensor& scenario) {
    const int M = static_cast<int>(scenario.rows());
    const int T = static_cast<int>(scenario.cols());
    Graph g;
    auto p = pp.gru.bind(g, /*requires_grad=*/false);
    NodeId Y = g.constant(Tensor({static_cast<std::size_t>(M * T), 1}, scenario.data));
    auto nodes = policy_action_nodes(g, pp, p, Y, M, T);
    ActionSequence out;
    out.weights = Tensor::zeros(static_cast<std::size_t>(T - 1), static_cast<std::size_t>(M));
    for (int t = 0; t < T - 1; ++t)
        for (int j = 0; j < M; ++j)
            out.weights.at(static_cast<std::size_t>(t), static_cast<std::size_t>(j)) =
                g.value(nodes[static_cast<std::size_t>(t)]).data[static_cast<std::size_t>(j)];
    return out;
}

double aggregate_pnl(const Tensor& scenario, const ActionSequence& actions) {
    const std::size_t M = scenario.rows(), T = scenario.cols();
    if (actions.weights.rows() != T - 1 || actions.weights.cols() != M)
        throw GraphError("aggregate_pnl: action shape " + actions.weights.shape_str() +
                         " does not match scenario " + scenario.shape_str());
    double pnl = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t j = 0; j < M; ++j)
            pnl += actions.weights.at(t, j) * (scenario.at(j, t + 1) - scenario.at(j, t));
    return pnl;
}

double policy_functional(const PolicyParams& pp, const Tensor& scenario) {
    return aggregate_pnl(scenario, policy_actions(pp, scenario));
}

}  // namespace gar
