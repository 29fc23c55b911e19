#include "gar/generators.hpp"

#include <cmath>
#include <stdexcept>

#include "gar/rng.hpp"

namespace gar {

std::string arch_name(GeneratorArch a) {
    switch (a) {
        case GeneratorArch::simple_linear: return "simple_linear";
        case GeneratorArch::encoder_linear: return "encoder_linear";
        case GeneratorArch::encoder_lstm: return "encoder_lstm";
    }
    return "?";
}

GeneratorArch arch_from_name(const std::string& s) {
    if (s == "simple_linear") return GeneratorArch::simple_linear;
    if (s == "encoder_linear") return GeneratorArch::encoder_linear;
    if (s == "encoder_lstm") return GeneratorArch::encoder_lstm;
    throw std::invalid_argument("unknown generator arch: " + s);
}

void GeneratorSpec::validate() const {
    if (n_assets < 1 || cond_len < 1 || horizon < 1 || latent_dim < 1 || hidden_dim < 1 ||
        mlp_layers < 1 || decoder_layers < 1 || lstm_layers < 1)
        throw std::invalid_argument("GeneratorSpec: all dimensions must be >= 1");
}

namespace {

// Layer widths of an L-layer MLP from in_dim to out_dim through hidden_dim.
std::vector<std::pair<int, int>> mlp_dims(int layers, int in_dim, int hidden, int out_dim) {
    std::vector<std::pair<int, int>> dims;
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? in_dim : hidden;
        const int out = l == layers - 1 ? out_dim : hidden;
        dims.emplace_back(out, in);  // (rows, cols) of W_l
    }
    return dims;
}

void init_mlp(ParamStore& ps, SequentialRng& rng, const std::string& prefix, int layers,
              int in_dim, int hidden, int out_dim) {
    auto dims = mlp_dims(layers, in_dim, hidden, out_dim);
    for (int l = 0; l < layers; ++l) {
        auto [rows, cols] = dims[static_cast<std::size_t>(l)];
        Tensor W = Tensor::zeros(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        for (auto& x : W.data) x = rng.uniform(-bound, bound);
        ps.add(prefix + ".W" + std::to_string(l + 1), std::move(W));
        ps.add(prefix + ".b" + std::to_string(l + 1),
               Tensor::zeros(static_cast<std::size_t>(rows)));
    }
}

NodeId mlp_node(Graph& g, const std::map<std::string, NodeId>& p, const std::string& prefix,
                int layers, NodeId x, double slope) {
    for (int l = 0; l < layers; ++l) {
        x = g.add_col_broadcast(g.matmul(p.at(prefix + ".W" + std::to_string(l + 1)), x),
                                p.at(prefix + ".b" + std::to_string(l + 1)));
        if (l != layers - 1) x = g.leaky_relu(x, slope);
    }
    return x;
}

// Standard LSTM over the context columns; returns the final top-layer hidden
// state (d_h x 1). Gate row order within the stacked 4*d_h block: i, f, g, o.
NodeId lstm_encode(Graph& g, const GeneratorSpec& spec,
                   const std::map<std::string, NodeId>& p, const Tensor& context) {
    const int dh = spec.hidden_dim, M = spec.n_assets;
    std::vector<NodeId> h(static_cast<std::size_t>(spec.lstm_layers)),
        s(static_cast<std::size_t>(spec.lstm_layers));
    for (int l = 0; l < spec.lstm_layers; ++l) {
        h[static_cast<std::size_t>(l)] = g.constant(Tensor::zeros(static_cast<std::size_t>(dh)));
        s[static_cast<std::size_t>(l)] = g.constant(Tensor::zeros(static_cast<std::size_t>(dh)));
    }
    for (int t = 0; t < spec.cond_len; ++t) {
        std::vector<double> col(static_cast<std::size_t>(M));
        for (int j = 0; j < M; ++j)
            col[static_cast<std::size_t>(j)] =
                spec.unconditional ? 0.0 : context.at(static_cast<std::size_t>(j),
                                                      static_cast<std::size_t>(t));
        NodeId x = g.constant(Tensor::column(col));
        for (int l = 0; l < spec.lstm_layers; ++l) {
            const std::string pre = "lstm.l" + std::to_string(l + 1);
            NodeId& hl = h[static_cast<std::size_t>(l)];
            NodeId& sl = s[static_cast<std::size_t>(l)];
            NodeId gates = g.add_col_broadcast(
                g.add(g.matmul(p.at(pre + ".Wx"), x), g.matmul(p.at(pre + ".Wh"), hl)),
                p.at(pre + ".b"));
            NodeId in = g.sigmoid(g.slice_rows(gates, 0, dh));
            NodeId fg = g.sigmoid(g.slice_rows(gates, dh, dh));
            NodeId cn = g.tanh(g.slice_rows(gates, 2 * dh, dh));
            NodeId ou = g.sigmoid(g.slice_rows(gates, 3 * dh, dh));
            sl = g.add(g.mul(fg, sl), g.mul(in, cn));
            hl = g.mul(ou, g.tanh(sl));
            x = hl;
        }
    }
    return h.back();
}

}  // namespace

GeneratorParams init_generator(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();
    GeneratorParams gp;
    gp.spec = spec;
    SequentialRng rng(mix64(seed) ^ 0x67656e65726174ULL);
    const int M = spec.n_assets, T = spec.horizon, Tc = spec.cond_len;
    switch (spec.arch) {
        case GeneratorArch::simple_linear:
            init_mlp(gp.params, rng, "mlp", spec.mlp_layers, spec.latent_dim + Tc,
                     spec.hidden_dim, T);
            break;
        case GeneratorArch::encoder_linear:
            init_mlp(gp.params, rng, "enc", spec.mlp_layers, M * Tc, spec.hidden_dim,
                     spec.hidden_dim);
            init_mlp(gp.params, rng, "dec", spec.decoder_layers,
                     spec.hidden_dim + spec.latent_dim, spec.hidden_dim, M * T);
            break;
        case GeneratorArch::encoder_lstm: {
            for (int l = 0; l < spec.lstm_layers; ++l) {
                const int in = l == 0 ? M : spec.hidden_dim;
                const std::string pre = "lstm.l" + std::to_string(l + 1);
                const double bx = 1.0 / std::sqrt(static_cast<double>(in));
                Tensor Wx = Tensor::zeros(static_cast<std::size_t>(4 * spec.hidden_dim),
                                          static_cast<std::size_t>(in));
                for (auto& x : Wx.data) x = rng.uniform(-bx, bx);
                gp.params.add(pre + ".Wx", std::move(Wx));
                const double bh = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
                Tensor Wh = Tensor::zeros(static_cast<std::size_t>(4 * spec.hidden_dim),
                                          static_cast<std::size_t>(spec.hidden_dim));
                for (auto& x : Wh.data) x = rng.uniform(-bh, bh);
                gp.params.add(pre + ".Wh", std::move(Wh));
                gp.params.add(pre + ".b",
                              Tensor::zeros(static_cast<std::size_t>(4 * spec.hidden_dim)));
            }
            init_mlp(gp.params, rng, "dec", spec.decoder_layers,
                     spec.hidden_dim + spec.latent_dim, spec.hidden_dim, M * T);
            break;
        }
    }
    return gp;
}

NodeId generator_batch_node(Graph& g, const GeneratorSpec& spec,
                            const std::map<std::string, NodeId>& p, NodeId Z,
                            const Tensor& context) {
    spec.validate();
    const int M = spec.n_assets, Tc = spec.cond_len;
    if (static_cast<int>(g.value(Z).rows()) != spec.latent_dim)
        throw GraphError("latent batch has wrong row count");
    if (static_cast<int>(context.rows()) != M || static_cast<int>(context.cols()) != Tc)
        throw GraphError("context shape is not M x T_c: " + context.shape_str());
    const int N = static_cast<int>(g.value(Z).cols());

    switch (spec.arch) {
        case GeneratorArch::simple_linear: {
            NodeId out = -1;
            for (int j = 0; j < M; ++j) {
                std::vector<double> crow(static_cast<std::size_t>(Tc));
                for (int t = 0; t < Tc; ++t)
                    crow[static_cast<std::size_t>(t)] =
                        spec.unconditional ? 0.0 : context.at(static_cast<std::size_t>(j),
                                                              static_cast<std::size_t>(t));
                NodeId cj = g.repeat_cols(g.constant(Tensor::column(crow)), N);
                NodeId x = g.concat_rows(Z, cj);
                NodeId yj = mlp_node(g, p, "mlp", spec.mlp_layers, x, spec.leaky_slope);
                out = j == 0 ? yj : g.concat_rows(out, yj);
            }
            return out;
        }
        case GeneratorArch::encoder_linear: {
            std::vector<double> cvec;
            cvec.reserve(static_cast<std::size_t>(M * Tc));
            for (int j = 0; j < M; ++j)
                for (int t = 0; t < Tc; ++t)
                    cvec.push_back(spec.unconditional
                                       ? 0.0
                                       : context.at(static_cast<std::size_t>(j),
                                                    static_cast<std::size_t>(t)));
            NodeId H = mlp_node(g, p, "enc", spec.mlp_layers,
                                g.constant(Tensor::column(cvec)), spec.leaky_slope);
            NodeId x = g.concat_rows(g.repeat_cols(H, N), Z);
            return mlp_node(g, p, "dec", spec.decoder_layers, x, spec.leaky_slope);
        }
        case GeneratorArch::encoder_lstm: {
            NodeId H = lstm_encode(g, spec, p, context);
            NodeId x = g.concat_rows(g.repeat_cols(H, N), Z);
            return mlp_node(g, p, "dec", spec.decoder_layers, x, spec.leaky_slope);
        }
    }
    throw GraphError("unreachable");
}

Tensor generate(const GeneratorParams& gp, const std::vector<double>& z,
                const Tensor& context) {
    if (static_cast<int>(z.size()) != gp.spec.latent_dim)
        throw GraphError("latent vector has wrong length");
    Graph g;
    auto p = gp.params.bind(g, /*requires_grad=*/false);
    NodeId Z = g.constant(Tensor::column(z));
    NodeId y = generator_batch_node(g, gp.spec, p, Z, context);
    Tensor out({static_cast<std::size_t>(gp.spec.n_assets),
                static_cast<std::size_t>(gp.spec.horizon)},
               g.value(y).data);
    return out;
}

Tensor latent_batch(int latent_dim, int n, std::uint64_t seed) {
    CounterRng rng(seed);
    Tensor Z = Tensor::zeros(static_cast<std::size_t>(latent_dim), static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        // One substream per sample index: reproducible under parallel fan-out.
        CounterRng stream = rng.stream(static_cast<std::uint64_t>(s));
        for (int d = 0; d < latent_dim; ++d)
            Z.at(static_cast<std::size_t>(d), static_cast<std::size_t>(s)) =
                stream.normal(static_cast<std::uint64_t>(d));
    }
    return Z;
}

std::vector<Tensor> sample_scenarios(const GeneratorParams& gp, const Tensor& context,
                                     int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_scenarios: n must be >= 1");
    Graph g;
    auto p = gp.params.bind(g, /*requires_grad=*/false);
    NodeId Z = g.constant(latent_batch(gp.spec.latent_dim, n, seed));
    NodeId Y = generator_batch_node(g, gp.spec, p, Z, context);
    const Tensor& batch = g.value(Y);
    const std::size_t M = static_cast<std::size_t>(gp.spec.n_assets);
    const std::size_t T = static_cast<std::size_t>(gp.spec.horizon);
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        Tensor y = Tensor::zeros(M, T);
        for (std::size_t r = 0; r < M * T; ++r)
            y.data[r] = batch.at(r, static_cast<std::size_t>(s));
        out.push_back(std::move(y));
    }
    return out;
}

}  // namespace gar
