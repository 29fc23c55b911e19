#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>

#include "doctest.h"
#include "gar/generators.hpp"

using namespace gar;

namespace {

GeneratorSpec small_spec(GeneratorArch arch) {
    GeneratorSpec s;
    s.arch = arch;
    s.n_assets = 3;
    s.cond_len = 4;
    s.horizon = 5;
    s.latent_dim = 2;
    s.hidden_dim = 4;
    return s;
}

void zero_params(GeneratorParams& gp) {
    for (auto& [name, t] : gp.params) std::fill(t.data.begin(), t.data.end(), 0.0);
}

}  // namespace

TEST_CASE("init determinism and seed sensitivity") {
    const GeneratorSpec spec = small_spec(GeneratorArch::encoder_linear);
    GeneratorParams a = init_generator(spec, 5);
    GeneratorParams b = init_generator(spec, 5);
    CHECK(a.params.checksum() == b.params.checksum());
    GeneratorParams c = init_generator(spec, 6);
    CHECK(a.params.checksum() != c.params.checksum());
}

TEST_CASE("encoder_linear shape audit matches the closed-form count") {
    GeneratorSpec spec = small_spec(GeneratorArch::encoder_linear);
    spec.hidden_dim = 4;
    spec.mlp_layers = 2;
    spec.decoder_layers = 2;
    GeneratorParams gp = init_generator(spec, 1);
    const std::size_t D = static_cast<std::size_t>(spec.n_assets * spec.cond_len);
    const std::size_t h = 4, dz = 2;
    const std::size_t MT = static_cast<std::size_t>(spec.n_assets * spec.horizon);
    // encoder: h x D + h, then h x h + h; decoder: h x (h + dz) + h, then MT x h + MT.
    const std::size_t expected = (h * D + h) + (h * h + h) + (h * (h + dz) + h) + (MT * h + MT);
    CHECK(gp.params.total_scalars() == expected);
}

TEST_CASE("zero parameters generate the zero scenario") {
    for (auto arch : {GeneratorArch::simple_linear, GeneratorArch::encoder_linear,
                      GeneratorArch::encoder_lstm}) {
        GeneratorParams gp = init_generator(small_spec(arch), 2);
        zero_params(gp);
        Tensor y = generate(gp, {0.4, -1.1}, Tensor::full(3, 4, 0.2));
        for (double v : y.data) CHECK(v == 0.0);
    }
}

TEST_CASE("simple_linear single-layer hand evaluation") {
    GeneratorSpec spec;
    spec.arch = GeneratorArch::simple_linear;
    spec.n_assets = 1;
    spec.cond_len = 1;
    spec.horizon = 1;
    spec.latent_dim = 1;
    spec.hidden_dim = 1;
    spec.mlp_layers = 1;
    GeneratorParams gp = init_generator(spec, 0);
    gp.params.at("mlp.W1").data = {1.0, 1.0};  // y = 1*z + 1*c
    gp.params.at("mlp.b1").data = {0.0};
    Tensor y = generate(gp, {2.0}, Tensor::full(1, 1, 3.0));
    CHECK(y.at(0, 0) == doctest::Approx(5.0));
}

TEST_CASE("encoder_lstm with zero gate weights depends only on z") {
    GeneratorParams gp = init_generator(small_spec(GeneratorArch::encoder_lstm), 7);
    for (auto& [name, t] : gp.params)
        if (name.rfind("lstm.", 0) == 0) std::fill(t.data.begin(), t.data.end(), 0.0);
    const std::vector<double> z{0.3, -0.8};
    Tensor y1 = generate(gp, z, Tensor::full(3, 4, 1.5));
    Tensor y2 = generate(gp, z, Tensor::full(3, 4, -2.0));
    CHECK(y1.data == y2.data);  // context path severed by zero gates
    Tensor y3 = generate(gp, {1.0, 1.0}, Tensor::full(3, 4, 1.5));
    CHECK(y1.data != y3.data);  // latent path still live
}

TEST_CASE("sample_scenarios reproducibility and stream consistency") {
    GeneratorParams gp = init_generator(small_spec(GeneratorArch::encoder_linear), 9);
    Tensor ctx = Tensor::full(3, 4, 0.1);
    auto batch1 = sample_scenarios(gp, ctx, 5, 123);
    auto batch2 = sample_scenarios(gp, ctx, 5, 123);
    REQUIRE(batch1.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(batch1[i].data == batch2[i].data);

    // n=1 equals generate at the first latent stream draw.
    Tensor Z = latent_batch(2, 1, 123);
    Tensor direct = generate(gp, {Z.at(0, 0), Z.at(1, 0)}, ctx);
    CHECK(sample_scenarios(gp, ctx, 1, 123)[0].data == direct.data);

    GeneratorParams zero = gp;
    zero_params(zero);
    for (const Tensor& y : sample_scenarios(zero, ctx, 3, 5))
        for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("shape audit across randomized specs") {
    std::mt19937_64 rng(15);
    for (int rep = 0; rep < 12; ++rep) {
        GeneratorSpec spec;
        spec.arch = static_cast<GeneratorArch>(rep % 3);
        spec.n_assets = 1 + static_cast<int>(rng() % 4);
        spec.cond_len = 1 + static_cast<int>(rng() % 4);
        spec.horizon = 2 + static_cast<int>(rng() % 5);
        spec.latent_dim = 1 + static_cast<int>(rng() % 3);
        spec.hidden_dim = 1 + static_cast<int>(rng() % 4);
        spec.mlp_layers = 1 + static_cast<int>(rng() % 3);
        spec.decoder_layers = 1 + static_cast<int>(rng() % 2);
        spec.lstm_layers = 1 + static_cast<int>(rng() % 2);
        GeneratorParams gp = init_generator(spec, rng());
        std::vector<double> z(static_cast<std::size_t>(spec.latent_dim), 0.3);
        Tensor y = generate(gp, z,
                            Tensor::full(static_cast<std::size_t>(spec.n_assets),
                                         static_cast<std::size_t>(spec.cond_len), 0.1));
        CHECK(y.rows() == static_cast<std::size_t>(spec.n_assets));
        CHECK(y.cols() == static_cast<std::size_t>(spec.horizon));
    }
}

TEST_CASE("end-to-end gradient through every parameter tensor") {
    for (auto arch : {GeneratorArch::simple_linear, GeneratorArch::encoder_linear,
                      GeneratorArch::encoder_lstm}) {
        GeneratorParams gp = init_generator(small_spec(arch), 21);
        Graph g;
        auto p = gp.params.bind(g, /*requires_grad=*/true);
        NodeId Z = g.constant(latent_batch(2, 3, 77));
        NodeId y = generator_batch_node(g, gp.spec, p, Z, Tensor::full(3, 4, 0.15));
        NodeId out = g.mean(g.tanh(y));
        std::vector<NodeId> leaves;
        for (const auto& [name, id] : p) leaves.push_back(id);
        CHECK(g.check_gradient(out, leaves, 1e-5) <= 1e-4);
    }
}

TEST_CASE("encoder wiring: permuting z with matching decoder columns is a no-op") {
    GeneratorSpec spec = small_spec(GeneratorArch::encoder_linear);
    GeneratorParams gp = init_generator(spec, 31);
    Tensor ctx = Tensor::full(3, 4, 0.25);
    const std::vector<double> z{0.9, -0.4};
    Tensor before = generate(gp, z, ctx);

    // Swap the two latent entries and the matching decoder input columns
    // (they sit after the d_h encoder rows in dec.W1).
    GeneratorParams swapped = gp;
    Tensor& W = swapped.params.at("dec.W1");
    const std::size_t c0 = static_cast<std::size_t>(spec.hidden_dim);
    for (std::size_t r = 0; r < W.rows(); ++r) std::swap(W.at(r, c0), W.at(r, c0 + 1));
    Tensor after = generate(swapped, {z[1], z[0]}, ctx);
    for (std::size_t i = 0; i < before.data.size(); ++i)
        CHECK(after.data[i] == doctest::Approx(before.data[i]).epsilon(1e-12));
}

TEST_CASE("unconditional spec severs the context channel") {
    GeneratorSpec spec = small_spec(GeneratorArch::encoder_linear);
    spec.unconditional = true;
    GeneratorParams gp = init_generator(spec, 41);
    const std::vector<double> z{0.2, 0.7};
    Tensor y1 = generate(gp, z, Tensor::full(3, 4, 2.0));
    Tensor y2 = generate(gp, z, Tensor::full(3, 4, -3.0));
    CHECK(y1.data == y2.data);
}
