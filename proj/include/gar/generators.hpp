#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gar/graph.hpp"
#include "gar/paramstore.hpp"

namespace gar {

enum class GeneratorArch { simple_linear, encoder_linear, encoder_lstm };

std::string arch_name(GeneratorArch a);
GeneratorArch arch_from_name(const std::string& s);

struct GeneratorSpec {
    GeneratorArch arch = GeneratorArch::encoder_linear;
    int n_assets = 9;       // M
    int cond_len = 5;       // T_c
    int horizon = 10;       // T
    int latent_dim = 4;     // d_z
    int hidden_dim = 4;     // d_h
    int mlp_layers = 2;     // simple-linear / encoder MLP depth
    int decoder_layers = 2;
    int lstm_layers = 1;
    bool unconditional = false;  // zero the context path (baseline generator)
    double leaky_slope = 0.01;

    void validate() const;
};

struct GeneratorParams {
    GeneratorSpec spec;
    ParamStore params;
};

GeneratorParams init_generator(const GeneratorSpec& spec, std::uint64_t seed);

// Builds the generator forward pass on an existing graph. Z is d_z x N
// (N latent samples as columns); the result is (M*T) x N with scenario (j, t)
// at row j*T + t.
NodeId generator_batch_node(Graph& g, const GeneratorSpec& spec,
                            const std::map<std::string, NodeId>& p, NodeId Z,
                            const Tensor& context);

// Single-scenario convenience wrapper; returns an M x T tensor.
Tensor generate(const GeneratorParams& gp, const std::vector<double>& z,
                const Tensor& context);

// n i.i.d. N(0, I) latent draws through the generator, counter-seeded.
std::vector<Tensor> sample_scenarios(const GeneratorParams& gp, const Tensor& context,
                                     int n, std::uint64_t seed);

// Latent matrix d_z x n from the counter stream (column s = sample s).
Tensor latent_batch(int latent_dim, int n, std::uint64_t seed);

}  // namespace gar
