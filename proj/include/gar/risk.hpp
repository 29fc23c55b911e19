#pragma once

#include <cstdint>
#include <span>

#include "gar/graph.hpp"

namespace gar {

struct McConfig {
    int n_samples = 2000;
    std::uint64_t seed = 0;
};

// Empirical quantile index m = ceil(alpha * n) (type-1 / inverse-CDF).
int var_order_index(std::size_t n, double alpha);

double empirical_var(std::span<const double> values, double alpha);
double empirical_es(std::span<const double> values, double alpha);

// Bisection on [min, max]; tau = 0.5 recovers the sample mean.
double empirical_expectile(std::span<const double> values, double tau);

// Differentiable plug-in estimators over a graph node holding the sample.
NodeId empirical_var_node(Graph& g, NodeId values, double alpha);
NodeId empirical_es_node(Graph& g, NodeId values, double alpha);

}  // namespace gar
