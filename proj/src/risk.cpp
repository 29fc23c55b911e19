#include "gar/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gar {

int var_order_index(std::size_t n, double alpha) {
    if (n == 0) throw std::invalid_argument("empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha outside (0,1)");
    const int m = static_cast<int>(std::ceil(alpha * static_cast<double>(n)));
    return std::max(1, m);
}

double empirical_var(std::span<const double> values, double alpha) {
    const int m = var_order_index(values.size(), alpha);
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + (m - 1), v.end());
    return v[static_cast<std::size_t>(m - 1)];
}

double empirical_es(std::span<const double> values, double alpha) {
    const int m = var_order_index(values.size(), alpha);
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + (m - 1), v.end());
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += v[static_cast<std::size_t>(i)];
    return s / m;
}

double empirical_expectile(std::span<const double> values, double tau) {
    if (values.empty()) throw std::invalid_argument("empty sample");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau outside (0,1)");
    double lo = values[0], hi = values[0];
    for (double x : values) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (lo == hi) return lo;
    // g(m) = tau*sum (l-m)+ - (1-tau)*sum (m-l)+ is strictly decreasing in m.
    auto g = [&](double m) {
        double up = 0.0, dn = 0.0;
        for (double x : values) {
            if (x > m) up += x - m;
            else dn += m - x;
        }
        return tau * up - (1.0 - tau) * dn;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

NodeId empirical_var_node(Graph& g, NodeId values, double alpha) {
    const int m = var_order_index(g.value(values).numel(), alpha);
    return g.order_statistic(values, m);
}

NodeId empirical_es_node(Graph& g, NodeId values, double alpha) {
    const int m = var_order_index(g.value(values).numel(), alpha);
    return g.tail_mean(values, m);
}

}  // namespace gar
