#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gar/tensor.hpp"

namespace gar {

using NodeId = int;

enum class Op {
    Leaf,
    Add,
    Sub,
    Mul,
    MatMul,
    Transpose,
    ConcatRows,
    Reshape,
    Exp,
    Log,
    Tanh,
    Sigmoid,
    Abs,
    Recip,
    LeakyRelu,
    Scale,       // c0 * x
    Shift,       // x + c0
    Sum,         // all elements -> scalar
    Mean,        // all elements -> scalar
    Select,      // flat element i0 -> scalar
    SliceRows,   // rows [i0, i0+i1)
    GatherRows,  // arbitrary row subset (scatter-add backward)
    RepeatCols,  // column vector -> i0 identical columns
    AddColBroadcast,   // matrix + column vector per column
    ColSum,            // per-column sum -> 1 x n
    L1NormalizeCols,   // per-column w = c0 * x / ||x||_1, equal-weight fallback
    OrderStat,   // i0-th smallest (1-based), one-hot subgradient
    TailMean,    // mean of the i0 smallest, 1/m subgradient
};

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Append-only tape of primitive ops. Forward values are computed eagerly as
// nodes are appended; forward() recomputes everything after a leaf changes.
class Graph {
  public:
    struct Node {
        Op op = Op::Leaf;
        int a = -1, b = -1;
        Tensor value;
        std::vector<double> grad;
        bool requires_grad = false;
        double c0 = 0.0;
        int i0 = 0, i1 = 0;
        std::vector<std::size_t> shape0;   // reshape target
        std::vector<int> rows;             // gather row list
        std::vector<int> route;            // order-stat / tail-mean selection
        std::string name;                  // leaves only
    };

    NodeId leaf(std::string name, Tensor t);
    NodeId constant(Tensor t);
    NodeId constant(double v) { return constant(Tensor::scalar(v)); }

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId concat_rows(NodeId a, NodeId b);
    NodeId reshape(NodeId a, std::vector<std::size_t> shape);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId abs(NodeId a);
    NodeId recip(NodeId a);
    NodeId leaky_relu(NodeId a, double slope);
    NodeId scale(NodeId a, double c);
    NodeId shift(NodeId a, double c);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId select(NodeId a, int flat_index);
    NodeId slice_rows(NodeId a, int first, int count);
    NodeId gather_rows(NodeId a, std::vector<int> rows);
    NodeId repeat_cols(NodeId a, int n);
    NodeId add_col_broadcast(NodeId a, NodeId bias);
    NodeId col_sum(NodeId a);
    NodeId l1_normalize_cols(NodeId a, double kappa);
    NodeId order_statistic(NodeId a, int k);   // 1-based, ties to lowest index
    NodeId tail_mean(NodeId a, int m);

    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    const std::vector<double>& grad(NodeId id) const { return nodes_.at(id).grad; }
    double scalar_value(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    void set_leaf(NodeId id, std::span<const double> data);
    void set_input(const std::string& name, const Tensor& t);
    NodeId find_input(const std::string& name) const;

    void forward();                 // recompute all values in tape order
    void backward(NodeId output);   // reverse accumulation from a scalar node

    // Max over coordinates of |g_ad - g_fd| / max(1, |g_fd|) with central
    // differences of step eps over the given differentiable leaves.
    double check_gradient(NodeId output, const std::vector<NodeId>& leaves, double eps);

  private:
    std::vector<Node> nodes_;

    NodeId push(Node n);
    NodeId unary(Op op, NodeId a, double c0 = 0.0, int i0 = 0, int i1 = 0);
    NodeId binary(Op op, NodeId a, NodeId b);
    void compute(Node& n);
    void accumulate(Node& n);
    [[noreturn]] void fail(const Node& n, const std::string& what) const;
};

}  // namespace gar
