#include "gar/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gar {

namespace {
const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::MatMul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::ConcatRows: return "concat_rows";
        case Op::Reshape: return "reshape";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::Abs: return "abs";
        case Op::Recip: return "recip";
        case Op::LeakyRelu: return "leaky_relu";
        case Op::Scale: return "scale";
        case Op::Shift: return "shift";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Select: return "select";
        case Op::SliceRows: return "slice_rows";
        case Op::GatherRows: return "gather_rows";
        case Op::RepeatCols: return "repeat_cols";
        case Op::AddColBroadcast: return "add_col_broadcast";
        case Op::ColSum: return "col_sum";
        case Op::L1NormalizeCols: return "l1_normalize_cols";
        case Op::OrderStat: return "order_statistic";
        case Op::TailMean: return "tail_mean";
    }
    return "?";
}

// Stable order of the flattened values: ties broken by lowest original index.
std::vector<int> sorted_indices(const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return v[a] < v[b]; });
    return idx;
}
}  // namespace

void Graph::fail(const Node& n, const std::string& what) const {
    std::string msg = std::string(op_name(n.op)) + " (node " +
                      std::to_string(&n - nodes_.data()) + "): " + what;
    if (n.a >= 0) msg += "; lhs " + nodes_[n.a].value.shape_str();
    if (n.b >= 0) msg += ", rhs " + nodes_[n.b].value.shape_str();
    throw GraphError(msg);
}

NodeId Graph::push(Node n) {
    compute(n);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::leaf(std::string name, Tensor t) {
    Node n;
    n.op = Op::Leaf;
    n.requires_grad = t.requires_grad;
    n.value = std::move(t);
    n.name = std::move(name);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(Tensor t) {
    t.requires_grad = false;
    return leaf("", std::move(t));
}

NodeId Graph::unary(Op op, NodeId a, double c0, int i0, int i1) {
    Node n;
    n.op = op;
    n.a = a;
    n.c0 = c0;
    n.i0 = i0;
    n.i1 = i1;
    n.requires_grad = nodes_.at(a).requires_grad;
    return push(std::move(n));
}

NodeId Graph::binary(Op op, NodeId a, NodeId b) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_.at(a).requires_grad || nodes_.at(b).requires_grad;
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
NodeId Graph::matmul(NodeId a, NodeId b) { return binary(Op::MatMul, a, b); }
NodeId Graph::transpose(NodeId a) { return unary(Op::Transpose, a); }
NodeId Graph::concat_rows(NodeId a, NodeId b) { return binary(Op::ConcatRows, a, b); }

NodeId Graph::reshape(NodeId a, std::vector<std::size_t> shape) {
    Node n;
    n.op = Op::Reshape;
    n.a = a;
    n.shape0 = std::move(shape);
    n.requires_grad = nodes_.at(a).requires_grad;
    return push(std::move(n));
}

NodeId Graph::exp(NodeId a) { return unary(Op::Exp, a); }
NodeId Graph::log(NodeId a) { return unary(Op::Log, a); }
NodeId Graph::tanh(NodeId a) { return unary(Op::Tanh, a); }
NodeId Graph::sigmoid(NodeId a) { return unary(Op::Sigmoid, a); }
NodeId Graph::abs(NodeId a) { return unary(Op::Abs, a); }
NodeId Graph::recip(NodeId a) { return unary(Op::Recip, a); }
NodeId Graph::leaky_relu(NodeId a, double slope) { return unary(Op::LeakyRelu, a, slope); }
NodeId Graph::scale(NodeId a, double c) { return unary(Op::Scale, a, c); }
NodeId Graph::shift(NodeId a, double c) { return unary(Op::Shift, a, c); }
NodeId Graph::sum(NodeId a) { return unary(Op::Sum, a); }
NodeId Graph::mean(NodeId a) { return unary(Op::Mean, a); }
NodeId Graph::select(NodeId a, int flat_index) { return unary(Op::Select, a, 0.0, flat_index); }
NodeId Graph::slice_rows(NodeId a, int first, int count) {
    return unary(Op::SliceRows, a, 0.0, first, count);
}

NodeId Graph::gather_rows(NodeId a, std::vector<int> rows) {
    Node n;
    n.op = Op::GatherRows;
    n.a = a;
    n.rows = std::move(rows);
    n.requires_grad = nodes_.at(a).requires_grad;
    return push(std::move(n));
}

NodeId Graph::repeat_cols(NodeId a, int ncols) { return unary(Op::RepeatCols, a, 0.0, ncols); }
NodeId Graph::add_col_broadcast(NodeId a, NodeId bias) {
    return binary(Op::AddColBroadcast, a, bias);
}
NodeId Graph::col_sum(NodeId a) { return unary(Op::ColSum, a); }
NodeId Graph::l1_normalize_cols(NodeId a, double kappa) {
    return unary(Op::L1NormalizeCols, a, kappa);
}
NodeId Graph::order_statistic(NodeId a, int k) {
    const auto n = static_cast<int>(nodes_.at(a).value.numel());
    if (k < 1 || k > n)
        throw GraphError("order_statistic: index " + std::to_string(k) +
                         " out of range for " + std::to_string(n) + " values");
    return unary(Op::OrderStat, a, 0.0, k);
}
NodeId Graph::tail_mean(NodeId a, int m) {
    const auto n = static_cast<int>(nodes_.at(a).value.numel());
    if (m < 1 || m > n)
        throw GraphError("tail_mean: m " + std::to_string(m) +
                         " out of range for " + std::to_string(n) + " values");
    return unary(Op::TailMean, a, 0.0, m);
}

double Graph::scalar_value(NodeId id) const {
    const Tensor& t = nodes_.at(id).value;
    if (t.numel() != 1) throw GraphError("scalar_value: node is not scalar");
    return t.data[0];
}

void Graph::set_leaf(NodeId id, std::span<const double> data) {
    Node& n = nodes_.at(id);
    if (n.op != Op::Leaf) throw GraphError("set_leaf: node is not a leaf");
    if (data.size() != n.value.data.size()) fail(n, "set_leaf size mismatch");
    std::copy(data.begin(), data.end(), n.value.data.begin());
}

NodeId Graph::find_input(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].op == Op::Leaf && nodes_[i].name == name)
            return static_cast<NodeId>(i);
    throw GraphError("no input named '" + name + "'");
}

void Graph::set_input(const std::string& name, const Tensor& t) {
    set_leaf(find_input(name), t.data);
}

void Graph::compute(Node& n) {
    const Node* A = n.a >= 0 ? &nodes_[n.a] : nullptr;
    const Node* B = n.b >= 0 ? &nodes_[n.b] : nullptr;
    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul: {
            if (!A->value.same_shape(B->value)) fail(n, "shape mismatch");
            n.value = A->value;
            n.value.requires_grad = false;
            n.value.grad.reset();
            const auto& a = A->value.data;
            const auto& b = B->value.data;
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = n.op == Op::Add   ? a[i] + b[i]
                                  : n.op == Op::Sub ? a[i] - b[i]
                                                    : a[i] * b[i];
            break;
        }
        case Op::MatMul: {
            const std::size_t m = A->value.rows(), k = A->value.cols();
            const std::size_t k2 = B->value.rows(), p = B->value.cols();
            if (k != k2) fail(n, "inner dimensions differ");
            n.value = Tensor::zeros(m, p);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t l = 0; l < k; ++l) {
                    const double a = A->value.data[i * k + l];
                    if (a == 0.0) continue;
                    for (std::size_t j = 0; j < p; ++j)
                        n.value.data[i * p + j] += a * B->value.data[l * p + j];
                }
            break;
        }
        case Op::Transpose: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            n.value = Tensor::zeros(c, r);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    n.value.data[j * r + i] = A->value.data[i * c + j];
            break;
        }
        case Op::ConcatRows: {
            if (A->value.cols() != B->value.cols()) fail(n, "column counts differ");
            const std::size_t c = A->value.cols();
            n.value = Tensor::zeros(A->value.rows() + B->value.rows(), c);
            std::copy(A->value.data.begin(), A->value.data.end(), n.value.data.begin());
            std::copy(B->value.data.begin(), B->value.data.end(),
                      n.value.data.begin() + static_cast<std::ptrdiff_t>(A->value.numel()));
            break;
        }
        case Op::Reshape: {
            if (Tensor::numel_of(n.shape0) != A->value.numel())
                fail(n, "element count changes under reshape");
            n.value = Tensor(n.shape0, A->value.data);
            break;
        }
        case Op::Exp:
        case Op::Log:
        case Op::Tanh:
        case Op::Sigmoid:
        case Op::Abs:
        case Op::Recip:
        case Op::LeakyRelu:
        case Op::Scale:
        case Op::Shift: {
            n.value = A->value;
            n.value.requires_grad = false;
            n.value.grad.reset();
            for (auto& x : n.value.data) {
                switch (n.op) {
                    case Op::Exp: x = std::exp(x); break;
                    case Op::Log: x = std::log(x); break;
                    case Op::Tanh: x = std::tanh(x); break;
                    case Op::Sigmoid: x = 1.0 / (1.0 + std::exp(-x)); break;
                    case Op::Abs: x = std::abs(x); break;
                    case Op::Recip: x = 1.0 / x; break;
                    case Op::LeakyRelu: x = x >= 0.0 ? x : n.c0 * x; break;
                    case Op::Scale: x = n.c0 * x; break;
                    case Op::Shift: x = x + n.c0; break;
                    default: break;
                }
            }
            break;
        }
        case Op::Sum:
        case Op::Mean: {
            double s = 0.0;
            for (double x : A->value.data) s += x;
            if (n.op == Op::Mean) s /= static_cast<double>(A->value.numel());
            n.value = Tensor::scalar(s);
            break;
        }
        case Op::Select: {
            if (n.i0 < 0 || n.i0 >= static_cast<int>(A->value.numel()))
                fail(n, "flat index out of range");
            n.value = Tensor::scalar(A->value.data[n.i0]);
            break;
        }
        case Op::SliceRows: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            if (n.i0 < 0 || n.i1 < 1 || n.i0 + n.i1 > static_cast<int>(r))
                fail(n, "row range out of bounds");
            n.value = Tensor::zeros(static_cast<std::size_t>(n.i1), c);
            std::copy(A->value.data.begin() + static_cast<std::ptrdiff_t>(n.i0 * c),
                      A->value.data.begin() + static_cast<std::ptrdiff_t>((n.i0 + n.i1) * c),
                      n.value.data.begin());
            break;
        }
        case Op::GatherRows: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            n.value = Tensor::zeros(n.rows.size(), c);
            for (std::size_t i = 0; i < n.rows.size(); ++i) {
                const int src = n.rows[i];
                if (src < 0 || src >= static_cast<int>(r)) fail(n, "gather row out of bounds");
                std::copy(A->value.data.begin() + static_cast<std::ptrdiff_t>(src * c),
                          A->value.data.begin() + static_cast<std::ptrdiff_t>((src + 1) * c),
                          n.value.data.begin() + static_cast<std::ptrdiff_t>(i * c));
            }
            break;
        }
        case Op::RepeatCols: {
            if (A->value.cols() != 1) fail(n, "repeat_cols expects a column vector");
            const std::size_t r = A->value.rows();
            const std::size_t c = static_cast<std::size_t>(n.i0);
            n.value = Tensor::zeros(r, c);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    n.value.data[i * c + j] = A->value.data[i];
            break;
        }
        case Op::AddColBroadcast: {
            if (B->value.cols() != 1 || B->value.rows() != A->value.rows())
                fail(n, "bias shape incompatible");
            const std::size_t r = A->value.rows(), c = A->value.cols();
            n.value = A->value;
            n.value.requires_grad = false;
            n.value.grad.reset();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    n.value.data[i * c + j] += B->value.data[i];
            break;
        }
        case Op::ColSum: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            n.value = Tensor::zeros(1, c);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    n.value.data[j] += A->value.data[i * c + j];
            break;
        }
        case Op::L1NormalizeCols: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            n.value = Tensor::zeros(r, c);
            n.route.assign(c, 0);  // 1 where the equal-weight fallback fired
            for (std::size_t j = 0; j < c; ++j) {
                double norm = 0.0;
                for (std::size_t i = 0; i < r; ++i)
                    norm += std::abs(A->value.data[i * c + j]);
                if (norm < 1e-12) {
                    n.route[j] = 1;
                    for (std::size_t i = 0; i < r; ++i)
                        n.value.data[i * c + j] = n.c0 / static_cast<double>(r);
                } else {
                    const double f = n.c0 / norm;
                    for (std::size_t i = 0; i < r; ++i)
                        n.value.data[i * c + j] = f * A->value.data[i * c + j];
                }
            }
            break;
        }
        case Op::OrderStat: {
            auto idx = sorted_indices(A->value.data);
            n.route = {idx[static_cast<std::size_t>(n.i0 - 1)]};
            n.value = Tensor::scalar(A->value.data[n.route[0]]);
            break;
        }
        case Op::TailMean: {
            auto idx = sorted_indices(A->value.data);
            n.route.assign(idx.begin(), idx.begin() + n.i0);
            double s = 0.0;
            for (int i : n.route) s += A->value.data[i];
            n.value = Tensor::scalar(s / static_cast<double>(n.i0));
            break;
        }
    }
}

void Graph::forward() {
    for (auto& n : nodes_)
        if (n.op != Op::Leaf) compute(n);
}

void Graph::backward(NodeId output) {
    Node& out = nodes_.at(output);
    if (out.value.numel() != 1) throw GraphError("backward: output is not scalar");
    if (out.value.data.empty()) throw GraphError("backward: forward pass missing");
    for (auto& n : nodes_) n.grad.assign(n.value.numel(), 0.0);
    out.grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
        if (it->requires_grad && it->op != Op::Leaf) accumulate(*it);
}

void Graph::accumulate(Node& n) {
    Node* A = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* B = n.b >= 0 ? &nodes_[n.b] : nullptr;
    const auto& g = n.grad;
    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Add:
            if (A->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i];
            if (B->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) B->grad[i] += g[i];
            break;
        case Op::Sub:
            if (A->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i];
            if (B->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) B->grad[i] -= g[i];
            break;
        case Op::Mul:
            if (A->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i)
                    A->grad[i] += g[i] * B->value.data[i];
            if (B->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i)
                    B->grad[i] += g[i] * A->value.data[i];
            break;
        case Op::MatMul: {
            const std::size_t m = A->value.rows(), k = A->value.cols(), p = B->value.cols();
            if (A->requires_grad)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t l = 0; l < k; ++l) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < p; ++j)
                            s += g[i * p + j] * B->value.data[l * p + j];
                        A->grad[i * k + l] += s;
                    }
            if (B->requires_grad)
                for (std::size_t l = 0; l < k; ++l)
                    for (std::size_t j = 0; j < p; ++j) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < m; ++i)
                            s += A->value.data[i * k + l] * g[i * p + j];
                        B->grad[l * p + j] += s;
                    }
            break;
        }
        case Op::Transpose: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    A->grad[i * c + j] += g[j * r + i];
            break;
        }
        case Op::ConcatRows: {
            const std::size_t na = A->value.numel();
            if (A->requires_grad)
                for (std::size_t i = 0; i < na; ++i) A->grad[i] += g[i];
            if (B->requires_grad)
                for (std::size_t i = 0; i < B->value.numel(); ++i) B->grad[i] += g[na + i];
            break;
        }
        case Op::Reshape:
            for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i];
            break;
        case Op::Exp:
            for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i] * n.value.data[i];
            break;
        case Op::Log:
            for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i] / A->value.data[i];
            break;
        case Op::Tanh:
            for (std::size_t i = 0; i < g.size(); ++i)
                A->grad[i] += g[i] * (1.0 - n.value.data[i] * n.value.data[i]);
            break;
        case Op::Sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i)
                A->grad[i] += g[i] * n.value.data[i] * (1.0 - n.value.data[i]);
            break;
        case Op::Abs:
            // Subgradient 0 at the kink.
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = A->value.data[i];
                A->grad[i] += g[i] * (x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0);
            }
            break;
        case Op::Recip:
            for (std::size_t i = 0; i < g.size(); ++i)
                A->grad[i] -= g[i] * n.value.data[i] * n.value.data[i];
            break;
        case Op::LeakyRelu:
            for (std::size_t i = 0; i < g.size(); ++i)
                A->grad[i] += g[i] * (A->value.data[i] >= 0.0 ? 1.0 : n.c0);
            break;
        case Op::Scale:
            for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i] * n.c0;
            break;
        case Op::Shift:
            for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i];
            break;
        case Op::Sum:
            for (auto& ga : A->grad) ga += g[0];
            break;
        case Op::Mean: {
            const double f = g[0] / static_cast<double>(A->value.numel());
            for (auto& ga : A->grad) ga += f;
            break;
        }
        case Op::Select:
            A->grad[n.i0] += g[0];
            break;
        case Op::SliceRows: {
            const std::size_t c = A->value.cols();
            for (std::size_t i = 0; i < g.size(); ++i)
                A->grad[static_cast<std::size_t>(n.i0) * c + i] += g[i];
            break;
        }
        case Op::GatherRows: {
            const std::size_t c = A->value.cols();
            for (std::size_t i = 0; i < n.rows.size(); ++i)
                for (std::size_t j = 0; j < c; ++j)
                    A->grad[static_cast<std::size_t>(n.rows[i]) * c + j] += g[i * c + j];
            break;
        }
        case Op::RepeatCols: {
            const std::size_t r = A->value.rows();
            const std::size_t c = static_cast<std::size_t>(n.i0);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) A->grad[i] += g[i * c + j];
            break;
        }
        case Op::AddColBroadcast: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            if (A->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) A->grad[i] += g[i];
            if (B->requires_grad)
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) B->grad[i] += g[i * c + j];
            break;
        }
        case Op::ColSum: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) A->grad[i * c + j] += g[j];
            break;
        }
        case Op::L1NormalizeCols: {
            const std::size_t r = A->value.rows(), c = A->value.cols();
            for (std::size_t j = 0; j < c; ++j) {
                if (n.route[j]) continue;  // fallback columns carry no gradient
                double norm = 0.0;
                for (std::size_t i = 0; i < r; ++i)
                    norm += std::abs(A->value.data[i * c + j]);
                double dot = 0.0;  // sum_i g_i * w_i
                for (std::size_t i = 0; i < r; ++i)
                    dot += g[i * c + j] * n.value.data[i * c + j];
                for (std::size_t i = 0; i < r; ++i) {
                    const double x = A->value.data[i * c + j];
                    const double sgn = x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0;
                    A->grad[i * c + j] += (n.c0 * g[i * c + j] - sgn * dot) / norm;
                }
            }
            break;
        }
        case Op::OrderStat:
            A->grad[n.route[0]] += g[0];
            break;
        case Op::TailMean: {
            const double f = g[0] / static_cast<double>(n.i0);
            for (int i : n.route) A->grad[i] += f;
            break;
        }
    }
}

double Graph::check_gradient(NodeId output, const std::vector<NodeId>& leaves, double eps) {
    forward();
    backward(output);
    std::vector<std::vector<double>> g_ad;
    g_ad.reserve(leaves.size());
    for (NodeId id : leaves) g_ad.push_back(nodes_.at(id).grad);

    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Node& lf = nodes_.at(leaves[li]);
        for (std::size_t i = 0; i < lf.value.data.size(); ++i) {
            const double x0 = lf.value.data[i];
            lf.value.data[i] = x0 + eps;
            forward();
            const double fp = scalar_value(output);
            lf.value.data[i] = x0 - eps;
            forward();
            const double fm = scalar_value(output);
            lf.value.data[i] = x0;
            const double g_fd = (fp - fm) / (2.0 * eps);
            const double err = std::abs(g_ad[li][i] - g_fd) / std::max(1.0, std::abs(g_fd));
            worst = std::max(worst, err);
        }
    }
    forward();
    return worst;
}

}  // namespace gar
