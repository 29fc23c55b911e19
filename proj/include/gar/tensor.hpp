#pragma once

#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gar {

// Dense row-major real tensor. Rank is arbitrary, but every graph op treats
// tensors as 2-D matrices (vectors are n x 1).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::optional<std::vector<double>> grad;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::size_t r, std::size_t c = 1) {
        return Tensor({r, c}, std::vector<double>(r * c, 0.0));
    }
    static Tensor full(std::size_t r, std::size_t c, double v) {
        return Tensor({r, c}, std::vector<double>(r * c, v));
    }
    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
    static Tensor column(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({n, 1}, std::move(v));
    }
    static Tensor row(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({1, n}, std::move(v));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const {
        if (shape.size() < 2) return 1;
        std::size_t c = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
        return c;
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    bool same_shape(const Tensor& o) const {
        return rows() == o.rows() && cols() == o.cols();
    }

    void alloc_grad() {
        if (!grad || grad->size() != data.size())
            grad = std::vector<double>(data.size(), 0.0);
    }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

}  // namespace gar
