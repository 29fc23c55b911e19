#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gar/graph.hpp"
#include "gar/tensor.hpp"

namespace gar {

// Flat, ordered collection of named parameter tensors.
class ParamStore {
  public:
    Tensor& add(const std::string& name, Tensor t) {
        items_.emplace_back(name, std::move(t));
        return items_.back().second;
    }
    Tensor& at(const std::string& name) {
        for (auto& [k, v] : items_)
            if (k == name) return v;
        throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    }
    const Tensor& at(const std::string& name) const {
        return const_cast<ParamStore*>(this)->at(name);
    }
    bool has(const std::string& name) const {
        for (auto& [k, v] : items_)
            if (k == name) return true;
        return false;
    }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (auto& [k, v] : items_) n += v.numel();
        return n;
    }

    // Register every tensor as a graph leaf.
    std::map<std::string, NodeId> bind(Graph& g, bool requires_grad) const {
        std::map<std::string, NodeId> ids;
        for (auto& [name, t] : items_) {
            Tensor leaf = t;
            leaf.requires_grad = requires_grad;
            leaf.grad.reset();
            ids[name] = g.leaf(name, std::move(leaf));
        }
        return ids;
    }

    // Pull gradients accumulated on the bound leaves back into Tensor::grad.
    void collect_grads(const Graph& g, const std::map<std::string, NodeId>& ids) {
        for (auto& [name, t] : items_) {
            t.alloc_grad();
            *t.grad = g.grad(ids.at(name));
        }
    }

    // Order-insensitive content hash; used for freeze-contract checks.
    std::uint64_t checksum() const;

  private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

}  // namespace gar
