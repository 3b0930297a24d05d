#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlc/errors.hpp"
#include "dlc/tape.hpp"
#include "dlc/tensor.hpp"

namespace dlc {

/// Named tensors (weights, biases) in a fixed insertion order. Names are
/// unique and shapes are immutable after construction; values are mutated
/// in place by the optimizer.
class ParamSet {
  public:
    void add(std::string name, Tensor t) {
        if (index_.count(name)) throw ConfigError("ParamSet: duplicate name '" + name + "'");
        index_.emplace(name, entries_.size());
        entries_.push_back({std::move(name), std::move(t)});
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("ParamSet: unknown name '" + name + "'");
        return it->second;
    }

    const std::string& name(std::size_t i) const { return entries_[i].name; }
    const Tensor& tensor(std::size_t i) const { return entries_[i].tensor; }
    Tensor& tensor(std::size_t i) { return entries_[i].tensor; }
    const Tensor& tensor(const std::string& name) const { return entries_[index_of(name)].tensor; }
    Tensor& tensor(const std::string& name) { return entries_[index_of(name)].tensor; }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.size();
        return n;
    }

  private:
    struct Entry {
        std::string name;
        Tensor tensor;
    };
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Leaf handles for one ParamSet bound onto one tape, in ParamSet order.
struct BoundParams {
    const ParamSet* params = nullptr;
    std::vector<ad::Var> vars;

    ad::Var operator[](std::size_t i) const { return vars[i]; }
    ad::Var var(const std::string& name) const { return vars[params->index_of(name)]; }
    bool has(const std::string& name) const { return params->has(name); }
};

inline BoundParams bind_params(ad::Tape& tape, const ParamSet& params) {
    BoundParams bound;
    bound.params = &params;
    bound.vars.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        bound.vars.push_back(tape.leaf(params.tensor(i), params.name(i)));
    return bound;
}

/// Gradients of one scalar loss, aligned with a ParamSet plus the omega leaf.
struct Gradients {
    std::vector<Tensor> by_param;
    Tensor omega;

    void collect(const ad::Tape& tape, const BoundParams& bound, ad::Var omega_var) {
        by_param.clear();
        by_param.reserve(bound.vars.size());
        for (ad::Var v : bound.vars) by_param.push_back(tape.grad(v));
        if (omega_var.valid()) omega = tape.grad(omega_var);
    }
};

}  // namespace dlc
