// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "tscn/core/error.hpp"
#include "tscn/core/random.hpp"
#include "tscn/core/tensor.hpp"

namespace tscn::nn {

// Insertion-ordered name -> tensor map. Weights are always stored in single
// precision; layers cast on construction when running in double.
class ParamStore {
 public:
  void Add(std::string name, Tensor<float> tensor) {
    Require(!index_.contains(name), ErrorKind::kInvalidArgument,
            "duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(tensor));
  }

  bool Contains(const std::string& name) const { return index_.contains(name); }

  const Tensor<float>& Get(const std::string& name) const {
    auto it = index_.find(name);
    Require(it != index_.end(), ErrorKind::kWeightShape,
            "missing parameter '" + name + "'");
    return entries_[it->second].second;
  }

  // Lookup that also checks the stored shape.
  const Tensor<float>& Get(const std::string& name, const Shape& shape) const {
    const auto& t = Get(name);
    Require(t.shape() == shape, ErrorKind::kWeightShape,
            "parameter '" + name + "' has shape " + ShapeString(t.shape()) +
                ", expected " + ShapeString(shape));
    return t;
  }

  Tensor<float>& Mutable(const std::string& name) {
    auto it = index_.find(name);
    Require(it != index_.end(), ErrorKind::kWeightShape,
            "missing parameter '" + name + "'");
    return entries_[it->second].second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::pair<std::string, Tensor<float>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::size_t ParamCount(const ParamStore& store) {
  std::size_t n = 0;
  for (const auto& [name, t] : store) n += t.size();
  return n;
}

// Initialization rules.
struct XavierUniform {
  std::size_t fan_in;
  std::size_t fan_out;
};
struct FanInUniform {  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), used for biases
  std::size_t fan_in;
};
struct Constant {
  float value;
};
using InitRule = std::variant<XavierUniform, FanInUniform, Constant>;

struct ParamSpec {
  std::string name;
  Shape shape;
  InitRule init;
};

// Layout declaration for a whole model, in creation order.
using ParamLayout = std::vector<ParamSpec>;

inline std::size_t ParamCount(const ParamLayout& layout) {
  std::size_t n = 0;
  for (const auto& p : layout) n += NumElements(p.shape);
  return n;
}

// Deterministic given the seed: tensors are filled in layout order from a
// single generator.
inline ParamStore InitParams(const ParamLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  ParamStore store;
  for (const auto& spec : layout) {
    Tensor<float> t(spec.shape);
    std::visit(
        [&](const auto& rule) {
          using R = std::decay_t<decltype(rule)>;
          if constexpr (std::is_same_v<R, Constant>) {
            for (auto& v : t.data()) v = rule.value;
          } else {
            double bound = 0;
            if constexpr (std::is_same_v<R, XavierUniform>) {
              bound = std::sqrt(6.0 / static_cast<double>(rule.fan_in + rule.fan_out));
            } else {
              bound = 1.0 / std::sqrt(static_cast<double>(rule.fan_in));
            }
            for (auto& v : t.data()) v = static_cast<float>(rng.Uniform(-bound, bound));
          }
        },
        spec.init);
    store.Add(spec.name, std::move(t));
  }
  return store;
}

// Every declared parameter must be present with its declared shape, and the
// store may not carry extras.
inline void ValidateAgainst(const ParamStore& store, const ParamLayout& layout) {
  for (const auto& spec : layout) store.Get(spec.name, spec.shape);
  Require(store.size() == layout.size(), ErrorKind::kWeightShape,
          "store holds " + std::to_string(store.size()) +
              " tensors, layout declares " + std::to_string(layout.size()));
}

}  // namespace tscn::nn
