/*
 * Copyright 2026 the mtlrank authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/numerics/rng.hpp"
#include "mtlrank/numerics/tensor.hpp"

namespace mtlrank::num {

/// Ordered registry of learnable tensors. Each tensor is registered exactly
/// once under a unique name, and its initial values are drawn from a stream
/// derived from (master seed, name): adding or removing one parameter never
/// perturbs the initial values of any other.
class ParamRegistry {
 public:
  struct Entry {
    std::string name;
    TensorPtr tensor;
    bool trainable = true;
  };

  explicit ParamRegistry(std::uint64_t seed) : seed_(seed) {}

  /// Weight matrix, uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
  TensorPtr glorot(const std::string& name, std::vector<std::size_t> shape,
                   std::size_t fan_in, std::size_t fan_out) {
    auto t = Tensor::zeros(std::move(shape), /*rg=*/true);
    Rng rng(derive_seed(seed_, name));
    const double a =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t->data) v = rng.uniform(-a, a);
    add(name, t);
    return t;
  }

  /// Embedding-style init, normal(0, stddev).
  TensorPtr normal(const std::string& name, std::vector<std::size_t> shape,
                   double stddev = 0.02) {
    auto t = Tensor::zeros(std::move(shape), /*rg=*/true);
    Rng rng(derive_seed(seed_, name));
    for (auto& v : t->data) v = rng.normal(0.0, stddev);
    add(name, t);
    return t;
  }

  TensorPtr zeros(const std::string& name, std::vector<std::size_t> shape) {
    auto t = Tensor::zeros(std::move(shape), /*rg=*/true);
    add(name, t);
    return t;
  }

  TensorPtr find(const std::string& name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : entries_[it->second].tensor;
  }

  void set_trainable(const std::string& name, bool trainable) {
    const auto it = index_.find(name);
    if (it == index_.end())
      throw ContractError("ParamRegistry: unknown parameter '" + name + "'");
    entries_[it->second].trainable = trainable;
  }

  const std::vector<Entry>& entries() const { return entries_; }

  /// Total registered elements.
  std::size_t census() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor->numel();
    return n;
  }

  std::size_t trainable_census() const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (e.trainable) n += e.tensor->numel();
    return n;
  }

  std::vector<TensorPtr> trainable() const {
    std::vector<TensorPtr> out;
    for (const auto& e : entries_)
      if (e.trainable) out.push_back(e.tensor);
    return out;
  }

  void zero_grads() {
    for (auto& e : entries_) e.tensor->zero_grad();
  }

  std::uint64_t seed() const { return seed_; }

 private:
  void add(const std::string& name, TensorPtr t) {
    if (index_.count(name))
      throw ContractError("ParamRegistry: '" + name + "' registered twice");
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(t), true});
  }

  std::uint64_t seed_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mtlrank::num
