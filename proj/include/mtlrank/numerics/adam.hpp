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
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/numerics/tensor.hpp"

namespace mtlrank::num {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter set. The optimizer owns
/// the moment buffers; gradients are read from each tensor's grad buffer.
/// Stepping requires exclusive access to the parameters.
class Adam {
 public:
  explicit Adam(std::vector<TensorPtr> params, AdamConfig cfg = {})
      : cfg_(cfg) {
    slots_.reserve(params.size());
    for (auto& p : params) {
      if (!p->requires_grad)
        throw ContractError("Adam: parameter does not require grad");
      Slot s;
      s.p = std::move(p);
      s.m.assign(s.p->numel(), 0.0);
      s.v.assign(s.p->numel(), 0.0);
      slots_.push_back(std::move(s));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& s : slots_) {
      if (s.p->grad.size() != s.p->data.size())
        throw ContractError("Adam: gradient buffer shape mismatch");
      for (std::size_t i = 0; i < s.p->numel(); ++i) {
        const double g = s.p->grad[i];
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        s.p->data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  void zero_grad() {
    for (auto& s : slots_) s.p->zero_grad();
  }

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    TensorPtr p;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

}  // namespace mtlrank::num
