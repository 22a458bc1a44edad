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

#include <string>
#include <vector>

#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"

namespace mtlrank::net {

using num::Graph;
using num::ParamRegistry;
using num::TensorPtr;

struct MlpParams {
  std::vector<TensorPtr> weights;  // layer i: [width_i x in_i]
  std::vector<TensorPtr> biases;

  std::size_t output_dim() const {
    return weights.empty() ? 0 : weights.back()->shape[0];
  }
};

inline MlpParams make_mlp(ParamRegistry& reg, const std::string& prefix,
                          std::size_t in_dim,
                          const std::vector<std::size_t>& widths) {
  MlpParams p;
  std::size_t cur = in_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string layer = prefix + ".l" + std::to_string(i);
    p.weights.push_back(reg.glorot(layer + ".w", {widths[i], cur}, cur, widths[i]));
    p.biases.push_back(reg.zeros(layer + ".b", {widths[i]}));
    cur = widths[i];
  }
  return p;
}

/// Chained affine layers; ReLU after each layer, or after all but the last
/// when relu_last is false (linear output head).
inline TensorPtr mlp_forward(Graph& g, const MlpParams& p, TensorPtr x,
                             bool relu_last) {
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    x = g.add(g.matvec(p.weights[i], x), p.biases[i]);
    if (relu_last || i + 1 < p.weights.size()) x = g.relu(x);
  }
  return x;
}

}  // namespace mtlrank::net
