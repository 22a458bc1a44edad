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

#include "mtlrank/errors.hpp"
#include "mtlrank/net/mlp.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"

namespace mtlrank::net {

struct DcnConfig {
  std::size_t cross_layers = 2;
  std::vector<std::size_t> deep_widths = {128, 64};

  void validate() const {
    if (cross_layers < 1) throw ConfigError("dcn: needs at least one cross layer");
    if (deep_widths.empty()) throw ConfigError("dcn: needs at least one deep layer");
  }
};

struct DcnParams {
  std::vector<TensorPtr> cross_w;  // [dim x dim] per cross layer
  std::vector<TensorPtr> cross_b;  // [dim]
  MlpParams deep;
};

inline DcnParams make_dcn(ParamRegistry& reg, const std::string& prefix,
                          std::size_t x0_dim, const DcnConfig& cfg) {
  cfg.validate();
  DcnParams p;
  for (std::size_t i = 0; i < cfg.cross_layers; ++i) {
    const std::string layer = prefix + ".cross" + std::to_string(i);
    p.cross_w.push_back(reg.glorot(layer + ".w", {x0_dim, x0_dim}, x0_dim, x0_dim));
    p.cross_b.push_back(reg.zeros(layer + ".b", {x0_dim}));
  }
  p.deep = make_mlp(reg, prefix + ".deep", x0_dim, cfg.deep_widths);
  return p;
}

/// Explicit feature-interaction layer: h0 (*) (W h + b) + h. With zero
/// weights and bias this is the identity on h.
inline TensorPtr cross_layer(Graph& g, const TensorPtr& h0, const TensorPtr& h,
                             const TensorPtr& w, const TensorPtr& b) {
  if (h0->shape != h->shape)
    throw DimensionError("cross_layer: h0 " + num::shape_str(h0->shape) +
                         " vs h " + num::shape_str(h->shape));
  return g.add(g.mul(h0, g.add(g.matvec(w, h), b)), h);
}

/// Parallel DCN: the cross stack and the deep ReLU stack both read x0, and
/// their outputs are concatenated.
inline TensorPtr dcn_forward(Graph& g, const DcnParams& p, const TensorPtr& x0) {
  TensorPtr h = x0;
  for (std::size_t i = 0; i < p.cross_w.size(); ++i)
    h = cross_layer(g, x0, h, p.cross_w[i], p.cross_b[i]);
  TensorPtr deep = mlp_forward(g, p.deep, x0, /*relu_last=*/true);
  return g.concat({h, deep});
}

}  // namespace mtlrank::net
