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
#include "mtlrank/net/transformer.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"

namespace mtlrank::net {

struct FttConfig {
  std::size_t dim = 32;      // token dim; categorical embed dims must match
  std::size_t layers = 2;    // 0 is allowed: degenerate CLS-readout model
  std::size_t heads = 2;
  std::size_t ff_dim = 64;
  std::size_t output_dim = 32;

  void validate() const {
    if (dim == 0 || heads == 0 || dim % heads != 0)
      throw ConfigError("ftt: dim must be divisible by heads");
    if (output_dim < 1) throw ConfigError("ftt: output_dim must be >= 1");
  }
};

/// Feature-tokenizer transformer bottom: every numeric feature gets its own
/// embedding direction, tokens are stacked under a learned CLS row, and the
/// CLS output of the last block feeds Linear(ReLU(LayerNorm(.))).
struct FttParams {
  TensorPtr cls;                       // [d]
  std::vector<TensorPtr> num_w, num_b; // one [d] pair per numeric feature
  TensorPtr match_w, match_b;          // [d x match_len], [d]; null when unused
  std::vector<TransformerBlockParams> blocks;
  TensorPtr out_ln_gain, out_ln_bias;  // [d]
  TensorPtr out_w, out_b;              // [output_dim x d], [output_dim]
};

inline FttParams make_ftt(ParamRegistry& reg, const std::string& prefix,
                          std::size_t numeric_features, std::size_t match_len,
                          const FttConfig& cfg) {
  cfg.validate();
  FttParams p;
  p.cls = reg.normal(prefix + ".cls", {cfg.dim});
  for (std::size_t i = 0; i < numeric_features; ++i) {
    const std::string tok = prefix + ".num" + std::to_string(i);
    p.num_w.push_back(reg.normal(tok + ".w", {cfg.dim}));
    p.num_b.push_back(reg.zeros(tok + ".b", {cfg.dim}));
  }
  if (match_len > 0) {
    p.match_w = reg.glorot(prefix + ".match.w", {cfg.dim, match_len}, match_len,
                           cfg.dim);
    p.match_b = reg.zeros(prefix + ".match.b", {cfg.dim});
  }
  for (std::size_t i = 0; i < cfg.layers; ++i)
    p.blocks.push_back(make_transformer_block(
        reg, prefix + ".block" + std::to_string(i), cfg.dim, cfg.ff_dim));
  p.out_ln_gain = reg.zeros(prefix + ".out.ln.gain", {cfg.dim});
  std::fill(p.out_ln_gain->data.begin(), p.out_ln_gain->data.end(), 1.0);
  p.out_ln_bias = reg.zeros(prefix + ".out.ln.bias", {cfg.dim});
  p.out_w = reg.glorot(prefix + ".out.w", {cfg.output_dim, cfg.dim}, cfg.dim,
                       cfg.output_dim);
  p.out_b = reg.zeros(prefix + ".out.b", {cfg.output_dim});
  return p;
}

/// Scalar feature -> token: W_i * x_i + b_i with a separate (W, b) per
/// numeric feature.
inline TensorPtr ftt_numeric_token(Graph& g, double value, const TensorPtr& w,
                                   const TensorPtr& b) {
  if (w->shape != b->shape)
    throw DimensionError("ftt_numeric_token: " + num::shape_str(w->shape) +
                         " vs " + num::shape_str(b->shape));
  return g.add(g.scale(w, value), b);
}

/// Projects the matching vector down to the token dim.
inline TensorPtr ftt_project_matching(Graph& g, const TensorPtr& matching,
                                      const TensorPtr& w, const TensorPtr& b) {
  return g.add(g.matvec(w, matching), b);
}

/// Runs the stacked tokens through the transformer and reads out the CLS
/// row: x_final = Linear(ReLU(LayerNorm(CLS_L))).
inline TensorPtr ftt_forward(Graph& g, const FttParams& p, const FttConfig& cfg,
                             const std::vector<double>& numeric_values,
                             const std::vector<TensorPtr>& categorical_tokens,
                             const TensorPtr& matching /* may be null */) {
  if (numeric_values.size() != p.num_w.size())
    throw DimensionError("ftt_forward: " + std::to_string(numeric_values.size()) +
                         " numeric values for " + std::to_string(p.num_w.size()) +
                         " tokenizers");
  std::vector<TensorPtr> rows;
  rows.reserve(2 + numeric_values.size() + categorical_tokens.size());
  rows.push_back(p.cls);
  for (std::size_t i = 0; i < numeric_values.size(); ++i)
    rows.push_back(ftt_numeric_token(g, numeric_values[i], p.num_w[i], p.num_b[i]));
  for (const auto& tok : categorical_tokens) {
    if (tok->numel() != cfg.dim)
      throw DimensionError("ftt_forward: categorical token " +
                           num::shape_str(tok->shape) + " must have dim " +
                           std::to_string(cfg.dim));
    rows.push_back(tok);
  }
  if (matching) {
    if (!p.match_w)
      throw ContractError("ftt_forward: matching supplied but not configured");
    rows.push_back(ftt_project_matching(g, matching, p.match_w, p.match_b));
  }
  TensorPtr x = g.stack_rows(rows);
  for (const auto& block : p.blocks)
    x = transformer_block(g, x, block, cfg.heads);
  auto cls = g.slice_row(x, 0);
  auto normed = g.layer_norm(cls, p.out_ln_gain, p.out_ln_bias);
  return g.add(g.matvec(p.out_w, g.relu(normed)), p.out_b);
}

}  // namespace mtlrank::net
