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
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"

namespace mtlrank::net {

using num::Graph;
using num::ParamRegistry;
using num::TensorPtr;

/// One pre-norm transformer block: x + MHSA(LN(x)), then x + FFN(LN(x)).
struct TransformerBlockParams {
  TensorPtr ln1_gain, ln1_bias;
  TensorPtr wq, bq, wk, bk, wv, bv, wo, bo;  // [d x d] projections
  TensorPtr ln2_gain, ln2_bias;
  TensorPtr ffn_w1, ffn_b1, ffn_w2, ffn_b2;  // [d x ff], [ff x d]
};

inline TransformerBlockParams make_transformer_block(ParamRegistry& reg,
                                                     const std::string& prefix,
                                                     std::size_t d,
                                                     std::size_t ff_dim) {
  TransformerBlockParams p;
  p.ln1_gain = reg.zeros(prefix + ".ln1.gain", {d});
  std::fill(p.ln1_gain->data.begin(), p.ln1_gain->data.end(), 1.0);
  p.ln1_bias = reg.zeros(prefix + ".ln1.bias", {d});
  p.wq = reg.glorot(prefix + ".attn.wq", {d, d}, d, d);
  p.bq = reg.zeros(prefix + ".attn.bq", {d});
  p.wk = reg.glorot(prefix + ".attn.wk", {d, d}, d, d);
  p.bk = reg.zeros(prefix + ".attn.bk", {d});
  p.wv = reg.glorot(prefix + ".attn.wv", {d, d}, d, d);
  p.bv = reg.zeros(prefix + ".attn.bv", {d});
  p.wo = reg.glorot(prefix + ".attn.wo", {d, d}, d, d);
  p.bo = reg.zeros(prefix + ".attn.bo", {d});
  p.ln2_gain = reg.zeros(prefix + ".ln2.gain", {d});
  std::fill(p.ln2_gain->data.begin(), p.ln2_gain->data.end(), 1.0);
  p.ln2_bias = reg.zeros(prefix + ".ln2.bias", {d});
  p.ffn_w1 = reg.glorot(prefix + ".ffn.w1", {d, ff_dim}, d, ff_dim);
  p.ffn_b1 = reg.zeros(prefix + ".ffn.b1", {ff_dim});
  p.ffn_w2 = reg.glorot(prefix + ".ffn.w2", {ff_dim, d}, ff_dim, d);
  p.ffn_b2 = reg.zeros(prefix + ".ffn.b2", {d});
  return p;
}

inline std::vector<std::string> transformer_block_param_names(
    const std::string& prefix) {
  std::vector<std::string> names;
  for (const char* suffix :
       {".ln1.gain", ".ln1.bias", ".attn.wq", ".attn.bq", ".attn.wk",
        ".attn.bk", ".attn.wv", ".attn.bv", ".attn.wo", ".attn.bo",
        ".ln2.gain", ".ln2.bias", ".ffn.w1", ".ffn.b1", ".ffn.w2", ".ffn.b2"})
    names.push_back(prefix + suffix);
  return names;
}

/// Multi-head self attention over [t x d] token rows.
inline TensorPtr multi_head_attention(Graph& g, const TensorPtr& x,
                                      const TransformerBlockParams& p,
                                      std::size_t heads) {
  const std::size_t d = x->cols();
  if (d % heads != 0)
    throw DimensionError("attention: dim " + std::to_string(d) +
                         " not divisible by " + std::to_string(heads) + " heads");
  const std::size_t dk = d / heads;
  auto q = g.add_rowwise(g.matmul(x, p.wq), p.bq);
  auto k = g.add_rowwise(g.matmul(x, p.wk), p.bk);
  auto v = g.add_rowwise(g.matmul(x, p.wv), p.bv);
  std::vector<TensorPtr> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    auto qh = g.slice_cols(q, h * dk, dk);
    auto kh = g.slice_cols(k, h * dk, dk);
    auto vh = g.slice_cols(v, h * dk, dk);
    auto scores = g.scale(g.matmul_nt(qh, kh), 1.0 / std::sqrt(double(dk)));
    head_out.push_back(g.matmul(g.softmax_rows(scores), vh));
  }
  auto concat = heads == 1 ? head_out[0] : g.concat_cols(head_out);
  return g.add_rowwise(g.matmul(concat, p.wo), p.bo);
}

inline TensorPtr transformer_block(Graph& g, TensorPtr x,
                                   const TransformerBlockParams& p,
                                   std::size_t heads) {
  auto attn_in = g.layer_norm(x, p.ln1_gain, p.ln1_bias);
  x = g.add(x, multi_head_attention(g, attn_in, p, heads));
  auto ffn_in = g.layer_norm(x, p.ln2_gain, p.ln2_bias);
  auto hidden = g.relu(g.add_rowwise(g.matmul(ffn_in, p.ffn_w1), p.ffn_b1));
  auto ffn = g.add_rowwise(g.matmul(hidden, p.ffn_w2), p.ffn_b2);
  return g.add(x, ffn);
}

}  // namespace mtlrank::net
