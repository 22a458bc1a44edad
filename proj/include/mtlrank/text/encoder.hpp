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

#include <atomic>
#include <span>
#include <string>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/net/transformer.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"
#include "mtlrank/text/vocab.hpp"

namespace mtlrank::text {

using net::TransformerBlockParams;
using num::Graph;
using num::ParamRegistry;
using num::TensorPtr;

struct TextEncoderConfig {
  std::size_t layers = 2;
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t ff_dim = 64;
  std::size_t max_seq_len = 32;
  // Only the topmost trainable_layers blocks receive gradient; lower blocks
  // stay frozen at their initial weights. The embedding tables train only
  // when every block does.
  std::size_t trainable_layers = 1;

  void validate() const {
    if (dim == 0 || heads == 0 || dim % heads != 0)
      throw ConfigError("text encoder: dim must be divisible by heads");
    if (trainable_layers > layers)
      throw ConfigError("text encoder: trainable_layers exceeds layer count");
    if (max_seq_len < 1)
      throw ConfigError("text encoder: max_seq_len must be >= 1");
  }
};

/// Small trainable transformer encoder with max pooling over token rows.
/// Stands in for a pretrained compact BERT: same interface, same frozen /
/// fine-tuned split, randomly initialized weights.
class TextEncoder {
 public:
  TextEncoder(const TextEncoderConfig& cfg, std::size_t vocab_size,
              ParamRegistry& reg, std::string prefix = "text")
      : cfg_(cfg), prefix_(std::move(prefix)) {
    cfg_.validate();
    token_table_ = reg.normal(prefix_ + ".tokens", {cfg_.dim, vocab_size});
    pos_table_ = reg.normal(prefix_ + ".positions", {cfg_.dim, cfg_.max_seq_len});
    blocks_.reserve(cfg_.layers);
    for (std::size_t i = 0; i < cfg_.layers; ++i)
      blocks_.push_back(net::make_transformer_block(
          reg, prefix_ + ".block" + std::to_string(i), cfg_.dim, cfg_.ff_dim));

    // Mirror the gradient-flow gating in the registry's trainable flags so
    // the optimizer skips frozen tensors entirely.
    const std::size_t frozen = cfg_.layers - cfg_.trainable_layers;
    if (frozen > 0) {
      reg.set_trainable(prefix_ + ".tokens", false);
      reg.set_trainable(prefix_ + ".positions", false);
      for (std::size_t i = 0; i < frozen; ++i)
        for (const auto& name : net::transformer_block_param_names(
                 prefix_ + ".block" + std::to_string(i)))
          reg.set_trainable(name, false);
    }
  }

  const TextEncoderConfig& config() const { return cfg_; }

  /// Pooled embedding of a token sequence. Over-length input is truncated
  /// (counted, not an error); an empty sequence encodes the PAD token alone.
  TensorPtr encode(Graph& g, std::span<const int> tokens) const {
    std::vector<int> ids(tokens.begin(), tokens.end());
    if (ids.size() > cfg_.max_seq_len) {
      ids.resize(cfg_.max_seq_len);
      truncations_.fetch_add(1, std::memory_order_relaxed);
    }
    if (ids.empty()) ids.push_back(Vocabulary::kPad);

    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);

    const std::size_t frozen = cfg_.layers - cfg_.trainable_layers;
    const bool outer = g.grad_enabled();

    g.set_grad_enabled(outer && frozen == 0);
    TensorPtr x = g.add(g.gather_columns(token_table_, ids),
                        g.gather_columns(pos_table_, positions));
    for (std::size_t i = 0; i < cfg_.layers; ++i) {
      if (i == frozen) g.set_grad_enabled(outer);
      x = net::transformer_block(g, x, blocks_[i], cfg_.heads);
    }
    g.set_grad_enabled(outer);
    return g.max_pool_rows(x);
  }

  std::uint64_t truncation_count() const {
    return truncations_.load(std::memory_order_relaxed);
  }

  const TensorPtr& token_table() const { return token_table_; }
  const std::vector<TransformerBlockParams>& blocks() const { return blocks_; }

 private:
  TextEncoderConfig cfg_;
  std::string prefix_;
  TensorPtr token_table_, pos_table_;
  std::vector<TransformerBlockParams> blocks_;
  mutable std::atomic<std::uint64_t> truncations_{0};
};

/// Element-wise query/product interaction; preserves the embedding dim.
inline TensorPtr match_cross(Graph& g, const TensorPtr& query,
                             const TensorPtr& product) {
  if (query->shape != product->shape)
    throw DimensionError("match_cross: " + num::shape_str(query->shape) +
                         " vs " + num::shape_str(product->shape));
  return g.mul(query, product);
}

/// Scalar inner-product baseline for the matching ablation.
inline TensorPtr match_dot(Graph& g, const TensorPtr& query,
                           const TensorPtr& product) {
  if (query->shape != product->shape)
    throw DimensionError("match_dot: " + num::shape_str(query->shape) +
                         " vs " + num::shape_str(product->shape));
  return g.sum(g.mul(query, product));
}

}  // namespace mtlrank::text
