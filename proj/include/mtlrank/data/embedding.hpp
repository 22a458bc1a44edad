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

#include "mtlrank/data/schema.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"

namespace mtlrank::data {

using num::Graph;
using num::ParamRegistry;
using num::TensorPtr;

/// One learnable [e_i x v_i] table per categorical feature. Looking up
/// category v returns column v — exactly table * one_hot(v) — and
/// participates in autodiff. Out-of-vocabulary indices resolve to the
/// reserved UNKNOWN column 0, never an error at inference.
class EmbeddingBank {
 public:
  EmbeddingBank(const FeatureSchema& schema, ParamRegistry& reg) {
    tables_.reserve(schema.categorical.size());
    for (const auto& f : schema.categorical) {
      tables_.push_back(
          reg.normal("embed." + f.name, {f.embed_dim, f.vocab_size()}));
    }
  }

  TensorPtr embed(Graph& g, std::size_t feature, std::size_t category) const {
    return g.gather_column(tables_.at(feature), category);
  }

  const TensorPtr& table(std::size_t feature) const { return tables_.at(feature); }
  std::size_t count() const { return tables_.size(); }

 private:
  std::vector<TensorPtr> tables_;
};

}  // namespace mtlrank::data
