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

#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtlrank/data/records.hpp"
#include "mtlrank/errors.hpp"

namespace mtlrank::text {

struct SemanticScorerConfig {
  enum class Variant { hash_ngram, encoder_cosine };
  Variant variant = Variant::hash_ngram;
  std::size_t ngram = 3;
  std::size_t hash_dim = 256;

  void validate() const {
    if (hash_dim < 16) throw ConfigError("semantic scorer: hash_dim must be >= 16");
    if (ngram < 1) throw ConfigError("semantic scorer: ngram must be >= 1");
  }
};

/// Deterministic query/document relevance in [-1, 1]: cosine similarity of
/// L2-normalized embeddings. The default embedding is hashed character
/// n-gram counts, which needs no trained weights; an encoder-based variant
/// can be plugged in through the embed hook.
class SemanticScorer {
 public:
  explicit SemanticScorer(SemanticScorerConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
  }

  /// Custom embedding hook (used for the encoder_cosine variant).
  SemanticScorer(SemanticScorerConfig cfg,
                 std::function<std::vector<double>(const std::string&)> embed)
      : cfg_(cfg), embed_(std::move(embed)) {
    cfg_.validate();
  }

  const SemanticScorerConfig& config() const { return cfg_; }

  /// Product documents combine title, brand, color and target age group.
  double score(const std::string& query_text, const data::ProductRecord& p) const {
    return score_texts(query_text, p.document());
  }

  double score_texts(const std::string& a, const std::string& b) const {
    const auto va = embed_ ? embed_(a) : hash_embed(a);
    const auto vb = embed_ ? embed_(b) : hash_embed(b);
    return cosine(va, vb);
  }

  /// Hashed character n-gram counts, L2-normalized. Strings shorter than n
  /// contribute themselves as a single gram; empty strings embed to zero.
  std::vector<double> hash_embed(const std::string& raw) const {
    std::string s;
    s.reserve(raw.size());
    for (const char c : raw)
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    std::vector<double> v(cfg_.hash_dim, 0.0);
    if (s.empty()) return v;
    const std::size_t n = cfg_.ngram;
    if (s.size() < n) {
      v[fnv1a(s.data(), s.size()) % cfg_.hash_dim] += 1.0;
    } else {
      for (std::size_t i = 0; i + n <= s.size(); ++i)
        v[fnv1a(s.data() + i, n) % cfg_.hash_dim] += 1.0;
    }
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& x : v) x /= norm;
    return v;
  }

  /// Cosine of two vectors; 0.0 by convention when either is all-zero.
  static double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
      throw DimensionError("cosine: vector lengths differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  }

 private:
  static std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 1099511628211ULL;
    }
    return h;
  }

  SemanticScorerConfig cfg_;
  std::function<std::vector<double>(const std::string&)> embed_;
};

}  // namespace mtlrank::text
