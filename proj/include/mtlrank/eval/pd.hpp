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

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mtlrank/data/encode.hpp"
#include "mtlrank/data/schema.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/eval/metrics.hpp"
#include "mtlrank/log.hpp"
#include "mtlrank/numerics/rng.hpp"

namespace mtlrank::eval {

/// One ranking context: the products a customer saw for a query.
struct SessionGroup {
  std::string query_id;
  std::string customer_id;
  std::vector<data::EncodedExample> examples;
};

/// Groups encoded examples into (query, customer) sessions, preserving the
/// first-seen order for determinism.
inline std::vector<SessionGroup> group_sessions(
    std::span<const data::EncodedExample> examples) {
  std::vector<SessionGroup> sessions;
  std::map<std::string, std::size_t> index;
  for (const auto& ex : examples) {
    const std::string key = ex.query_id + '\x1f' + ex.customer_id;
    const auto it = index.find(key);
    if (it == index.end()) {
      index[key] = sessions.size();
      sessions.push_back({ex.query_id, ex.customer_id, {ex}});
    } else {
      sessions[it->second].examples.push_back(ex);
    }
  }
  return sessions;
}

/// Neutralizes everything user-specific: flagged continuous slots read the
/// standardized zero (the training mean) and flagged categorical slots read
/// the reserved UNKNOWN index.
inline data::EncodedExample neutralize_user_features(
    const data::EncodedExample& ex, const data::FeatureSchema& schema) {
  data::EncodedExample out = ex;
  for (std::size_t i = 0; i < schema.continuous.size(); ++i)
    if (schema.continuous[i].user_specific) out.continuous[i] = 0.0;
  for (std::size_t i = 0; i < schema.categorical.size(); ++i)
    if (schema.categorical[i].user_specific) out.categorical[i] = 0;
  return out;
}

/// Average top-K overlap of each sampled session's personalized and
/// de-personalized rankings. Lower overlap means stronger personalization.
/// Sessions smaller than K use their full size as the cutoff, keeping the
/// identical-scoring case pinned at exactly 1. A schema without any
/// user-specific feature is degenerate: warns and returns 1.0.
inline double pd_at_k(const ScoreFn& score,
                      const std::vector<SessionGroup>& sessions,
                      const data::FeatureSchema& schema, std::size_t k,
                      std::size_t sample_size, std::uint64_t seed) {
  if (k < 1) throw ContractError("pd_at_k: K must be >= 1");
  if (sample_size < 1) throw ContractError("pd_at_k: sample size must be >= 1");
  if (!schema.has_user_specific()) {
    warn("pd_at_k: schema marks no user-specific features; PD is trivially 1");
    return 1.0;
  }
  if (sessions.empty()) throw ContractError("pd_at_k: no sessions");

  std::vector<std::size_t> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  num::Rng rng(num::derive_seed(seed, "pd.sample"));
  rng.shuffle(order);
  const std::size_t take = std::min(sample_size, order.size());

  double total = 0.0;
  for (std::size_t s = 0; s < take; ++s) {
    const auto& session = sessions[order[s]];
    std::vector<data::EncodedExample> modified;
    modified.reserve(session.examples.size());
    for (const auto& ex : session.examples)
      modified.push_back(neutralize_user_features(ex, schema));

    const auto ranked_p = rank_products(score, session.examples);
    const auto ranked_m = rank_products(score, modified);
    const std::size_t k_eff = std::min<std::size_t>(k, ranked_p.items.size());
    const auto top_p = ranked_p.top_k(k_eff);
    const auto top_m = ranked_m.top_k(k_eff);
    const std::set<std::string> set_p(top_p.begin(), top_p.end());
    std::size_t inter = 0;
    for (const auto& pid : top_m) inter += set_p.count(pid);
    total += static_cast<double>(inter) / static_cast<double>(k_eff);
  }
  return total / static_cast<double>(take);
}

}  // namespace mtlrank::eval
