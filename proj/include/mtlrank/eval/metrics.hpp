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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mtlrank/data/encode.hpp"
#include "mtlrank/errors.hpp"

namespace mtlrank::eval {

/// Mann-Whitney AUC with midrank tie handling: the probability that a
/// random positive outscores a random negative, ties counting one half.
/// Undefined (nullopt) when only one class is present.
inline std::optional<double> auc_roc(std::span<const double> scores,
                                     std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ContractError("auc_roc: scores and labels differ in length");
  std::size_t positives = 0;
  for (const int y : labels) {
    if (y != 0 && y != 1) throw ContractError("auc_roc: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups, accumulated for the positive class.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) positive_rank_sum += midrank;
    i = j + 1;
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

/// Products of one query ordered by score descending, product id ascending
/// on ties. No duplicate products.
struct RankedList {
  std::string query_id;
  std::vector<std::pair<std::string, double>> items;

  std::vector<std::string> top_k(std::size_t k) const {
    std::vector<std::string> out;
    out.reserve(std::min<std::size_t>(k, items.size()));
    for (std::size_t i = 0; i < items.size() && i < k; ++i)
      out.push_back(items[i].first);
    return out;
  }
};

/// Canonical ranking from raw (product, score) pairs. A product appearing
/// several times (one impression per customer/position) contributes the
/// mean of its scores.
inline RankedList rank_by_scores(
    const std::string& query_id,
    const std::vector<std::pair<std::string, double>>& scored) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [pid, score] : scored) {
    auto& slot = acc[pid];
    slot.first += score;
    ++slot.second;
  }
  RankedList out;
  out.query_id = query_id;
  out.items.reserve(acc.size());
  for (const auto& [pid, sum_count] : acc)
    out.items.emplace_back(pid, sum_count.first / double(sum_count.second));
  std::sort(out.items.begin(), out.items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

using ScoreFn = std::function<double(const data::EncodedExample&)>;

/// Ranks one query group of encoded examples under a scoring function.
inline RankedList rank_products(const ScoreFn& score,
                                std::span<const data::EncodedExample> group) {
  if (group.empty()) throw ContractError("rank_products: empty group");
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(group.size());
  for (const auto& ex : group) {
    if (ex.query_id != group.front().query_id)
      throw ContractError("rank_products: mixed query ids in one group");
    scored.emplace_back(ex.product_id, score(ex));
  }
  return rank_by_scores(group.front().query_id, scored);
}

/// Mean reciprocal rank of the first relevant product within the top K.
/// Queries without a relevant product in the top K contribute 0.
inline double mrr_at_k(
    const std::vector<std::pair<RankedList, std::set<std::string>>>& queries,
    std::size_t k) {
  if (k < 1) throw ContractError("mrr_at_k: K must be >= 1");
  if (queries.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [ranking, relevant] : queries) {
    for (std::size_t i = 0; i < ranking.items.size() && i < k; ++i) {
      if (relevant.count(ranking.items[i].first)) {
        total += 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(queries.size());
}

}  // namespace mtlrank::eval
