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
#include <unordered_map>
#include <vector>

#include "mtlrank/data/records.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/log.hpp"
#include "mtlrank/text/semantic.hpp"

namespace mtlrank::pipeline {

/// Click-position decay factor, ln(position + 1)^1.5. Defined on fractional
/// positions as well so the aggregate-level compatibility path can weight a
/// mean click position.
inline double position_weight(double position) {
  if (position < 1.0)
    throw ContractError("position_weight: position must be >= 1");
  return std::pow(std::log(position + 1.0), 1.5);
}

inline double position_weight(int position) {
  return position_weight(static_cast<double>(position));
}

/// 1 + transactions / clicks, amplifying clicks that converted. Zero clicks
/// make the ratio undefined; the neutral multiplier 1.0 is used instead.
inline double transaction_weight(std::size_t clicks, std::size_t transactions) {
  if (clicks == 0) return 1.0;
  if (transactions > clicks)
    throw ContractError("transaction_weight: transactions exceed clicks");
  return 1.0 + static_cast<double>(transactions) / static_cast<double>(clicks);
}

/// Per-(query, product) event aggregate. weighted_click_mass accumulates
/// per click event at the event's own position, with the event's
/// transaction flag folded in: position_weight(pos) * (1 + trx).
struct ClickAggregate {
  std::string query_id;
  std::string product_id;
  std::size_t impressions = 0;
  std::size_t clicks = 0;
  std::size_t transactions = 0;
  double weighted_click_mass = 0.0;
  double click_position_sum = 0.0;  // positions of click events, for the
                                    // aggregate-level compatibility path
  double sem_score = 0.0;

  void add_event(int position, int y_click, int y_trx) {
    ++impressions;
    if (y_click == 1) {
      ++clicks;
      click_position_sum += static_cast<double>(position);
      weighted_click_mass +=
          position_weight(position) * (1.0 + static_cast<double>(y_trx));
    }
    transactions += static_cast<std::size_t>(y_trx);
  }
};

/// Commutative, associative fold of impressions into per-pair aggregates.
class AggregateMap {
 public:
  static AggregateMap build(const data::Dataset& ds,
                            const text::SemanticScorer* scorer) {
    AggregateMap out;
    std::size_t clamped = 0;
    for (const auto& im : ds.impressions) {
      int y_click = im.y_click;
      int y_trx = im.y_trx;
      // trx without click cannot be weighted coherently; clamp and count.
      if (y_trx == 1 && y_click == 0) {
        y_trx = 0;
        ++clamped;
      }
      auto& agg = out.map_[key(im.query_id, im.product_id)];
      if (agg.impressions == 0) {
        agg.query_id = im.query_id;
        agg.product_id = im.product_id;
        if (scorer) {
          agg.sem_score =
              scorer->score(ds.query(im.query_id).text, ds.product(im.product_id));
        }
      }
      agg.add_event(im.position, y_click, y_trx);
    }
    if (clamped > 0)
      warn(std::to_string(clamped) + " transaction(s) without a click clamped");
    return out;
  }

  const ClickAggregate* find(const std::string& query_id,
                             const std::string& product_id) const {
    const auto it = map_.find(key(query_id, product_id));
    return it == map_.end() ? nullptr : &it->second;
  }

  const std::unordered_map<std::string, ClickAggregate>& all() const {
    return map_;
  }
  std::size_t size() const { return map_.size(); }

 private:
  static std::string key(const std::string& q, const std::string& p) {
    return q + '\x1f' + p;
  }
  std::unordered_map<std::string, ClickAggregate> map_;
};

/// Position- and transaction-weighted click rate. The default reading
/// weights every click event at its own position with its own transaction
/// flag (weighted_click_mass / impressions), which keeps the relevance
/// score monotone in clicks and transactions. per_event = false selects the
/// aggregate-level formula clicks * position_weight(mean click position) *
/// transaction_weight / impressions instead.
inline double weighted_ctr(const ClickAggregate& agg, bool per_event = true) {
  if (agg.impressions == 0)
    throw ContractError("weighted_ctr: aggregate has no impressions");
  if (agg.clicks == 0) return 0.0;
  if (per_event)
    return agg.weighted_click_mass / static_cast<double>(agg.impressions);
  const double mean_pos =
      agg.click_position_sum / static_cast<double>(agg.clicks);
  return static_cast<double>(agg.clicks) * position_weight(mean_pos) *
         transaction_weight(agg.clicks, agg.transactions) /
         static_cast<double>(agg.impressions);
}

}  // namespace mtlrank::pipeline
