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
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlrank/data/records.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/log.hpp"
#include "mtlrank/numerics/rng.hpp"

namespace mtlrank::pipeline {

struct SamplingConfig {
  std::size_t bins_per_category = 5;
  double beta = 1.0;       // overall sampling rate
  double alpha_pos = 0.5;  // positive fraction of each bin's target
  std::uint64_t seed = 0;

  void validate() const {
    if (beta <= 0.0 || beta > 1.0)
      throw ConfigError("sampling: beta must lie in (0, 1]");
    if (alpha_pos <= 0.0 || alpha_pos >= 1.0)
      throw ConfigError("sampling: alpha_pos must lie in (0, 1)");
    if (bins_per_category < 1) throw ConfigError("sampling: bins must be >= 1");
  }
};

/// Per-(category, bin) accounting row. taken = min(requested, available) on
/// each side; shortfalls are never filled from the other side or another
/// bin.
struct BinReport {
  std::string category;
  std::size_t bin = 0;
  std::size_t impressions = 0;
  std::size_t target = 0;
  std::size_t pos_requested = 0, neg_requested = 0;
  std::size_t pos_available = 0, neg_available = 0;
  std::size_t pos_taken = 0, neg_taken = 0;

  std::size_t shortfall() const {
    return (pos_requested - pos_taken) + (neg_requested - neg_taken);
  }
};

struct SampleResult {
  std::vector<data::ImpressionRecord> sampled;  // original dataset order
  std::vector<BinReport> report;
};

/// Category/popularity-stratified subsampling with positive/negative
/// balancing. Products of each category are ranked by impression count and
/// split into equal-width-by-rank bins; every bin contributes
/// round(beta * |bin|) impressions, round(alpha_pos * target) of them
/// positive (any of click/ATC/TRX set), drawn uniformly without
/// replacement. Fully deterministic: each (category, bin) uses a derived
/// seed, so bins are independent of one another.
inline SampleResult stratified_sample(const data::Dataset& ds,
                                      const SamplingConfig& cfg) {
  cfg.validate();

  // category -> product -> impression indices
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> grouped;
  for (std::size_t i = 0; i < ds.impressions.size(); ++i) {
    const auto& im = ds.impressions[i];
    const auto& product = ds.product(im.product_id);
    grouped[product.category_id][im.product_id].push_back(i);
  }

  SampleResult result;
  std::vector<char> selected(ds.impressions.size(), 0);

  for (const auto& [category, products] : grouped) {
    if (products.empty()) {
      warn("category '" + category + "' has no products; skipped");
      continue;
    }
    // Rank products by impression count (desc), id asc for determinism.
    std::vector<std::pair<std::string, std::size_t>> ranked;
    ranked.reserve(products.size());
    for (const auto& [pid, idxs] : products) ranked.emplace_back(pid, idxs.size());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });

    const std::size_t x = cfg.bins_per_category;
    const std::size_t m = ranked.size();
    for (std::size_t k = 0; k < x; ++k) {
      const std::size_t lo = k * m / x;
      const std::size_t hi = (k + 1) * m / x;

      std::vector<std::size_t> positives, negatives;
      for (std::size_t r = lo; r < hi; ++r) {
        for (const std::size_t idx : products.at(ranked[r].first)) {
          const auto& im = ds.impressions[idx];
          const bool positive = im.y_click == 1 || im.y_atc == 1 || im.y_trx == 1;
          (positive ? positives : negatives).push_back(idx);
        }
      }

      BinReport row;
      row.category = category;
      row.bin = k;
      row.impressions = positives.size() + negatives.size();
      row.target = static_cast<std::size_t>(
          std::llround(cfg.beta * static_cast<double>(row.impressions)));
      row.pos_requested = static_cast<std::size_t>(
          std::llround(cfg.alpha_pos * static_cast<double>(row.target)));
      row.neg_requested = row.target - row.pos_requested;
      row.pos_available = positives.size();
      row.neg_available = negatives.size();

      num::Rng rng(num::derive_seed(
          cfg.seed, "sample/" + category + "/" + std::to_string(k)));
      auto draw = [&](std::vector<std::size_t>& side, std::size_t want) {
        const std::size_t take = std::min(want, side.size());
        rng.shuffle(side);
        for (std::size_t i = 0; i < take; ++i) selected[side[i]] = 1;
        return take;
      };
      row.pos_taken = draw(positives, row.pos_requested);
      row.neg_taken = draw(negatives, row.neg_requested);
      result.report.push_back(row);
    }
  }

  for (std::size_t i = 0; i < ds.impressions.size(); ++i)
    if (selected[i]) result.sampled.push_back(ds.impressions[i]);
  return result;
}

inline void save_shortfall_csv(const std::vector<BinReport>& report,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "category,bin,impressions,target,pos_requested,neg_requested,"
         "pos_available,neg_available,pos_taken,neg_taken,shortfall\n";
  for (const auto& r : report) {
    out << r.category << ',' << r.bin << ',' << r.impressions << ',' << r.target
        << ',' << r.pos_requested << ',' << r.neg_requested << ','
        << r.pos_available << ',' << r.neg_available << ',' << r.pos_taken << ','
        << r.neg_taken << ',' << r.shortfall() << "\n";
  }
}

}  // namespace mtlrank::pipeline
