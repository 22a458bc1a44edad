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

#include <json.hpp>

#include "mtlrank/errors.hpp"
#include "mtlrank/log.hpp"
#include "mtlrank/pipeline/aggregate.hpp"

namespace mtlrank::pipeline {

struct RelevanceConfig {
  double alpha = 0.7;         // blend between click-based and semantic relevance
  std::size_t classes = 5;
  bool per_event = true;      // see weighted_ctr

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0)
      throw ConfigError("relevance: alpha must lie in [0, 1]");
    if (classes < 2) throw ConfigError("relevance: needs at least 2 classes");
  }
};

struct RelevanceLabel {
  std::string query_id;
  std::string product_id;
  double weighted_ctr = 0.0;
  double sem_score = 0.0;       // raw cosine in [-1, 1]
  double relevance_score = 0.0; // blended, in [0, 1]
  int relevance_class = 0;
};

/// alpha * minmax_query(weighted_CTR) + (1 - alpha) * rescaled semantic
/// score. The min-max normalization runs per query; a query with a single
/// product or zero spread maps to 0.5. The semantic cosine is rescaled from
/// [-1, 1] to [0, 1] so the blend mixes commensurate ranges.
inline double blend_relevance(double wctr, double wctr_min, double wctr_max,
                              double sem_score, double alpha) {
  double normalized = 0.5;
  if (wctr_max - wctr_min > 0.0)
    normalized = (wctr - wctr_min) / (wctr_max - wctr_min);
  const double sem01 = std::clamp((sem_score + 1.0) / 2.0, 0.0, 1.0);
  return alpha * normalized + (1.0 - alpha) * sem01;
}

/// Quantile thresholds at j/c over one query's scores, ties toward the
/// lower class: class(s) = #{j : s > q_j}, q_j = sorted[ceil(m*j/c) - 1].
inline std::vector<int> discretize_scores(const std::vector<double>& scores,
                                          std::size_t classes) {
  if (classes < 2) throw ConfigError("discretize: needs at least 2 classes");
  const std::size_t m = scores.size();
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  thresholds.reserve(classes - 1);
  for (std::size_t j = 1; j < classes; ++j) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(m * j) / static_cast<double>(classes)));
    thresholds.push_back(sorted[std::min(m - 1, rank == 0 ? 0 : rank - 1)]);
  }
  std::vector<int> out;
  out.reserve(m);
  for (const double s : scores) {
    int cls = 0;
    for (const double q : thresholds)
      if (s > q) ++cls;
    out.push_back(cls);
  }
  return out;
}

/// Full relevance labeling over the aggregates: weighted CTR, per-query
/// min-max, semantic blend, per-query quantile discretization. Aggregates
/// without impressions are excluded with a warning.
inline std::vector<RelevanceLabel> generate_relevance_labels(
    const AggregateMap& aggregates, const RelevanceConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<const ClickAggregate*>> by_query;
  std::size_t skipped = 0;
  for (const auto& [_, agg] : aggregates.all()) {
    if (agg.impressions == 0) {
      ++skipped;
      continue;
    }
    by_query[agg.query_id].push_back(&agg);
  }
  if (skipped > 0)
    warn(std::to_string(skipped) + " aggregate(s) without impressions skipped");

  std::vector<RelevanceLabel> labels;
  for (auto& [query_id, aggs] : by_query) {
    std::sort(aggs.begin(), aggs.end(),
              [](const ClickAggregate* a, const ClickAggregate* b) {
                return a->product_id < b->product_id;
              });
    std::vector<double> wctrs;
    wctrs.reserve(aggs.size());
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < aggs.size(); ++i) {
      const double w = weighted_ctr(*aggs[i], cfg.per_event);
      wctrs.push_back(w);
      lo = i == 0 ? w : std::min(lo, w);
      hi = i == 0 ? w : std::max(hi, w);
    }
    std::vector<double> scores;
    scores.reserve(aggs.size());
    for (std::size_t i = 0; i < aggs.size(); ++i)
      scores.push_back(
          blend_relevance(wctrs[i], lo, hi, aggs[i]->sem_score, cfg.alpha));
    const auto classes = discretize_scores(scores, cfg.classes);
    for (std::size_t i = 0; i < aggs.size(); ++i) {
      labels.push_back({query_id, aggs[i]->product_id, wctrs[i],
                        aggs[i]->sem_score, scores[i], classes[i]});
    }
  }
  return labels;
}

/// Label file JSONL: {query_id, product_id, weighted_ctr, sem_score,
/// relevance_score, relevance_class} per line.
inline void save_labels_jsonl(const std::vector<RelevanceLabel>& labels,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& l : labels) {
    out << nlohmann::json{{"query_id", l.query_id},
                          {"product_id", l.product_id},
                          {"weighted_ctr", l.weighted_ctr},
                          {"sem_score", l.sem_score},
                          {"relevance_score", l.relevance_score},
                          {"relevance_class", l.relevance_class}}
        << "\n";
  }
}

inline std::vector<RelevanceLabel> load_labels_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<RelevanceLabel> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      labels.push_back({j.at("query_id").get<std::string>(),
                        j.at("product_id").get<std::string>(),
                        j.at("weighted_ctr").get<double>(),
                        j.at("sem_score").get<double>(),
                        j.at("relevance_score").get<double>(),
                        j.at("relevance_class").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return labels;
}

/// Stamps relevance classes onto every impression of each labeled pair.
inline void apply_relevance_labels(data::Dataset& ds,
                                   const std::vector<RelevanceLabel>& labels) {
  std::unordered_map<std::string, int> classes;
  for (const auto& l : labels)
    classes[l.query_id + '\x1f' + l.product_id] = l.relevance_class;
  for (auto& im : ds.impressions) {
    const auto it = classes.find(im.query_id + '\x1f' + im.product_id);
    if (it != classes.end()) im.relevance_class = it->second;
  }
}

}  // namespace mtlrank::pipeline
