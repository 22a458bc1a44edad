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

#include <cstdio>
#include <string>
#include <vector>

#include "mtlrank/harness/experiment.hpp"

namespace mtlrank::harness {

struct AblationVariant {
  std::string name;
  bool semantic = true;
  net::MatchingMode matching = net::MatchingMode::cross;
  bool relevance = false;
  ReportRow row;
};

struct AblationResult {
  std::vector<AblationVariant> variants;
  fs::path table_path;
};

namespace detail {

inline void set_relevance_task(ExperimentConfig& cfg, bool on) {
  auto& mmoe = cfg.model.mmoe;
  double rel_weight = cfg.relevance_weight;
  if (mmoe.tasks.size() == 4) rel_weight = mmoe.weights[3];
  mmoe.tasks = {net::Task::click, net::Task::atc, net::Task::trx};
  mmoe.weights.resize(3);
  cfg.relevance_task = on;
  if (on) {
    mmoe.tasks.push_back(net::Task::relevance);
    mmoe.weights.push_back(rel_weight);
  }
}

inline std::string pct(double now, double base) {
  if (base == 0.0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.2f%%", 100.0 * (now - base) / base);
  return buf;
}

}  // namespace detail

/// The semantic x matching x relevance ablation matrix (8 runs) over shared
/// data and seeds, plus a delta table against the reference variant
/// (semantic on, cross matching, no relevance task).
inline AblationResult run_ablation(ExperimentConfig base, const fs::path& outdir) {
  if (base.model.mmoe.num_experts <= 4)
    throw ConfigError(
        "ablation includes a 4-task variant; set model.experts to at least 5");

  fs::create_directories(outdir);
  if (base.synthetic()) {
    // Generate the world once so every variant sees identical data.
    const auto world = generate_synthetic_logs(base.world);
    const auto shared = outdir / "shared_impressions.jsonl";
    data::save_jsonl(world.dataset, shared.string());
    save_ground_truth(world.ground_truth,
                      (outdir / "shared_ground_truth.jsonl").string());
    base.impressions_path = shared.string();
  }

  AblationResult result;
  for (const bool semantic : {true, false}) {
    for (const net::MatchingMode matching :
         {net::MatchingMode::cross, net::MatchingMode::dot}) {
      for (const bool relevance : {false, true}) {
        AblationVariant variant;
        variant.semantic = semantic;
        variant.matching = matching;
        variant.relevance = relevance;
        variant.name = std::string("sem=") + (semantic ? "on" : "off") +
                       "_match=" + net::matching_name(matching) +
                       "_rel=" + (relevance ? "on" : "off");

        ExperimentConfig cfg = base;
        cfg.name = variant.name;
        cfg.semantic_enabled = semantic;
        cfg.model.matching = matching;
        detail::set_relevance_task(cfg, relevance);

        const auto run = run_experiment(cfg, outdir / variant.name);
        variant.row = run.row;
        result.variants.push_back(std::move(variant));
      }
    }
  }

  // Reference: semantic on, cross, relevance off.
  const AblationVariant* ref = nullptr;
  for (const auto& v : result.variants)
    if (v.semantic && v.matching == net::MatchingMode::cross && !v.relevance)
      ref = &v;

  result.table_path = outdir / "ablation.csv";
  std::ofstream csv(result.table_path);
  csv << "variant,mrr_click,delta_click,mrr_atc,delta_atc,mrr_trx,delta_trx,"
         "pd_at_k,trainable_params,total_params\n";
  for (const auto& v : result.variants) {
    auto m = [&](net::Task t) { return v.row.mrr.at(t); };
    auto b = [&](net::Task t) { return ref->row.mrr.at(t); };
    csv << v.name << ',' << m(net::Task::click) << ','
        << detail::pct(m(net::Task::click), b(net::Task::click)) << ','
        << m(net::Task::atc) << ','
        << detail::pct(m(net::Task::atc), b(net::Task::atc)) << ','
        << m(net::Task::trx) << ','
        << detail::pct(m(net::Task::trx), b(net::Task::trx)) << ','
        << v.row.pd << ',' << v.row.trainable_params << ','
        << v.row.total_params << "\n";
  }
  return result;
}

}  // namespace mtlrank::harness
