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

#include "mtlrank/harness/experiment.hpp"

namespace mtlrank::harness {

struct GridPoint {
  std::vector<double> weights;  // click, atc, trx
  double mrr_click = 0.0, mrr_atc = 0.0, mrr_trx = 0.0;
  double combined = 0.0;  // unweighted mean of the three, on validation
};

struct GridResult {
  std::vector<GridPoint> points;
  std::size_t best_index = 0;
  fs::path table_path;
};

/// Task-weight grid search: every weight vector on the step lattice over
/// the three binary tasks (all-zero skipped), each trained at a reduced
/// epoch budget, scored by combined validation MRR@K. Data is prepared once
/// and shared; every point trains from the same seeded initialization.
inline GridResult grid_search_weights(const ExperimentConfig& base, double step,
                                      const fs::path& outdir) {
  const auto divisions = static_cast<std::size_t>(std::llround(1.0 / step));
  if (divisions < 1 ||
      std::fabs(static_cast<double>(divisions) * step - 1.0) > 1e-9)
    throw ConfigError("grid: step must divide 1 evenly");

  StageLogger log(outdir);
  ExperimentConfig cfg = base;
  detail::set_relevance_task(cfg, cfg.relevance_task);  // normalize weights
  PreparedData prep = prepare_data(cfg, log);
  const auto valid_sessions = index_sessions(prep.valid);

  log.stage("grid");
  GridResult result;
  for (std::size_t a = 0; a <= divisions; ++a) {
    for (std::size_t b = 0; b <= divisions; ++b) {
      for (std::size_t c = 0; c <= divisions; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        GridPoint point;
        point.weights = {static_cast<double>(a) * step,
                         static_cast<double>(b) * step,
                         static_cast<double>(c) * step};

        ExperimentConfig point_cfg = cfg;
        for (std::size_t i = 0; i < 3; ++i)
          point_cfg.model.mmoe.weights[i] = point.weights[i];
        point_cfg.training.max_epochs = cfg.grid_epochs;

        net::MtlModel model(point_cfg.model, prep.schema, prep.vocab.size());
        const auto train_result =
            net::train_model(model, prep.train, prep.valid, point_cfg.training);
        if (train_result.diverged)
          throw NumericError("grid point diverged: " + train_result.diagnostic);

        const auto preds = model.predict_batch(prep.valid);
        auto mrr_for = [&](net::Task t) {
          return session_mrr(
              valid_sessions, prep.valid,
              [&](std::size_t i) { return preds[i].probabilities.at(t); }, t,
              cfg.metrics.mrr_k);
        };
        point.mrr_click = mrr_for(net::Task::click);
        point.mrr_atc = mrr_for(net::Task::atc);
        point.mrr_trx = mrr_for(net::Task::trx);
        point.combined = (point.mrr_click + point.mrr_atc + point.mrr_trx) / 3.0;

        log.line("weights=" + std::to_string(point.weights[0]) + "," +
                 std::to_string(point.weights[1]) + "," +
                 std::to_string(point.weights[2]) +
                 " combined=" + std::to_string(point.combined));
        if (!result.points.empty() &&
            point.combined > result.points[result.best_index].combined)
          result.best_index = result.points.size();
        result.points.push_back(std::move(point));
      }
    }
  }

  result.table_path = outdir / "grid.csv";
  std::ofstream csv(result.table_path);
  csv << "weight_click,weight_atc,weight_trx,mrr_click,mrr_atc,mrr_trx,"
         "combined,best\n";
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    csv << p.weights[0] << ',' << p.weights[1] << ',' << p.weights[2] << ','
        << p.mrr_click << ',' << p.mrr_atc << ',' << p.mrr_trx << ','
        << p.combined << ',' << (i == result.best_index ? 1 : 0) << "\n";
  }
  return result;
}

}  // namespace mtlrank::harness
