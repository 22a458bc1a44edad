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

// Batch experiment driver. Subcommands:
//   gen     synthetic click logs + planted ground truth
//   sample  category/popularity stratified subsampling
//   label   click + semantic relevance labels
//   train   pipeline through training; writes a checkpoint
//   eval    metrics for a checkpoint (AUC, MRR@K, PD@K, baselines)
//   pd      personalization degree only
//   ablate  semantic x matching x relevance matrix with a delta table
//   grid    task-weight grid search
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
// failure.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtlrank/errors.hpp"
#include "mtlrank/harness/ablate.hpp"
#include "mtlrank/harness/config.hpp"
#include "mtlrank/harness/experiment.hpp"
#include "mtlrank/harness/grid.hpp"
#include "mtlrank/harness/synthetic.hpp"
#include "mtlrank/net/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace mtlrank;

namespace {

harness::ExperimentConfig load_config(const std::string& path) {
  return harness::load_experiment_config(path);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"multi-task product search ranking experiments"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, checkpoint_path, report_path;
  double grid_step = 0.1;

  auto* gen = app.add_subcommand("gen", "generate synthetic click logs");
  gen->add_option("--config", config_path, "experiment config")->required();
  gen->add_option("--out", out_path, "output directory")->required();

  auto* sample = app.add_subcommand("sample", "stratified log sampling");
  sample->add_option("--config", config_path)->required();
  sample->add_option("--in", in_path, "impressions JSONL")->required();
  sample->add_option("--out", out_path, "sampled JSONL")->required();
  sample->add_option("--report", report_path, "shortfall CSV");

  auto* label = app.add_subcommand("label", "generate relevance labels");
  label->add_option("--config", config_path)->required();
  label->add_option("--in", in_path, "impressions JSONL")->required();
  label->add_option("--out", out_path, "labels JSONL")->required();

  auto* train = app.add_subcommand("train", "run the pipeline and train");
  train->add_option("--config", config_path)->required();
  train->add_option("--out", out_path, "run directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--config", config_path)->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
  eval_cmd->add_option("--out", out_path, "run directory")->required();

  auto* pd = app.add_subcommand("pd", "personalization degree of a checkpoint");
  pd->add_option("--config", config_path)->required();
  pd->add_option("--checkpoint", checkpoint_path)->required();
  pd->add_option("--out", out_path, "run directory")->required();

  auto* ablate = app.add_subcommand("ablate", "run the ablation matrix");
  ablate->add_option("--config", config_path)->required();
  ablate->add_option("--out", out_path, "output directory")->required();

  auto* grid = app.add_subcommand("grid", "task-weight grid search");
  grid->add_option("--config", config_path)->required();
  grid->add_option("--out", out_path, "output directory")->required();
  grid->add_option("--step", grid_step, "grid step (must divide 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage errors exit 1
  }

  if (gen->parsed()) {
    const auto cfg = load_config(config_path);
    fs::create_directories(out_path);
    const auto world = harness::generate_synthetic_logs(cfg.world);
    data::save_jsonl(world.dataset, (fs::path(out_path) / "impressions.jsonl").string());
    harness::save_ground_truth(
        world.ground_truth, (fs::path(out_path) / "ground_truth.jsonl").string());
    std::cout << "wrote " << world.dataset.impressions.size()
              << " impressions to " << out_path << "\n";
    return 0;
  }

  if (sample->parsed()) {
    const auto cfg = load_config(config_path);
    const auto ds = data::load_jsonl(in_path);
    auto result = pipeline::stratified_sample(ds, cfg.sampling);
    data::Dataset sampled;
    sampled.queries = ds.queries;
    sampled.products = ds.products;
    sampled.customers = ds.customers;
    sampled.impressions = std::move(result.sampled);
    data::save_jsonl(sampled, out_path);
    if (!report_path.empty())
      pipeline::save_shortfall_csv(result.report, report_path);
    std::cout << "sampled " << sampled.impressions.size() << " of "
              << ds.impressions.size() << " impressions\n";
    return 0;
  }

  if (label->parsed()) {
    const auto cfg = load_config(config_path);
    const auto ds = data::load_jsonl(in_path);
    text::SemanticScorer scorer(cfg.semantic);
    const auto aggregates = pipeline::AggregateMap::build(
        ds, cfg.semantic_enabled ? &scorer : nullptr);
    const auto labels =
        pipeline::generate_relevance_labels(aggregates, cfg.relevance);
    pipeline::save_labels_jsonl(labels, out_path);
    std::cout << "labeled " << labels.size() << " (query, product) pairs\n";
    return 0;
  }

  if (train->parsed()) {
    const auto cfg = load_config(config_path);
    const auto ckpt = harness::train_experiment(cfg, out_path);
    std::cout << "checkpoint: " << ckpt.string() << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const auto cfg = load_config(config_path);
    const auto result = harness::evaluate_checkpoint(cfg, checkpoint_path, out_path);
    std::cout << result.metrics.dump(2) << "\n";
    return 0;
  }

  if (pd->parsed()) {
    const auto cfg = load_config(config_path);
    auto loaded = net::load_checkpoint(checkpoint_path);
    harness::StageLogger log(out_path);
    auto prep = harness::prepare_data(cfg, log, &loaded.model->schema(),
                                      &loaded.vocab);
    const auto sessions = eval::group_sessions(prep.test);
    const double value = eval::pd_at_k(
        [&](const data::EncodedExample& ex) {
          return loaded.model->predict_probability(ex, cfg.metrics.task);
        },
        sessions, prep.schema, cfg.metrics.pd_k, cfg.metrics.pd_samples,
        cfg.metrics.seed);
    const nlohmann::json out = {
        {"metric", "pd"},
        {"task", net::task_name(cfg.metrics.task)},
        {"K", cfg.metrics.pd_k},
        {"value", value},
        {"n_queries",
         std::min<std::size_t>(cfg.metrics.pd_samples, sessions.size())},
        {"seed", cfg.metrics.seed}};
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (ablate->parsed()) {
    const auto cfg = load_config(config_path);
    const auto result = harness::run_ablation(cfg, out_path);
    std::cout << "ablation table: " << result.table_path.string() << "\n";
    for (const auto& v : result.variants)
      std::cout << v.name << " mrr_click=" << v.row.mrr.at(net::Task::click)
                << " params=" << v.row.total_params << "\n";
    return 0;
  }

  if (grid->parsed()) {
    const auto cfg = load_config(config_path);
    const auto result = harness::grid_search_weights(cfg, grid_step, out_path);
    const auto& best = result.points[result.best_index];
    std::cout << "grid table: " << result.table_path.string() << "\n";
    std::cout << "best weights: " << best.weights[0] << "," << best.weights[1]
              << "," << best.weights[2] << " combined MRR@"
              << cfg.metrics.mrr_k << " = " << best.combined << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
