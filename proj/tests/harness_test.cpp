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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "mtlrank/harness/ablate.hpp"
#include "mtlrank/harness/config.hpp"
#include "mtlrank/harness/experiment.hpp"
#include "mtlrank/harness/grid.hpp"
#include "mtlrank/harness/synthetic.hpp"

using namespace mtlrank;
namespace fs = std::filesystem;

namespace {

harness::SyntheticWorldConfig tiny_world(std::uint64_t seed = 11) {
  harness::SyntheticWorldConfig w;
  w.queries = 80;
  w.products = 150;
  w.customers = 40;
  w.categories = 5;
  w.title_vocab = 60;
  w.session_size = 8;
  w.impressions = 4000;
  w.click_rate = 0.3;
  w.atc_rate = 0.12;
  w.trx_rate = 0.05;
  w.seed = seed;
  return w;
}

// Small, fast experiment configuration used across the harness tests.
std::string tiny_experiment_ini(const std::string& extra = "") {
  return R"ini(
[experiment]
name = tiny

[world]
queries = 80
products = 150
customers = 40
categories = 5
title_vocab = 60
session_size = 8
impressions = 4000
click_rate = 0.3
atc_rate = 0.12
trx_rate = 0.05
seed = 11

[sampling]
enabled = true
beta = 0.8
alpha_pos = 0.4
bins = 3
seed = 2

[model]
bottom = dcn
matching = off
experts = 5
expert_widths = 12
tower_widths = 8
embed_dim = 6
deep_widths = 16
weights = 0.4,0.3,0.3
seed = 21

[text]
layers = 1
dim = 8
heads = 2
ff_dim = 12
max_len = 8

[training]
lr = 0.005
batch = 128
epochs = 2
seed = 31

[metrics]
k = 1
pd_k = 3
pd_samples = 40
seed = 41
)ini" + extra;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mtlrank_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Synthetic, LabelsRespectHierarchyByConstruction) {
  const auto world = harness::generate_synthetic_logs(tiny_world());
  for (const auto& im : world.dataset.impressions) {
    EXPECT_LE(im.y_trx, im.y_atc);
    EXPECT_LE(im.y_atc, im.y_click);
  }
  EXPECT_EQ(data::validate_label_hierarchy(world.dataset), 0u);
}

TEST(Synthetic, ClickRateDecreasesWithPosition) {
  // Empirical frequency oracle over a larger world.
  auto cfg = tiny_world(13);
  cfg.impressions = 100000;
  cfg.queries = 300;
  cfg.products = 600;
  const auto world = harness::generate_synthetic_logs(cfg);

  std::map<int, std::pair<std::size_t, std::size_t>> by_position;  // clicks, n
  for (const auto& im : world.dataset.impressions) {
    auto& slot = by_position[im.position];
    slot.first += static_cast<std::size_t>(im.y_click);
    ++slot.second;
  }
  auto rate = [&](int lo, int hi) {
    std::size_t clicks = 0, n = 0;
    for (int p = lo; p <= hi; ++p) {
      clicks += by_position[p].first;
      n += by_position[p].second;
    }
    return static_cast<double>(clicks) / static_cast<double>(n);
  };
  EXPECT_GT(rate(1, 2), rate(4, 5));
  EXPECT_GT(rate(4, 5), rate(7, 8));
}

TEST(Synthetic, SameSeedProducesByteIdenticalFiles) {
  const auto dir = fresh_dir("synth_determinism");
  for (const int run : {1, 2}) {
    const auto world = harness::generate_synthetic_logs(tiny_world(17));
    data::save_jsonl(world.dataset,
                     (dir / ("imp" + std::to_string(run) + ".jsonl")).string());
    harness::save_ground_truth(
        world.ground_truth, (dir / ("gt" + std::to_string(run) + ".jsonl")).string());
  }
  EXPECT_EQ(slurp(dir / "imp1.jsonl"), slurp(dir / "imp2.jsonl"));
  EXPECT_EQ(slurp(dir / "gt1.jsonl"), slurp(dir / "gt2.jsonl"));
  fs::remove_all(dir);
}

TEST(Synthetic, ThousandsOfImpressionsRoundTripThroughJsonl) {
  const auto world = harness::generate_synthetic_logs(tiny_world(23));
  ASSERT_GE(world.dataset.impressions.size(), 1000u);
  const auto path = fs::temp_directory_path() / "mtlrank_world_rt.jsonl";
  data::save_jsonl(world.dataset, path.string());
  const auto back = data::load_jsonl(path.string());
  EXPECT_EQ(back.impressions, world.dataset.impressions);
  EXPECT_EQ(back.queries.size(), world.dataset.queries.size());
  for (const auto& [id, p] : world.dataset.products)
    EXPECT_EQ(back.products.at(id), p);
  for (const auto& [id, c] : world.dataset.customers)
    EXPECT_EQ(back.customers.at(id), c);
  fs::remove(path);
}

TEST(Synthetic, RateHierarchyValidated) {
  auto cfg = tiny_world();
  cfg.atc_rate = 0.5;  // exceeds click_rate
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ParsesSectionsAndTypes) {
  const auto ini = harness::IniFile::parse_text(tiny_experiment_ini());
  const auto cfg = harness::experiment_config_from_ini(ini);
  EXPECT_EQ(cfg.name, "tiny");
  EXPECT_EQ(cfg.world.queries, 80u);
  EXPECT_EQ(cfg.model.mmoe.num_experts, 5u);
  EXPECT_DOUBLE_EQ(cfg.model.mmoe.weights[0], 0.4);
  EXPECT_EQ(cfg.model.matching, net::MatchingMode::off);
  EXPECT_TRUE(cfg.synthetic());
}

TEST(Config, RejectsMalformedValues) {
  EXPECT_THROW(harness::IniFile::parse_text("[a\nk = v\n"), ConfigError);
  EXPECT_THROW(harness::IniFile::parse_text("[a]\nnot a pair\n"), ConfigError);
  const auto ini = harness::IniFile::parse_text("[training]\nlr = fast\n");
  EXPECT_THROW(harness::experiment_config_from_ini(ini), ConfigError);
}

TEST(Config, VeryLargeBatchAccepted) {
  const auto ini = harness::IniFile::parse_text(
      tiny_experiment_ini("\n[training]\nbatch = 16384\n"));
  // Later sections override: the parser keeps the last value.
  const auto cfg = harness::experiment_config_from_ini(ini);
  EXPECT_EQ(cfg.training.batch_size, 16384u);
}

TEST(Experiment, RunsEndToEndAndPersistsArtifacts) {
  const auto dir = fresh_dir("exp_smoke");
  const auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  const auto result = harness::run_experiment(cfg, dir);

  for (const char* artifact : {"config.ini", "metrics.json", "checkpoint.json",
                               "report.csv", "run.log", "impressions.jsonl",
                               "ground_truth.jsonl", "shortfall.csv"})
    EXPECT_TRUE(fs::exists(dir / artifact)) << artifact;

  EXPECT_EQ(slurp(dir / "config.ini"), cfg.raw_text);
  EXPECT_GT(result.row.total_params, 0u);
  EXPECT_EQ(result.row.total_params, result.row.trainable_params);
  for (const auto& [t, v] : result.row.mrr) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  fs::remove_all(dir);
}

TEST(Experiment, RerunReproducesMetricsJsonByteIdentically) {
  const auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  const auto dir1 = fresh_dir("exp_repro1");
  const auto dir2 = fresh_dir("exp_repro2");
  harness::run_experiment(cfg, dir1);
  harness::run_experiment(cfg, dir2);
  EXPECT_EQ(slurp(dir1 / "metrics.json"), slurp(dir2 / "metrics.json"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST(Experiment, CheckpointEvalReproducesTrainRunMetrics) {
  const auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  const auto train_dir = fresh_dir("exp_trainrun");
  const auto train_run = harness::run_experiment(cfg, train_dir);
  const auto eval_dir = fresh_dir("exp_evalrun");
  const auto eval_run = harness::evaluate_checkpoint(
      cfg, (train_dir / "checkpoint.json").string(), eval_dir);
  EXPECT_EQ(train_run.metrics.at("metrics"), eval_run.metrics.at("metrics"));
  fs::remove_all(train_dir);
  fs::remove_all(eval_dir);
}

TEST(Experiment, EncoderCosineScorerRunsEndToEnd) {
  const auto dir = fresh_dir("exp_enc_cosine");
  auto cfg = harness::experiment_config_from_ini(harness::IniFile::parse_text(
      tiny_experiment_ini("\n[semantic]\nvariant = encoder_cosine\n")));
  const auto result = harness::run_experiment(cfg, dir);
  EXPECT_GT(result.row.total_params, 0u);
  fs::remove_all(dir);
}

TEST(Experiment, FailureLeavesStageMarker) {
  auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  cfg.impressions_path = "/nonexistent/impressions.jsonl";
  const auto dir = fresh_dir("exp_fail");
  EXPECT_THROW(harness::run_experiment(cfg, dir), DataError);
  ASSERT_TRUE(fs::exists(dir / "failed"));
  EXPECT_NE(slurp(dir / "failed").find("stage: data"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Grid, EnumeratesLatticeAndPicksBest) {
  auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  cfg.grid_epochs = 1;
  cfg.training.max_epochs = 1;
  const auto dir = fresh_dir("grid_smoke");
  const auto result = harness::grid_search_weights(cfg, 0.5, dir);
  EXPECT_EQ(result.points.size(), 26u);  // enumeration oracle: 3^3 - 1
  EXPECT_LT(result.best_index, result.points.size());
  EXPECT_TRUE(fs::exists(result.table_path));
  for (const auto& p : result.points)
    EXPECT_GE(result.points[result.best_index].combined, p.combined);
  fs::remove_all(dir);
}

TEST(Grid, UnevenStepRejected) {
  const auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  EXPECT_THROW(
      harness::grid_search_weights(cfg, 0.3, fresh_dir("grid_bad")),
      ConfigError);
}

TEST(Ablation, RequiresEnoughExperts) {
  auto cfg = harness::experiment_config_from_ini(
      harness::IniFile::parse_text(tiny_experiment_ini()));
  cfg.model.mmoe.num_experts = 4;
  EXPECT_THROW(harness::run_ablation(cfg, fresh_dir("abl_bad")), ConfigError);
}
