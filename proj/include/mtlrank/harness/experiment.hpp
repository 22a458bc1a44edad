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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlrank/data/encode.hpp"
#include "mtlrank/data/jsonl.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/eval/metrics.hpp"
#include "mtlrank/eval/pd.hpp"
#include "mtlrank/harness/config.hpp"
#include "mtlrank/harness/synthetic.hpp"
#include "mtlrank/net/checkpoint.hpp"
#include "mtlrank/net/model.hpp"
#include "mtlrank/net/train.hpp"
#include "mtlrank/pipeline/aggregate.hpp"
#include "mtlrank/pipeline/labeling.hpp"
#include "mtlrank/pipeline/sampling.hpp"

namespace mtlrank::harness {

namespace fs = std::filesystem;

inline std::uint64_t fnv64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Cheap order-sensitive digest of an impression list, for provenance logs.
inline std::string impressions_digest(
    const std::vector<data::ImpressionRecord>& impressions) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& im : impressions) {
    const std::string line = im.query_id + '|' + im.product_id + '|' +
                             im.customer_id + '|' + std::to_string(im.position) +
                             '|' + std::to_string(im.y_click) +
                             std::to_string(im.y_atc) + std::to_string(im.y_trx);
    h = h * 1099511628211ULL + fnv64(line);
  }
  return hex64(h);
}

/// Per-stage run log plus the failure marker contract: a failed run leaves
/// its partial artifacts in place and a `failed` file naming the stage.
class StageLogger {
 public:
  explicit StageLogger(fs::path outdir) : outdir_(std::move(outdir)) {
    fs::create_directories(outdir_);
    log_.open(outdir_ / "run.log", std::ios::app);
  }

  void stage(const std::string& name) {
    current_ = name;
    line("begin");
  }

  void line(const std::string& msg) {
    log_ << "[" << current_ << "] " << msg << "\n";
    log_.flush();
  }

  void fail(const std::string& what) {
    line("FAILED: " + what);
    std::ofstream marker(outdir_ / "failed");
    marker << "stage: " << current_ << "\n" << what << "\n";
  }

  const std::string& current() const { return current_; }
  const fs::path& outdir() const { return outdir_; }

 private:
  fs::path outdir_;
  std::ofstream log_;
  std::string current_ = "init";
};

/// One line of the experiment report. The CSV header is fixed.
struct ReportRow {
  std::string name;
  std::map<net::Task, double> auc;   // absent when undefined (single class)
  std::map<net::Task, double> mrr;
  std::map<net::Task, double> weights;
  double pd = 1.0;
  std::size_t trainable_params = 0;
  std::size_t total_params = 0;
  double wall_seconds = 0.0;

  static std::string csv_header() {
    return "name,auc_click,auc_atc,auc_trx,mrr_click,mrr_atc,mrr_trx,"
           "weight_click,weight_atc,weight_trx,weight_relevance,pd_at_k,"
           "trainable_params,total_params,wall_seconds";
  }

  std::string csv_row() const {
    auto metric = [](const std::map<net::Task, double>& m, net::Task t) {
      const auto it = m.find(t);
      return it == m.end() ? std::string() : std::to_string(it->second);
    };
    std::string row = name;
    for (const net::Task t : {net::Task::click, net::Task::atc, net::Task::trx})
      row += "," + metric(auc, t);
    for (const net::Task t : {net::Task::click, net::Task::atc, net::Task::trx})
      row += "," + metric(mrr, t);
    for (const net::Task t : {net::Task::click, net::Task::atc, net::Task::trx,
                              net::Task::relevance})
      row += "," + metric(weights, t);
    row += "," + std::to_string(pd);
    row += "," + std::to_string(trainable_params);
    row += "," + std::to_string(total_params);
    row += "," + std::to_string(wall_seconds);
    return row;
  }
};

/// Everything the trainer and evaluator need, fully derived from config +
/// seeds.
struct PreparedData {
  data::Dataset dataset;  // full corpus (stores shared by all splits)
  std::vector<data::ImpressionRecord> train_raw, valid_raw, test_raw;
  std::vector<pipeline::BinReport> sample_report;
  std::vector<pipeline::RelevanceLabel> labels;
  data::FeatureSchema schema;
  text::Vocabulary vocab;
  data::CtrLookup ctr;
  text::SemanticScorer scorer;
  std::vector<data::EncodedExample> train, valid, test;
  std::map<std::string, std::size_t> train_product_clicks;  // popularity base
};

namespace detail {

// Queries are hashed into train/valid/test so no query straddles splits;
// ranking metrics then measure generalization to unseen queries.
inline int split_bucket(const SplitConfig& split, const std::string& query_id) {
  const double u =
      static_cast<double>(num::derive_seed(split.seed, query_id) % 1000000u) /
      1000000.0;
  if (u < split.train_frac) return 0;
  if (u < split.train_frac + split.valid_frac) return 1;
  return 2;
}

}  // namespace detail

/// Derives every pipeline artifact from config and seeds. When a schema /
/// vocabulary pair is supplied (evaluating a checkpoint), those are used
/// verbatim instead of being rebuilt, so encodings match training exactly.
inline PreparedData prepare_data(const ExperimentConfig& cfg, StageLogger& log,
                                 const data::FeatureSchema* fixed_schema = nullptr,
                                 const text::Vocabulary* fixed_vocab = nullptr) {
  PreparedData prep;

  log.stage("data");
  if (cfg.synthetic()) {
    auto world = generate_synthetic_logs(cfg.world);
    prep.dataset = std::move(world.dataset);
    data::save_jsonl(prep.dataset, (log.outdir() / "impressions.jsonl").string());
    save_ground_truth(world.ground_truth,
                      (log.outdir() / "ground_truth.jsonl").string());
    log.line("generated synthetic world, seed=" + std::to_string(cfg.world.seed));
  } else {
    prep.dataset = data::load_jsonl(cfg.impressions_path);
    log.line("loaded " + cfg.impressions_path);
  }
  log.line("impressions=" + std::to_string(prep.dataset.impressions.size()) +
           " hash=" + impressions_digest(prep.dataset.impressions));

  log.stage("split");
  for (const auto& im : prep.dataset.impressions) {
    switch (detail::split_bucket(cfg.split, im.query_id)) {
      case 0: prep.train_raw.push_back(im); break;
      case 1: prep.valid_raw.push_back(im); break;
      default: prep.test_raw.push_back(im); break;
    }
  }
  log.line("seed=" + std::to_string(cfg.split.seed) +
           " train=" + std::to_string(prep.train_raw.size()) +
           " valid=" + std::to_string(prep.valid_raw.size()) +
           " test=" + std::to_string(prep.test_raw.size()));
  if (prep.train_raw.empty() || prep.valid_raw.empty() || prep.test_raw.empty())
    throw DataError("a split is empty; need more data or different fractions");

  log.stage("vocab");
  if (fixed_vocab) {
    prep.vocab = *fixed_vocab;
    log.line("using checkpoint vocabulary, size=" +
             std::to_string(prep.vocab.size()));
  } else {
    std::set<std::string> query_ids, product_ids;
    for (const auto& im : prep.train_raw) {
      query_ids.insert(im.query_id);
      product_ids.insert(im.product_id);
    }
    std::vector<std::string> corpus;
    corpus.reserve(query_ids.size() + product_ids.size());
    for (const auto& id : query_ids) corpus.push_back(prep.dataset.query(id).text);
    for (const auto& id : product_ids)
      corpus.push_back(prep.dataset.product(id).document());
    prep.vocab = text::Vocabulary::build(corpus, cfg.max_vocab);
    log.line("size=" + std::to_string(prep.vocab.size()));
  }

  // Historical aggregates come from the full training split: they are the
  // "past" the model may consult. Sampling below only thins the rows the
  // model trains on.
  log.stage("aggregate");
  data::Dataset train_view;
  train_view.queries = prep.dataset.queries;
  train_view.products = prep.dataset.products;
  train_view.customers = prep.dataset.customers;
  train_view.impressions = prep.train_raw;
  prep.ctr = data::CtrLookup::from_train(train_view);
  for (const auto& im : prep.train_raw)
    if (im.y_click == 1) ++prep.train_product_clicks[im.product_id];
  log.line("pairs with history=" + std::to_string(prep.train_raw.size()));

  if (cfg.semantic_enabled || cfg.relevance_task) {
    if (cfg.semantic.variant ==
        text::SemanticScorerConfig::Variant::encoder_cosine) {
      // Embed through a dedicated, seeded stand-in encoder instead of
      // hashed n-grams.
      auto reg = std::make_shared<num::ParamRegistry>(
          num::derive_seed(cfg.model.seed, "semantic.encoder"));
      auto enc = std::make_shared<text::TextEncoder>(
          cfg.model.text, prep.vocab.size(), *reg, "semscorer");
      auto vocab = std::make_shared<text::Vocabulary>(prep.vocab);
      const std::size_t scorer_max_len = cfg.model.text.max_seq_len;
      prep.scorer = text::SemanticScorer(
          cfg.semantic, [reg, enc, vocab, scorer_max_len](const std::string& s) {
            num::Graph g(/*grad_enabled=*/false);
            return enc->encode(g, text::tokenize(s, *vocab, scorer_max_len))
                ->data;
          });
    } else {
      prep.scorer = text::SemanticScorer(cfg.semantic);
    }
  }

  if (cfg.relevance_task) {
    log.stage("label");
    const auto aggregates = pipeline::AggregateMap::build(train_view, &prep.scorer);
    prep.labels = pipeline::generate_relevance_labels(aggregates, cfg.relevance);
    pipeline::save_labels_jsonl(prep.labels,
                                (log.outdir() / "labels.jsonl").string());
    pipeline::apply_relevance_labels(train_view, prep.labels);
    // Mirror the stamped classes back into the raw split rows.
    prep.train_raw = train_view.impressions;
    log.line("labels=" + std::to_string(prep.labels.size()) +
             " classes=" + std::to_string(cfg.relevance.classes));
  }

  if (cfg.sampling_enabled) {
    log.stage("sample");
    auto result = pipeline::stratified_sample(train_view, cfg.sampling);
    prep.sample_report = std::move(result.report);
    pipeline::save_shortfall_csv(prep.sample_report,
                                 (log.outdir() / "shortfall.csv").string());
    log.line("seed=" + std::to_string(cfg.sampling.seed) + " sampled=" +
             std::to_string(result.sampled.size()) + " of " +
             std::to_string(prep.train_raw.size()) +
             " hash=" + impressions_digest(result.sampled));
    prep.train_raw = std::move(result.sampled);
  }

  log.stage("schema");
  if (fixed_schema) {
    prep.schema = *fixed_schema;
    log.line("using checkpoint schema, hash=" + prep.schema.hash());
  } else {
    data::SchemaOptions opt;
    opt.embed_dim = cfg.embed_dim;
    opt.text_dim = cfg.model.text.dim;
    if (!cfg.semantic_enabled) opt.masked_interactions.insert(data::kSemanticScore);
    data::Dataset sampled_view;
    sampled_view.queries = prep.dataset.queries;
    sampled_view.products = prep.dataset.products;
    sampled_view.customers = prep.dataset.customers;
    sampled_view.impressions = prep.train_raw;
    prep.schema = data::build_schema(sampled_view, opt);
    log.line("categorical=" + std::to_string(prep.schema.categorical.size()) +
             " continuous=" + std::to_string(prep.schema.continuous.size()) +
             " hash=" + prep.schema.hash());
  }

  log.stage("encode");
  const std::size_t max_len = cfg.model.text.max_seq_len;
  prep.train = data::encode_dataset(prep.train_raw, prep.dataset, prep.schema,
                                    prep.ctr, prep.scorer, prep.vocab, max_len,
                                    /*in_ctr_history=*/true);
  prep.valid = data::encode_dataset(prep.valid_raw, prep.dataset, prep.schema,
                                    prep.ctr, prep.scorer, prep.vocab, max_len);
  prep.test = data::encode_dataset(prep.test_raw, prep.dataset, prep.schema,
                                   prep.ctr, prep.scorer, prep.vocab, max_len);
  log.line("train=" + std::to_string(prep.train.size()) +
           " valid=" + std::to_string(prep.valid.size()) +
           " test=" + std::to_string(prep.test.size()));
  return prep;
}

struct SessionIndex {
  std::string query_id;
  std::string customer_id;
  std::vector<std::size_t> examples;  // indices into the encoded test set
};

inline std::vector<SessionIndex> index_sessions(
    const std::vector<data::EncodedExample>& examples) {
  std::vector<SessionIndex> sessions;
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const std::string key = ex.query_id + '\x1f' + ex.customer_id;
    const auto it = lookup.find(key);
    if (it == lookup.end()) {
      lookup[key] = sessions.size();
      sessions.push_back({ex.query_id, ex.customer_id, {i}});
    } else {
      sessions[it->second].examples.push_back(i);
    }
  }
  return sessions;
}

inline double task_label(const data::EncodedExample& ex, net::Task t) {
  switch (t) {
    case net::Task::click: return ex.y_click;
    case net::Task::atc: return ex.y_atc;
    case net::Task::trx: return ex.y_trx;
    default: throw ContractError("task_label: no binary label for relevance");
  }
}

/// Session MRR@K under an arbitrary per-example scorer.
inline double session_mrr(
    const std::vector<SessionIndex>& sessions,
    const std::vector<data::EncodedExample>& examples,
    const std::function<double(std::size_t)>& score_of_index, net::Task task,
    std::size_t k) {
  std::vector<std::pair<eval::RankedList, std::set<std::string>>> queries;
  queries.reserve(sessions.size());
  for (const auto& s : sessions) {
    std::vector<std::pair<std::string, double>> scored;
    std::set<std::string> relevant;
    for (const std::size_t i : s.examples) {
      scored.emplace_back(examples[i].product_id, score_of_index(i));
      if (task_label(examples[i], task) == 1.0)
        relevant.insert(examples[i].product_id);
    }
    queries.emplace_back(eval::rank_by_scores(s.query_id, scored),
                         std::move(relevant));
  }
  return eval::mrr_at_k(queries, k);
}

struct ExperimentResult {
  ReportRow row;
  nlohmann::json metrics;
  net::TrainResult train_log;
  fs::path outdir;
};

/// Scores the test split, computes AUC / MRR@K / PD@K plus the reference
/// rankers, and writes metrics.json and report.csv. Timing stays out of
/// metrics.json so a rerun with the same config and seeds reproduces it
/// byte for byte.
inline ExperimentResult evaluate_and_persist(
    net::MtlModel& model, const PreparedData& prep, const ExperimentConfig& cfg,
    StageLogger& log, const net::TrainResult& train_result,
    std::chrono::steady_clock::time_point start) {
  const fs::path outdir = log.outdir();
  log.stage("eval");
  ExperimentResult result;
  result.outdir = outdir;
  result.train_log = train_result;
  result.row.name = cfg.name;
  for (std::size_t i = 0; i < cfg.model.mmoe.tasks.size(); ++i)
    result.row.weights[cfg.model.mmoe.tasks[i]] = cfg.model.mmoe.weights[i];

  const auto preds = model.predict_batch(prep.test);
  nlohmann::json metric_list = nlohmann::json::array();

  const std::vector<net::Task> binary_tasks = {net::Task::click,
                                               net::Task::atc, net::Task::trx};
  for (const net::Task t : binary_tasks) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(prep.test.size());
    for (std::size_t i = 0; i < prep.test.size(); ++i) {
      scores.push_back(preds[i].probabilities.at(t));
      labels.push_back(static_cast<int>(task_label(prep.test[i], t)));
    }
    const auto auc = eval::auc_roc(scores, labels);
    nlohmann::json entry = {{"metric", "auc_roc"},
                            {"task", net::task_name(t)},
                            {"n_points", prep.test.size()}};
    if (auc) {
      result.row.auc[t] = *auc;
      entry["value"] = *auc;
    } else {
      entry["value"] = nullptr;
    }
    metric_list.push_back(entry);
  }

  const auto sessions = index_sessions(prep.test);
  const auto combined_score = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t w = 0; w < cfg.model.mmoe.tasks.size(); ++w) {
      const net::Task t = cfg.model.mmoe.tasks[w];
      if (t == net::Task::relevance) continue;
      s += cfg.model.mmoe.weights[w] * preds[i].probabilities.at(t);
    }
    return s;
  };
  for (const net::Task t : binary_tasks) {
    const double mrr = session_mrr(
        sessions, prep.test,
        [&](std::size_t i) {
          return cfg.metrics.combined_ranking ? combined_score(i)
                                              : preds[i].probabilities.at(t);
        },
        t, cfg.metrics.mrr_k);
    result.row.mrr[t] = mrr;
    metric_list.push_back({{"metric", "mrr"},
                           {"task", net::task_name(t)},
                           {"K", cfg.metrics.mrr_k},
                           {"ranking", cfg.metrics.combined_ranking
                                           ? "combined"
                                           : "per_task"},
                           {"value", mrr},
                           {"n_queries", sessions.size()}});
  }

  // Reference rankers for the directional sanity check: global popularity
  // by training clicks and a seeded random ranker.
  const double popularity_mrr = session_mrr(
      sessions, prep.test,
      [&](std::size_t i) {
        const auto it = prep.train_product_clicks.find(prep.test[i].product_id);
        return it == prep.train_product_clicks.end()
                   ? 0.0
                   : static_cast<double>(it->second);
      },
      cfg.metrics.task, cfg.metrics.mrr_k);
  const double random_mrr = session_mrr(
      sessions, prep.test,
      [&](std::size_t i) {
        return static_cast<double>(num::derive_seed(
                   cfg.metrics.seed,
                   prep.test[i].query_id + '\x1f' + prep.test[i].customer_id +
                       '\x1f' + prep.test[i].product_id) %
               1000000u);
      },
      cfg.metrics.task, cfg.metrics.mrr_k);
  metric_list.push_back({{"metric", "mrr_popularity_baseline"},
                         {"task", net::task_name(cfg.metrics.task)},
                         {"K", cfg.metrics.mrr_k},
                         {"value", popularity_mrr},
                         {"n_queries", sessions.size()}});
  metric_list.push_back({{"metric", "mrr_random_baseline"},
                         {"task", net::task_name(cfg.metrics.task)},
                         {"K", cfg.metrics.mrr_k},
                         {"value", random_mrr},
                         {"n_queries", sessions.size()},
                         {"seed", cfg.metrics.seed}});

  const auto pd_sessions = eval::group_sessions(prep.test);
  const double pd = eval::pd_at_k(
      [&](const data::EncodedExample& ex) {
        return model.predict_probability(ex, cfg.metrics.task);
      },
      pd_sessions, prep.schema, cfg.metrics.pd_k, cfg.metrics.pd_samples,
      cfg.metrics.seed);
  result.row.pd = pd;
  metric_list.push_back({{"metric", "pd"},
                         {"task", net::task_name(cfg.metrics.task)},
                         {"K", cfg.metrics.pd_k},
                         {"value", pd},
                         {"n_queries", std::min<std::size_t>(
                                           cfg.metrics.pd_samples,
                                           pd_sessions.size())},
                         {"seed", cfg.metrics.seed}});

  result.row.trainable_params = model.trainable_census();
  result.row.total_params = model.census();
  if (result.row.total_params != model.structural_parameter_count())
    throw ContractError("parameter census does not reconcile");

  log.stage("persist");
  result.metrics["experiment"] = cfg.name;
  result.metrics["seeds"] = {{"world", cfg.world.seed},
                             {"split", cfg.split.seed},
                             {"sampling", cfg.sampling.seed},
                             {"model", cfg.model.seed},
                             {"training", cfg.training.seed},
                             {"metrics", cfg.metrics.seed}};
  result.metrics["metrics"] = metric_list;
  result.metrics["parameters"] = {{"trainable", result.row.trainable_params},
                                  {"total", result.row.total_params}};
  result.metrics["data"] = {{"train", prep.train.size()},
                            {"valid", prep.valid.size()},
                            {"test", prep.test.size()}};
  result.metrics["training"] = {{"epochs_run", train_result.log.size()},
                                {"best_epoch", train_result.best_epoch},
                                {"best_valid_loss", train_result.best_valid_loss}};
  {
    std::ofstream mj(outdir / "metrics.json");
    mj << result.metrics.dump(2) << "\n";
  }

  result.row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  {
    std::ofstream csv(outdir / "report.csv");
    csv << ReportRow::csv_header() << "\n" << result.row.csv_row() << "\n";
  }
  log.line("done in " + std::to_string(result.row.wall_seconds) + "s");
  return result;
}

/// prepare -> train -> checkpoint. Returns the trained model.
inline std::unique_ptr<net::MtlModel> train_stage(const ExperimentConfig& cfg,
                                                  PreparedData& prep,
                                                  StageLogger& log,
                                                  net::TrainResult& train_result) {
  log.stage("train");
  auto model =
      std::make_unique<net::MtlModel>(cfg.model, prep.schema, prep.vocab.size());
  log.line("seed=" + std::to_string(cfg.model.seed) +
           " parameters=" + std::to_string(model->census()) + " trainable=" +
           std::to_string(model->trainable_census()));
  train_result = net::train_model(*model, prep.train, prep.valid, cfg.training);
  for (const auto& e : train_result.log)
    log.line("epoch " + std::to_string(e.epoch) + " train=" +
             std::to_string(e.train_loss) + " valid=" +
             std::to_string(e.valid_loss));
  if (train_result.diverged) {
    log.line("diverged: " + train_result.diagnostic);
    throw NumericError("training diverged: " + train_result.diagnostic);
  }
  net::save_checkpoint((log.outdir() / "checkpoint.json").string(), *model,
                       prep.vocab);
  return model;
}

/// Full experiment: prepare -> train -> evaluate -> persist. Every stage
/// logs its seed and input hash; a failure leaves partial artifacts behind
/// a `failed` marker naming the stage.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const fs::path& outdir) {
  cfg.validate();
  StageLogger log(outdir);
  const auto start = std::chrono::steady_clock::now();
  try {
    {
      std::ofstream echo(outdir / "config.ini");
      echo << cfg.raw_text;
    }
    PreparedData prep = prepare_data(cfg, log);
    net::TrainResult train_result;
    auto model = train_stage(cfg, prep, log, train_result);
    return evaluate_and_persist(*model, prep, cfg, log, train_result, start);
  } catch (const std::exception& e) {
    log.fail(e.what());
    throw;
  }
}

/// Pipeline through training only; leaves checkpoint.json in the output
/// directory.
inline fs::path train_experiment(const ExperimentConfig& cfg,
                                 const fs::path& outdir) {
  cfg.validate();
  StageLogger log(outdir);
  try {
    {
      std::ofstream echo(outdir / "config.ini");
      echo << cfg.raw_text;
    }
    PreparedData prep = prepare_data(cfg, log);
    net::TrainResult train_result;
    train_stage(cfg, prep, log, train_result);
    return outdir / "checkpoint.json";
  } catch (const std::exception& e) {
    log.fail(e.what());
    throw;
  }
}

/// Rebuilds the data pipeline deterministically from the config, restores
/// the checkpointed model (schema and vocabulary come from the checkpoint),
/// and evaluates.
inline ExperimentResult evaluate_checkpoint(const ExperimentConfig& cfg,
                                            const std::string& checkpoint_path,
                                            const fs::path& outdir) {
  cfg.validate();
  StageLogger log(outdir);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto loaded = net::load_checkpoint(checkpoint_path);
    PreparedData prep =
        prepare_data(cfg, log, &loaded.model->schema(), &loaded.vocab);
    return evaluate_and_persist(*loaded.model, prep, cfg, log,
                                net::TrainResult{}, start);
  } catch (const std::exception& e) {
    log.fail(e.what());
    throw;
  }
}

}  // namespace mtlrank::harness
