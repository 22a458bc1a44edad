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

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/log.hpp"
#include "mtlrank/net/model.hpp"
#include "mtlrank/net/train.hpp"
#include "mtlrank/pipeline/labeling.hpp"
#include "mtlrank/pipeline/sampling.hpp"
#include "mtlrank/harness/synthetic.hpp"
#include "mtlrank/text/semantic.hpp"

namespace mtlrank::harness {

/// Minimal declarative config format: [section] headers, key = value lines,
/// full-line # comments. Values are free text; list values are
/// comma-separated.
class IniFile {
 public:
  static IniFile parse_text(const std::string& text) {
    IniFile ini;
    ini.raw_ = text;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": unterminated section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty key");
      ini.values_[section + "." + key] = value;
    }
    return ini;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
  }

  const std::string& raw_text() const { return raw_; }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    consumed_.insert(it->first);
    return it->second;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    consumed_.insert(it->first);
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + it->first + "': expected a number, got '" +
                        it->second + "'");
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    consumed_.insert(it->first);
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + it->first +
                        "': expected an integer, got '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    consumed_.insert(it->first);
    if (it->second == "true" || it->second == "1" || it->second == "on")
      return true;
    if (it->second == "false" || it->second == "0" || it->second == "off")
      return false;
    throw ConfigError("config key '" + it->first + "': expected a boolean");
  }

  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      std::vector<double> fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    consumed_.insert(it->first);
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(trim(item)));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + it->first + "': bad list entry '" +
                          item + "'");
      }
    }
    return out;
  }

  std::vector<std::size_t> get_size_list(const std::string& section,
                                         const std::string& key,
                                         std::vector<std::size_t> fallback) const {
    const auto doubles = get_double_list(section, key, {});
    if (doubles.empty() && !has(section, key)) return fallback;
    std::vector<std::size_t> out;
    for (const double d : doubles) out.push_back(static_cast<std::size_t>(d));
    return out;
  }

  void warn_unused() const {
    for (const auto& [key, _] : values_)
      if (!consumed_.count(key)) warn("config key '" + key + "' is not recognized");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string raw_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

struct SplitConfig {
  double train_frac = 0.8;
  double valid_frac = 0.1;
  std::uint64_t seed = 17;

  void validate() const {
    if (train_frac <= 0 || valid_frac <= 0 || train_frac + valid_frac >= 1.0)
      throw ConfigError("split: fractions must be positive with test > 0");
  }
};

struct MetricConfig {
  std::size_t mrr_k = 1;
  std::size_t pd_k = 10;
  std::size_t pd_samples = 200;
  net::Task task = net::Task::click;
  // Per-task MRR ranks by that task's own probability; the combined option
  // ranks every task by the task-weighted sum of probabilities instead.
  bool combined_ranking = false;
  std::uint64_t seed = 101;
};

/// Everything one experiment needs, parsed from a single config file. The
/// raw file text is retained and checked into the output directory verbatim.
struct ExperimentConfig {
  std::string name = "experiment";
  std::string impressions_path;  // empty: generate a synthetic world
  SyntheticWorldConfig world;
  bool sampling_enabled = true;
  pipeline::SamplingConfig sampling;
  bool relevance_task = false;
  double relevance_weight = 0.2;
  pipeline::RelevanceConfig relevance;
  bool semantic_enabled = true;
  text::SemanticScorerConfig semantic;
  net::ModelConfig model;
  std::size_t embed_dim = 16;
  std::size_t max_vocab = 8192;
  net::TrainConfig training;
  std::size_t grid_epochs = 3;
  SplitConfig split;
  MetricConfig metrics;
  std::string raw_text;

  bool synthetic() const { return impressions_path.empty(); }

  void validate() const {
    world.validate();
    sampling.validate();
    relevance.validate();
    semantic.validate();
    training.validate();
    split.validate();
    model.mmoe.validate();
    if (model.bottom == net::BottomKind::ftt && embed_dim != model.ftt.dim)
      throw ConfigError("ftt bottom requires embed_dim == ftt dim");
  }
};

inline ExperimentConfig experiment_config_from_ini(const IniFile& ini) {
  ExperimentConfig cfg;
  cfg.raw_text = ini.raw_text();
  cfg.name = ini.get_string("experiment", "name", cfg.name);

  cfg.impressions_path = ini.get_string("data", "impressions", "");

  auto& w = cfg.world;
  w.queries = ini.get_u64("world", "queries", w.queries);
  w.products = ini.get_u64("world", "products", w.products);
  w.customers = ini.get_u64("world", "customers", w.customers);
  w.categories = ini.get_u64("world", "categories", w.categories);
  w.latent_dim = ini.get_u64("world", "latent_dim", w.latent_dim);
  w.position_bias = ini.get_double("world", "position_bias", w.position_bias);
  w.click_rate = ini.get_double("world", "click_rate", w.click_rate);
  w.atc_rate = ini.get_double("world", "atc_rate", w.atc_rate);
  w.trx_rate = ini.get_double("world", "trx_rate", w.trx_rate);
  w.title_vocab = ini.get_u64("world", "title_vocab", w.title_vocab);
  w.session_size = ini.get_u64("world", "session_size", w.session_size);
  w.impressions = ini.get_u64("world", "impressions", w.impressions);
  w.seed = ini.get_u64("world", "seed", w.seed);

  cfg.sampling_enabled = ini.get_bool("sampling", "enabled", cfg.sampling_enabled);
  cfg.sampling.bins_per_category =
      ini.get_u64("sampling", "bins", cfg.sampling.bins_per_category);
  cfg.sampling.beta = ini.get_double("sampling", "beta", cfg.sampling.beta);
  cfg.sampling.alpha_pos =
      ini.get_double("sampling", "alpha_pos", cfg.sampling.alpha_pos);
  cfg.sampling.seed = ini.get_u64("sampling", "seed", cfg.sampling.seed);

  cfg.relevance_task = ini.get_bool("relevance", "task", cfg.relevance_task);
  cfg.relevance_weight = ini.get_double("relevance", "weight", cfg.relevance_weight);
  cfg.relevance.alpha = ini.get_double("relevance", "alpha", cfg.relevance.alpha);
  cfg.relevance.classes =
      ini.get_u64("relevance", "classes", cfg.relevance.classes);
  cfg.relevance.per_event =
      ini.get_bool("relevance", "per_event", cfg.relevance.per_event);

  cfg.semantic_enabled = ini.get_bool("semantic", "enabled", cfg.semantic_enabled);
  const std::string variant = ini.get_string("semantic", "variant", "hash_ngram");
  if (variant == "hash_ngram") {
    cfg.semantic.variant = text::SemanticScorerConfig::Variant::hash_ngram;
  } else if (variant == "encoder_cosine") {
    cfg.semantic.variant = text::SemanticScorerConfig::Variant::encoder_cosine;
  } else {
    throw ConfigError("semantic.variant must be hash_ngram or encoder_cosine");
  }
  cfg.semantic.ngram = ini.get_u64("semantic", "ngram", cfg.semantic.ngram);
  cfg.semantic.hash_dim = ini.get_u64("semantic", "hash_dim", cfg.semantic.hash_dim);

  auto& m = cfg.model;
  m.bottom = net::bottom_from_name(ini.get_string("model", "bottom", "dcn"));
  m.matching = net::matching_from_name(ini.get_string("model", "matching", "cross"));
  m.seed = ini.get_u64("model", "seed", m.seed);
  m.dcn.cross_layers = ini.get_u64("model", "cross_layers", m.dcn.cross_layers);
  m.dcn.deep_widths = ini.get_size_list("model", "deep_widths", m.dcn.deep_widths);
  m.ftt.dim = ini.get_u64("model", "ftt_dim", m.ftt.dim);
  m.ftt.layers = ini.get_u64("model", "ftt_layers", m.ftt.layers);
  m.ftt.heads = ini.get_u64("model", "ftt_heads", m.ftt.heads);
  m.ftt.ff_dim = ini.get_u64("model", "ftt_ff_dim", m.ftt.ff_dim);
  m.ftt.output_dim = ini.get_u64("model", "ftt_output_dim", m.ftt.output_dim);
  m.mmoe.num_experts = ini.get_u64("model", "experts", m.mmoe.num_experts);
  m.mmoe.expert_widths =
      ini.get_size_list("model", "expert_widths", m.mmoe.expert_widths);
  m.mmoe.tower_widths =
      ini.get_size_list("model", "tower_widths", m.mmoe.tower_widths);
  m.mmoe.relevance_classes = cfg.relevance.classes;
  cfg.embed_dim = ini.get_u64("model", "embed_dim", cfg.embed_dim);

  m.mmoe.tasks = {net::Task::click, net::Task::atc, net::Task::trx};
  auto weights = ini.get_double_list("model", "weights", {0.4, 0.3, 0.3});
  if (cfg.relevance_task) {
    m.mmoe.tasks.push_back(net::Task::relevance);
    if (weights.size() == 3) weights.push_back(cfg.relevance_weight);
  }
  if (weights.size() != m.mmoe.tasks.size())
    throw ConfigError("model.weights must provide one weight per task");
  m.mmoe.weights = weights;

  auto& t = m.text;
  t.layers = ini.get_u64("text", "layers", t.layers);
  t.dim = ini.get_u64("text", "dim", t.dim);
  t.heads = ini.get_u64("text", "heads", t.heads);
  t.ff_dim = ini.get_u64("text", "ff_dim", t.ff_dim);
  t.max_seq_len = ini.get_u64("text", "max_len", t.max_seq_len);
  t.trainable_layers = ini.get_u64("text", "trainable_layers", t.trainable_layers);
  cfg.max_vocab = ini.get_u64("text", "max_vocab", cfg.max_vocab);

  cfg.training.lr = ini.get_double("training", "lr", cfg.training.lr);
  cfg.training.batch_size =
      ini.get_u64("training", "batch", cfg.training.batch_size);
  cfg.training.max_epochs =
      ini.get_u64("training", "epochs", cfg.training.max_epochs);
  cfg.training.patience = ini.get_u64("training", "patience", cfg.training.patience);
  cfg.training.min_delta =
      ini.get_double("training", "min_delta", cfg.training.min_delta);
  cfg.training.seed = ini.get_u64("training", "seed", cfg.training.seed);
  cfg.grid_epochs = ini.get_u64("training", "grid_epochs", cfg.grid_epochs);

  cfg.split.train_frac = ini.get_double("split", "train", cfg.split.train_frac);
  cfg.split.valid_frac = ini.get_double("split", "valid", cfg.split.valid_frac);
  cfg.split.seed = ini.get_u64("split", "seed", cfg.split.seed);

  cfg.metrics.mrr_k = ini.get_u64("metrics", "k", cfg.metrics.mrr_k);
  cfg.metrics.pd_k = ini.get_u64("metrics", "pd_k", cfg.metrics.pd_k);
  cfg.metrics.pd_samples =
      ini.get_u64("metrics", "pd_samples", cfg.metrics.pd_samples);
  cfg.metrics.task =
      net::task_from_name(ini.get_string("metrics", "task", "click"));
  const std::string ranking = ini.get_string("metrics", "ranking", "per_task");
  if (ranking == "combined") {
    cfg.metrics.combined_ranking = true;
  } else if (ranking != "per_task") {
    throw ConfigError("metrics.ranking must be per_task or combined");
  }
  cfg.metrics.seed = ini.get_u64("metrics", "seed", cfg.metrics.seed);

  ini.warn_unused();
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_ini(IniFile::parse_file(path));
}

}  // namespace mtlrank::harness
