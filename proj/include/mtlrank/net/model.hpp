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

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlrank/data/embedding.hpp"
#include "mtlrank/data/encode.hpp"
#include "mtlrank/data/schema.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/net/dcn.hpp"
#include "mtlrank/net/ftt.hpp"
#include "mtlrank/net/mmoe.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"
#include "mtlrank/text/encoder.hpp"

namespace mtlrank::net {

enum class BottomKind { dcn, ftt };
enum class MatchingMode { cross, dot, off };

inline const char* bottom_name(BottomKind b) {
  return b == BottomKind::dcn ? "dcn" : "ftt";
}
inline BottomKind bottom_from_name(const std::string& s) {
  if (s == "dcn") return BottomKind::dcn;
  if (s == "ftt") return BottomKind::ftt;
  throw ConfigError("unknown bottom '" + s + "' (expected dcn or ftt)");
}
inline const char* matching_name(MatchingMode m) {
  switch (m) {
    case MatchingMode::cross: return "cross";
    case MatchingMode::dot: return "dot";
    case MatchingMode::off: return "off";
  }
  throw ContractError("unknown matching mode");
}
inline MatchingMode matching_from_name(const std::string& s) {
  if (s == "cross") return MatchingMode::cross;
  if (s == "dot") return MatchingMode::dot;
  if (s == "off") return MatchingMode::off;
  throw ConfigError("unknown matching mode '" + s + "'");
}

struct ModelConfig {
  BottomKind bottom = BottomKind::dcn;
  MatchingMode matching = MatchingMode::cross;
  DcnConfig dcn;
  FttConfig ftt;
  MmoeConfig mmoe;
  text::TextEncoderConfig text;
  std::uint64_t seed = 42;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["bottom"] = bottom_name(bottom);
    j["matching"] = matching_name(matching);
    j["seed"] = seed;
    j["dcn"] = {{"cross_layers", dcn.cross_layers}, {"deep_widths", dcn.deep_widths}};
    j["ftt"] = {{"dim", ftt.dim},
                {"layers", ftt.layers},
                {"heads", ftt.heads},
                {"ff_dim", ftt.ff_dim},
                {"output_dim", ftt.output_dim}};
    std::vector<std::string> task_names;
    for (const Task t : mmoe.tasks) task_names.emplace_back(task_name(t));
    j["mmoe"] = {{"num_experts", mmoe.num_experts},
                 {"expert_widths", mmoe.expert_widths},
                 {"tower_widths", mmoe.tower_widths},
                 {"tasks", task_names},
                 {"weights", mmoe.weights},
                 {"relevance_classes", mmoe.relevance_classes}};
    j["text"] = {{"layers", text.layers},
                 {"dim", text.dim},
                 {"heads", text.heads},
                 {"ff_dim", text.ff_dim},
                 {"max_seq_len", text.max_seq_len},
                 {"trainable_layers", text.trainable_layers}};
    return j;
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.bottom = bottom_from_name(j.at("bottom").get<std::string>());
    c.matching = matching_from_name(j.at("matching").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& jd = j.at("dcn");
    c.dcn.cross_layers = jd.at("cross_layers").get<std::size_t>();
    c.dcn.deep_widths = jd.at("deep_widths").get<std::vector<std::size_t>>();
    const auto& jf = j.at("ftt");
    c.ftt.dim = jf.at("dim").get<std::size_t>();
    c.ftt.layers = jf.at("layers").get<std::size_t>();
    c.ftt.heads = jf.at("heads").get<std::size_t>();
    c.ftt.ff_dim = jf.at("ff_dim").get<std::size_t>();
    c.ftt.output_dim = jf.at("output_dim").get<std::size_t>();
    const auto& jm = j.at("mmoe");
    c.mmoe.num_experts = jm.at("num_experts").get<std::size_t>();
    c.mmoe.expert_widths = jm.at("expert_widths").get<std::vector<std::size_t>>();
    c.mmoe.tower_widths = jm.at("tower_widths").get<std::vector<std::size_t>>();
    c.mmoe.tasks.clear();
    for (const auto& name : jm.at("tasks"))
      c.mmoe.tasks.push_back(task_from_name(name.get<std::string>()));
    c.mmoe.weights = jm.at("weights").get<std::vector<double>>();
    c.mmoe.relevance_classes = jm.at("relevance_classes").get<std::size_t>();
    const auto& jt = j.at("text");
    c.text.layers = jt.at("layers").get<std::size_t>();
    c.text.dim = jt.at("dim").get<std::size_t>();
    c.text.heads = jt.at("heads").get<std::size_t>();
    c.text.ff_dim = jt.at("ff_dim").get<std::size_t>();
    c.text.max_seq_len = jt.at("max_seq_len").get<std::size_t>();
    c.text.trainable_layers = jt.at("trainable_layers").get<std::size_t>();
    return c;
  }
};

struct Prediction {
  std::map<Task, double> probabilities;  // binary tasks
  std::vector<double> relevance_logits;  // empty unless the task is active
};

/// The full multi-task ranker: categorical embeddings, optional text
/// matching, a DCN or FT-T shared bottom, and MMoE gates/experts/towers.
/// A constructed model owns every learnable tensor through its registry;
/// training mutates them under exclusive access, scoring is const.
class MtlModel {
 public:
  MtlModel(const ModelConfig& cfg, const data::FeatureSchema& schema,
           std::size_t vocab_size)
      : cfg_(cfg), schema_(schema), reg_(cfg.seed) {
    cfg_.mmoe.validate();
    schema_.validate();
    if (uses_text()) {
      cfg_.text.validate();
      encoder_.emplace(cfg_.text, vocab_size, reg_, "text");
    }
    embeddings_ = std::make_unique<data::EmbeddingBank>(schema_, reg_);

    matching_len_ = cfg_.matching == MatchingMode::cross  ? cfg_.text.dim
                    : cfg_.matching == MatchingMode::dot ? 1
                                                         : 0;
    unmasked_interactions_ = 0;
    for (const auto& f : schema_.interaction)
      if (!f.masked) ++unmasked_interactions_;

    if (cfg_.bottom == BottomKind::dcn) {
      x0_dim_ = schema_.continuous.size() + matching_len_ +
                schema_.interaction.size() + schema_.embedding_total();
      dcn_ = make_dcn(reg_, "dcn", x0_dim_, cfg_.dcn);
      x_final_dim_ = x0_dim_ + cfg_.dcn.deep_widths.back();
    } else {
      cfg_.ftt.validate();
      for (const auto& f : schema_.categorical) {
        if (f.embed_dim != cfg_.ftt.dim)
          throw ConfigError("ftt bottom: embedding dim of '" + f.name +
                            "' is " + std::to_string(f.embed_dim) +
                            ", token dim is " + std::to_string(cfg_.ftt.dim));
      }
      const std::size_t numeric = schema_.continuous.size() + unmasked_interactions_;
      ftt_ = make_ftt(reg_, "ftt", numeric, matching_len_, cfg_.ftt);
      x0_dim_ = 0;  // token model; no flat x0
      x_final_dim_ = cfg_.ftt.output_dim;
    }
    mmoe_ = make_mmoe(reg_, "mmoe", x_final_dim_, cfg_.mmoe);
  }

  const ModelConfig& config() const { return cfg_; }
  const data::FeatureSchema& schema() const { return schema_; }
  num::ParamRegistry& params() { return reg_; }
  const num::ParamRegistry& params() const { return reg_; }
  std::size_t x0_dim() const { return x0_dim_; }
  std::size_t x_final_dim() const { return x_final_dim_; }
  bool uses_text() const { return cfg_.matching != MatchingMode::off; }
  const text::TextEncoder* encoder() const {
    return encoder_ ? &*encoder_ : nullptr;
  }

  /// Forward pass for one example; returns one output tensor per active
  /// task (sigmoid probability for binary tasks, logits for relevance).
  std::vector<std::pair<Task, num::TensorPtr>> forward(
      Graph& g, const data::EncodedExample& ex) const {
    check_example(ex);
    num::TensorPtr matching = matching_tensor(g, ex);
    num::TensorPtr x_final = cfg_.bottom == BottomKind::dcn
                                 ? dcn_bottom(g, ex, matching)
                                 : ftt_bottom(g, ex, matching);
    const auto expert_outs = expert_forward_all(g, mmoe_, x_final);
    const auto stacked = g.stack_rows(expert_outs);
    std::vector<std::pair<Task, num::TensorPtr>> outputs;
    outputs.reserve(cfg_.mmoe.tasks.size());
    for (std::size_t i = 0; i < cfg_.mmoe.tasks.size(); ++i) {
      const Task t = cfg_.mmoe.tasks[i];
      auto gate = gate_forward(g, mmoe_.gate_w[i], x_final);
      auto mixed = mix_experts(g, stacked, gate);
      outputs.emplace_back(t, tower_forward(g, mmoe_.towers[i], mixed, t));
    }
    return outputs;
  }

  /// Weighted multi-task loss for one example. Tasks with zero weight are
  /// skipped outright, so their exclusive parameters receive no gradient.
  /// Relevance contributes only when the example carries a class.
  num::TensorPtr loss(Graph& g, const data::EncodedExample& ex) const {
    const auto outputs = forward(g, ex);
    num::TensorPtr total;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const double alpha = cfg_.mmoe.weights[i];
      if (alpha == 0.0) continue;
      const auto& [t, out] = outputs[i];
      num::TensorPtr term;
      if (t == Task::relevance) {
        if (ex.relevance_class < 0) continue;
        term = g.categorical_ce(out, static_cast<std::size_t>(ex.relevance_class));
      } else {
        term = g.bce(out, label_for(ex, t));
      }
      term = g.scale(term, alpha);
      total = total ? g.add(total, term) : term;
    }
    if (!total) total = num::Tensor::scalar(0.0);
    return total;
  }

  num::TensorPtr batch_loss(Graph& g,
                            std::span<const data::EncodedExample> batch) const {
    if (batch.empty()) throw ContractError("batch_loss: empty batch");
    num::TensorPtr total;
    for (const auto& ex : batch) {
      auto l = loss(g, ex);
      total = total ? g.add(total, l) : l;
    }
    return g.scale(total, 1.0 / static_cast<double>(batch.size()));
  }

  /// Pure scoring: no recording, no state mutation.
  Prediction predict(const data::EncodedExample& ex) const {
    Graph g(/*grad_enabled=*/false);
    const auto outputs = forward(g, ex);
    Prediction pred;
    for (const auto& [t, out] : outputs) {
      if (t == Task::relevance) {
        pred.relevance_logits = out->data;
      } else {
        pred.probabilities[t] = out->data[0];
      }
    }
    return pred;
  }

  double predict_probability(const data::EncodedExample& ex, Task t) const {
    const auto pred = predict(ex);
    const auto it = pred.probabilities.find(t);
    if (it == pred.probabilities.end())
      throw ConfigError(std::string("task ") + task_name(t) + " not active");
    return it->second;
  }

  std::vector<Prediction> predict_batch(
      std::span<const data::EncodedExample> batch) const {
    std::vector<Prediction> out;
    out.reserve(batch.size());
    for (const auto& ex : batch) out.push_back(predict(ex));
    return out;
  }

  std::size_t census() const { return reg_.census(); }
  std::size_t trainable_census() const { return reg_.trainable_census(); }

  /// Independent census: walks the typed parameter structs instead of the
  /// registry and sums element counts.
  std::size_t structural_parameter_count() const {
    std::vector<num::TensorPtr> seen;
    auto take = [&seen](const num::TensorPtr& t) {
      if (t) seen.push_back(t);
    };
    for (std::size_t i = 0; i < embeddings_->count(); ++i)
      take(embeddings_->table(i));
    if (encoder_) {
      take(encoder_->token_table());
      take(reg_.find("text.positions"));
      for (const auto& b : encoder_->blocks()) take_block(take, b);
    }
    if (cfg_.bottom == BottomKind::dcn) {
      for (const auto& w : dcn_.cross_w) take(w);
      for (const auto& b : dcn_.cross_b) take(b);
      take_mlp(take, dcn_.deep);
    } else {
      take(ftt_.cls);
      for (const auto& w : ftt_.num_w) take(w);
      for (const auto& b : ftt_.num_b) take(b);
      take(ftt_.match_w);
      take(ftt_.match_b);
      for (const auto& b : ftt_.blocks) take_block(take, b);
      take(ftt_.out_ln_gain);
      take(ftt_.out_ln_bias);
      take(ftt_.out_w);
      take(ftt_.out_b);
    }
    for (const auto& w : mmoe_.gate_w) take(w);
    for (const auto& e : mmoe_.experts) take_mlp(take, e);
    for (const auto& t : mmoe_.towers) take_mlp(take, t);
    std::size_t total = 0;
    for (const auto& t : seen) total += t->numel();
    return total;
  }

 private:
  template <class Fn>
  static void take_mlp(Fn&& take, const MlpParams& m) {
    for (const auto& w : m.weights) take(w);
    for (const auto& b : m.biases) take(b);
  }
  template <class Fn>
  static void take_block(Fn&& take, const TransformerBlockParams& b) {
    for (const auto& t : {b.ln1_gain, b.ln1_bias, b.wq, b.bq, b.wk, b.bk, b.wv,
                          b.bv, b.wo, b.bo, b.ln2_gain, b.ln2_bias, b.ffn_w1,
                          b.ffn_b1, b.ffn_w2, b.ffn_b2})
      take(t);
  }

  static double label_for(const data::EncodedExample& ex, Task t) {
    switch (t) {
      case Task::click: return ex.y_click;
      case Task::atc: return ex.y_atc;
      case Task::trx: return ex.y_trx;
      default: throw ContractError("label_for: relevance has no binary label");
    }
  }

  void check_example(const data::EncodedExample& ex) const {
    if (ex.categorical.size() != schema_.categorical.size() ||
        ex.continuous.size() != schema_.continuous.size() ||
        ex.interaction.size() != schema_.interaction.size())
      throw ConfigError("example does not match the training schema");
  }

  num::TensorPtr matching_tensor(Graph& g, const data::EncodedExample& ex) const {
    if (cfg_.matching == MatchingMode::off) return nullptr;
    auto lq = encoder_->encode(g, ex.query_tokens);
    auto lp = encoder_->encode(g, ex.product_tokens);
    return cfg_.matching == MatchingMode::cross ? text::match_cross(g, lq, lp)
                                                : text::match_dot(g, lq, lp);
  }

  num::TensorPtr dcn_bottom(Graph& g, const data::EncodedExample& ex,
                            const num::TensorPtr& matching) const {
    std::vector<num::TensorPtr> parts;
    if (!ex.continuous.empty())
      parts.push_back(num::Tensor::vector(ex.continuous));
    if (matching) parts.push_back(matching);
    if (!ex.interaction.empty())
      parts.push_back(num::Tensor::vector(ex.interaction));
    for (std::size_t i = 0; i < ex.categorical.size(); ++i)
      parts.push_back(embeddings_->embed(g, i, ex.categorical[i]));
    auto x0 = g.concat(parts);
    if (x0->numel() != x0_dim_)
      throw DimensionError("x0 length " + std::to_string(x0->numel()) +
                           " does not match schema-derived " +
                           std::to_string(x0_dim_));
    return dcn_forward(g, dcn_, x0);
  }

  num::TensorPtr ftt_bottom(Graph& g, const data::EncodedExample& ex,
                            const num::TensorPtr& matching) const {
    std::vector<double> numeric = ex.continuous;
    for (std::size_t i = 0; i < schema_.interaction.size(); ++i)
      if (!schema_.interaction[i].masked) numeric.push_back(ex.interaction[i]);
    std::vector<num::TensorPtr> cat_tokens;
    cat_tokens.reserve(ex.categorical.size());
    for (std::size_t i = 0; i < ex.categorical.size(); ++i)
      cat_tokens.push_back(embeddings_->embed(g, i, ex.categorical[i]));
    return ftt_forward(g, ftt_, cfg_.ftt, numeric, cat_tokens, matching);
  }

  ModelConfig cfg_;
  data::FeatureSchema schema_;
  num::ParamRegistry reg_;
  std::optional<text::TextEncoder> encoder_;
  std::unique_ptr<data::EmbeddingBank> embeddings_;
  DcnParams dcn_;
  FttParams ftt_;
  MmoeParams mmoe_;
  std::size_t x0_dim_ = 0;
  std::size_t x_final_dim_ = 0;
  std::size_t matching_len_ = 0;
  std::size_t unmasked_interactions_ = 0;
};

}  // namespace mtlrank::net
