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
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlrank/data/records.hpp"
#include "mtlrank/data/schema.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/text/semantic.hpp"
#include "mtlrank/text/vocab.hpp"

namespace mtlrank::data {

/// Schema-resolved inputs for one impression, ready for the network.
struct EncodedExample {
  std::vector<std::size_t> categorical;  // index per schema categorical slot
  std::vector<double> continuous;        // standardized, schema order
  std::vector<double> interaction;       // schema order, masks applied
  std::vector<int> query_tokens;
  std::vector<int> product_tokens;
  double y_click = 0, y_atc = 0, y_trx = 0;
  int relevance_class = -1;
  std::string query_id, product_id, customer_id;
  int position = 1;

  bool operator==(const EncodedExample&) const = default;
};

/// Historical per-(query, product) click rate from the training split.
/// Unseen pairs read as 0 (cold start). For rows that themselves contributed
/// to the statistic, ctr_excluding subtracts the row's own click
/// (leave-one-out), so the feature never leaks the label it is used to
/// predict.
class CtrLookup {
 public:
  CtrLookup() = default;

  static CtrLookup from_train(const Dataset& train) {
    CtrLookup lk;
    for (const auto& im : train.impressions) {
      auto& c = lk.counts_[key(im.query_id, im.product_id)];
      ++c.impressions;
      c.clicks += static_cast<std::size_t>(im.y_click);
    }
    return lk;
  }

  double ctr(const std::string& query_id, const std::string& product_id) const {
    const auto it = counts_.find(key(query_id, product_id));
    if (it == counts_.end()) return 0.0;
    return static_cast<double>(it->second.clicks) /
           static_cast<double>(it->second.impressions);
  }

  double ctr_excluding(const std::string& query_id, const std::string& product_id,
                       int own_click) const {
    const auto it = counts_.find(key(query_id, product_id));
    if (it == counts_.end() || it->second.impressions <= 1) return 0.0;
    return static_cast<double>(it->second.clicks -
                               static_cast<std::size_t>(own_click)) /
           static_cast<double>(it->second.impressions - 1);
  }

 private:
  struct Counts {
    std::size_t impressions = 0, clicks = 0;
  };
  static std::string key(const std::string& q, const std::string& p) {
    return q + '\x1f' + p;
  }
  std::unordered_map<std::string, Counts> counts_;
};

/// |shared unique tokens| / |unique query tokens|; 0 for an empty query.
inline double title_overlap(const std::string& query_text,
                            const std::string& title) {
  const auto q = text::word_tokens(query_text);
  if (q.empty()) return 0.0;
  const std::set<std::string> qset(q.begin(), q.end());
  const auto t = text::word_tokens(title);
  const std::set<std::string> tset(t.begin(), t.end());
  std::size_t shared = 0;
  for (const auto& tok : qset) shared += tset.count(tok);
  return static_cast<double>(shared) / static_cast<double>(qset.size());
}

/// Interaction vector in schema order. Masked slots emit 0.0. When `self`
/// names an impression that fed the CTR statistic, its own click is left
/// out of the slot value.
inline std::vector<double> build_interaction_features(
    const QueryRecord& q, const ProductRecord& p, const CtrLookup& ctr,
    const text::SemanticScorer& scorer, const FeatureSchema& schema,
    const ImpressionRecord* self = nullptr) {
  std::vector<double> out;
  out.reserve(schema.interaction.size());
  for (const auto& f : schema.interaction) {
    double v = 0.0;
    if (!f.masked) {
      if (f.name == kQueryItemCtr) {
        v = self ? ctr.ctr_excluding(q.query_id, p.product_id, self->y_click)
                 : ctr.ctr(q.query_id, p.product_id);
      } else if (f.name == kTitleOverlap) {
        v = title_overlap(q.text, p.title);
      } else if (f.name == kSemanticScore) {
        v = scorer.score(q.text, p);
      } else {
        throw ConfigError("unknown interaction feature '" + f.name + "'");
      }
    }
    out.push_back(v);
  }
  return out;
}

/// Deterministic, pure encoding of one impression against a fixed schema.
/// Unknown categorical values resolve to UNKNOWN (index 0); continuous
/// features are standardized with the train-split statistics stored in the
/// schema; numeric features absent from a record read as the training mean.
inline EncodedExample encode_example(const ImpressionRecord& im,
                                     const Dataset& ds,
                                     const FeatureSchema& schema,
                                     const CtrLookup& ctr,
                                     const text::SemanticScorer& scorer,
                                     const text::Vocabulary& vocab,
                                     std::size_t max_seq_len,
                                     bool in_ctr_history = false) {
  const auto& q = ds.query(im.query_id);
  const auto& p = ds.product(im.product_id);
  const auto& c = ds.customer(im.customer_id);

  std::map<std::string, std::string> cat_values;
  for_each_categorical(p, c, [&](const std::string& name, const std::string& v) {
    cat_values[name] = v;
  });
  std::map<std::string, double> num_values;
  for_each_numeric(p, c, [&](const std::string& name, double v) {
    num_values[name] = v;
  });

  EncodedExample ex;
  ex.query_id = im.query_id;
  ex.product_id = im.product_id;
  ex.customer_id = im.customer_id;
  ex.position = im.position;
  ex.y_click = im.y_click;
  ex.y_atc = im.y_atc;
  ex.y_trx = im.y_trx;
  ex.relevance_class = im.relevance_class;

  ex.categorical.reserve(schema.categorical.size());
  for (std::size_t i = 0; i < schema.categorical.size(); ++i) {
    const auto& f = schema.categorical[i];
    const auto it = cat_values.find(f.name);
    ex.categorical.push_back(it == cat_values.end() ? 0 : f.lookup(it->second));
  }
  ex.continuous.reserve(schema.continuous.size());
  for (std::size_t i = 0; i < schema.continuous.size(); ++i) {
    const auto& f = schema.continuous[i];
    const auto it = num_values.find(f.name);
    ex.continuous.push_back(it == num_values.end() ? 0.0
                                                   : schema.standardize(i, it->second));
  }
  ex.interaction = build_interaction_features(q, p, ctr, scorer, schema,
                                              in_ctr_history ? &im : nullptr);
  ex.query_tokens = text::tokenize(q.text, vocab, max_seq_len);
  ex.product_tokens = text::tokenize(p.document(), vocab, max_seq_len);
  return ex;
}

/// in_ctr_history marks impressions that themselves fed the CTR statistics
/// (the training split): their CTR slot is computed leave-one-out.
inline std::vector<EncodedExample> encode_dataset(
    const std::vector<ImpressionRecord>& impressions, const Dataset& ds,
    const FeatureSchema& schema, const CtrLookup& ctr,
    const text::SemanticScorer& scorer, const text::Vocabulary& vocab,
    std::size_t max_seq_len, bool in_ctr_history = false) {
  std::vector<EncodedExample> out;
  out.reserve(impressions.size());
  for (const auto& im : impressions)
    out.push_back(encode_example(im, ds, schema, ctr, scorer, vocab, max_seq_len,
                                 in_ctr_history));
  return out;
}

}  // namespace mtlrank::data
