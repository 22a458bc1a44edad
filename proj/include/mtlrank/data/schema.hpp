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
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtlrank/data/records.hpp"
#include "mtlrank/errors.hpp"

namespace mtlrank::data {

// Fixed interaction slot names, in schema order.
inline constexpr const char* kQueryItemCtr = "query_item_ctr";
inline constexpr const char* kTitleOverlap = "title_overlap";
inline constexpr const char* kSemanticScore = "semantic_score";

struct CategoricalFeature {
  std::string name;
  bool user_specific = false;
  std::size_t embed_dim = 16;
  // values[i] maps to index i + 1; index 0 is the reserved UNKNOWN/default.
  std::vector<std::string> values;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t vocab_size() const { return values.size() + 1; }

  std::size_t lookup(const std::string& value) const {
    const auto it = index.find(value);
    return it == index.end() ? 0 : it->second;
  }

  void rebuild_index() {
    index.clear();
    for (std::size_t i = 0; i < values.size(); ++i) index[values[i]] = i + 1;
  }
};

struct ContinuousFeature {
  std::string name;
  bool user_specific = false;
  double mean = 0.0;
  double stddev = 1.0;
};

struct InteractionFeature {
  std::string name;
  bool masked = false;
};

/// Resolved feature layout: which categorical/continuous/interaction slots
/// a model consumes, their vocabularies, train-split standardization
/// statistics, and the user-specific flags the personalization metric needs.
/// Immutable after build; encoding never mutates it.
class FeatureSchema {
 public:
  std::vector<CategoricalFeature> categorical;
  std::vector<ContinuousFeature> continuous;
  std::vector<InteractionFeature> interaction;
  std::size_t text_dim = 32;

  void validate() const {
    std::set<std::string> names;
    for (const auto& f : categorical) {
      if (!names.insert(f.name).second)
        throw ConfigError("schema: duplicate feature name '" + f.name + "'");
      if (f.embed_dim < 1)
        throw ConfigError("schema: embed_dim must be >= 1 for '" + f.name + "'");
      if (f.user_specific && f.name.rfind("customer.", 0) != 0)
        throw ConfigError("schema: user-specific flag on non-customer feature '" +
                          f.name + "'");
    }
    for (const auto& f : continuous) {
      if (!names.insert(f.name).second)
        throw ConfigError("schema: duplicate feature name '" + f.name + "'");
      if (f.user_specific && f.name.rfind("customer.", 0) != 0)
        throw ConfigError("schema: user-specific flag on non-customer feature '" +
                          f.name + "'");
    }
    for (const auto& f : interaction) {
      if (!names.insert(f.name).second)
        throw ConfigError("schema: duplicate feature name '" + f.name + "'");
    }
  }

  double standardize(std::size_t feature, double x) const {
    const auto& f = continuous[feature];
    const double sd = f.stddev < 1e-12 ? 1.0 : f.stddev;
    return (x - f.mean) / sd;
  }

  std::size_t embedding_total() const {
    std::size_t n = 0;
    for (const auto& f : categorical) n += f.embed_dim;
    return n;
  }

  bool has_user_specific() const {
    for (const auto& f : categorical)
      if (f.user_specific) return true;
    for (const auto& f : continuous)
      if (f.user_specific) return true;
    return false;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["text_dim"] = text_dim;
    j["categorical"] = nlohmann::json::array();
    for (const auto& f : categorical) {
      j["categorical"].push_back({{"name", f.name},
                                  {"user_specific", f.user_specific},
                                  {"embed_dim", f.embed_dim},
                                  {"values", f.values}});
    }
    j["continuous"] = nlohmann::json::array();
    for (const auto& f : continuous) {
      j["continuous"].push_back({{"name", f.name},
                                 {"user_specific", f.user_specific},
                                 {"mean", f.mean},
                                 {"stddev", f.stddev}});
    }
    j["interaction"] = nlohmann::json::array();
    for (const auto& f : interaction)
      j["interaction"].push_back({{"name", f.name}, {"masked", f.masked}});
    return j;
  }

  static FeatureSchema from_json(const nlohmann::json& j) {
    FeatureSchema s;
    s.text_dim = j.at("text_dim").get<std::size_t>();
    for (const auto& jf : j.at("categorical")) {
      CategoricalFeature f;
      f.name = jf.at("name").get<std::string>();
      f.user_specific = jf.at("user_specific").get<bool>();
      f.embed_dim = jf.at("embed_dim").get<std::size_t>();
      f.values = jf.at("values").get<std::vector<std::string>>();
      f.rebuild_index();
      s.categorical.push_back(std::move(f));
    }
    for (const auto& jf : j.at("continuous")) {
      ContinuousFeature f;
      f.name = jf.at("name").get<std::string>();
      f.user_specific = jf.at("user_specific").get<bool>();
      f.mean = jf.at("mean").get<double>();
      f.stddev = jf.at("stddev").get<double>();
      s.continuous.push_back(std::move(f));
    }
    for (const auto& jf : j.at("interaction")) {
      s.interaction.push_back({jf.at("name").get<std::string>(),
                               jf.at("masked").get<bool>()});
    }
    s.validate();
    return s;
  }

  /// FNV-1a over the canonical JSON dump, used to detect schema drift when
  /// loading checkpoints.
  std::string hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : dump) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
  }
};

// Enumeration of raw feature values for one impression context. The same
// walk feeds both schema building and example encoding, so the two can
// never disagree on names or order.
inline void for_each_categorical(
    const ProductRecord& p, const CustomerRecord& c,
    const std::function<void(const std::string&, const std::string&)>& fn) {
  fn("category", p.category_id);
  fn("brand", p.brand);
  fn("color", p.color);
  fn("age_group", p.age_group);
  for (const auto& [k, v] : p.extra_categorical) fn("product." + k, v);
  for (const auto& [k, v] : c.demographic_categoricals) fn("customer." + k, v);
}

inline void for_each_numeric(
    const ProductRecord& p, const CustomerRecord& c,
    const std::function<void(const std::string&, double)>& fn) {
  fn("price", p.price);
  fn("rating", p.rating);
  for (const auto& [k, v] : p.extra_numeric) fn("product." + k, v);
  for (const auto& [k, v] : c.history_numerics) fn("customer." + k, v);
}

struct SchemaOptions {
  std::size_t embed_dim = 16;
  std::size_t text_dim = 32;
  std::set<std::string> masked_interactions;  // e.g. {"semantic_score"}
};

/// Builds a schema from the training split only: categorical vocabularies,
/// standardization statistics, and the fixed interaction slots. Features are
/// user-specific exactly when they derive from the customer record.
inline FeatureSchema build_schema(const Dataset& train, const SchemaOptions& opt) {
  std::map<std::string, std::set<std::string>> cat_values;
  struct Stat {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Stat> num_stats;

  for (const auto& im : train.impressions) {
    const auto& p = train.product(im.product_id);
    const auto& c = train.customer(im.customer_id);
    for_each_categorical(p, c, [&](const std::string& name, const std::string& v) {
      cat_values[name].insert(v);
    });
    for_each_numeric(p, c, [&](const std::string& name, double v) {
      auto& s = num_stats[name];
      s.sum += v;
      s.sum_sq += v * v;
      ++s.n;
    });
  }

  FeatureSchema schema;
  schema.text_dim = opt.text_dim;
  for (const auto& [name, values] : cat_values) {
    CategoricalFeature f;
    f.name = name;
    f.user_specific = name.rfind("customer.", 0) == 0;
    f.embed_dim = opt.embed_dim;
    f.values.assign(values.begin(), values.end());
    f.rebuild_index();
    schema.categorical.push_back(std::move(f));
  }
  for (const auto& [name, s] : num_stats) {
    ContinuousFeature f;
    f.name = name;
    f.user_specific = name.rfind("customer.", 0) == 0;
    if (s.n > 0) {
      f.mean = s.sum / static_cast<double>(s.n);
      const double var =
          std::max(0.0, s.sum_sq / static_cast<double>(s.n) - f.mean * f.mean);
      f.stddev = std::sqrt(var);
    }
    schema.continuous.push_back(std::move(f));
  }
  for (const char* name : {kQueryItemCtr, kTitleOverlap, kSemanticScore}) {
    schema.interaction.push_back(
        {name, opt.masked_interactions.count(name) > 0});
  }
  schema.validate();
  return schema;
}

}  // namespace mtlrank::data
