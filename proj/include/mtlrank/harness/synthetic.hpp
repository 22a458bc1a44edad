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
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlrank/data/encode.hpp"
#include "mtlrank/data/records.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/numerics/rng.hpp"

namespace mtlrank::harness {

/// Click-log simulator with planted ground truth. Clicks follow a latent
/// affinity model — query-product fit, query-title token overlap, and a
/// customer-product preference term — damped multiplicatively by display
/// position. Customer and product latent coordinates are exposed as numeric
/// features, so a trained model can in principle recover every planted
/// signal. ATC and TRX are conditional on click, enforcing the label
/// hierarchy by construction.
struct SyntheticWorldConfig {
  std::size_t queries = 2000;
  std::size_t products = 5000;
  std::size_t customers = 500;
  std::size_t categories = 10;
  std::size_t latent_dim = 4;
  double position_bias = 0.5;  // click prob scales with pos^(-position_bias)
  double click_rate = 0.2;     // base rates; atc/trx are ceilings under click
  double atc_rate = 0.08;
  double trx_rate = 0.03;
  std::size_t title_vocab = 300;
  std::size_t session_size = 20;  // products shown per (query, customer) visit
  std::size_t impressions = 50000;
  std::uint64_t seed = 7;

  void validate() const {
    if (queries < 1 || products < 1 || customers < 1 || categories < 1)
      throw ConfigError("world: counts must be >= 1");
    for (const double r : {click_rate, atc_rate, trx_rate})
      if (r <= 0.0 || r >= 1.0)
        throw ConfigError("world: rates must lie in (0, 1)");
    if (atc_rate > click_rate || trx_rate > atc_rate)
      throw ConfigError("world: rates must satisfy trx <= atc <= click");
    if (session_size < 2) throw ConfigError("world: session_size must be >= 2");
    if (latent_dim < 1) throw ConfigError("world: latent_dim must be >= 1");
    if (title_vocab < 4 * categories)
      throw ConfigError("world: title_vocab too small for the category count");
  }
};

struct GroundTruthEntry {
  std::string query_id;
  std::vector<std::string> products_by_relevance;  // best first
};

struct SyntheticWorld {
  data::Dataset dataset;
  std::vector<GroundTruthEntry> ground_truth;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::string zero_pad(std::size_t v, std::size_t width) {
  std::string s = std::to_string(v);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace detail

inline SyntheticWorld generate_synthetic_logs(const SyntheticWorldConfig& cfg) {
  cfg.validate();
  num::Rng rng(cfg.seed);
  SyntheticWorld world;
  auto& ds = world.dataset;

  // Vocabulary: each category owns a slice of the word list, so queries and
  // titles from the same category overlap while categories stay disjoint.
  std::vector<std::string> words;
  words.reserve(cfg.title_vocab);
  for (std::size_t i = 0; i < cfg.title_vocab; ++i)
    words.push_back("word" + detail::zero_pad(i, 4));
  const std::size_t words_per_cat = cfg.title_vocab / cfg.categories;
  auto category_word = [&](std::size_t cat, std::size_t offset) {
    return words[cat * words_per_cat + offset % words_per_cat];
  };

  const std::vector<std::string> brands = {
      "acme", "café",  "zephyr", "orchid", "lumen",  "harbor",
      "savoy", "ridge", "quill",  "ember",  "willow", "falcon"};
  const std::vector<std::string> colors = {"red",   "blue",  "green", "black",
                                           "white", "amber", "teal",  "gray"};
  const std::vector<std::string> age_groups = {"adult", "kids", "teen",
                                               "senior", "all"};

  // Products.
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  std::vector<std::size_t> product_category(cfg.products);
  std::vector<std::vector<double>> product_latent(cfg.products);
  std::vector<double> product_popularity(cfg.products);
  std::vector<std::vector<std::size_t>> products_of_category(cfg.categories);
  std::vector<std::set<std::string>> product_words(cfg.products);
  for (std::size_t p = 0; p < cfg.products; ++p) {
    const std::string pid = "p" + detail::zero_pad(p, 6);
    const std::size_t cat = rng.below(cfg.categories);
    product_category[p] = cat;
    products_of_category[cat].push_back(p);

    data::ProductRecord rec;
    rec.product_id = pid;
    rec.category_id = "cat" + detail::zero_pad(cat, 2);
    const std::size_t title_len = 3 + rng.below(4);
    std::string title;
    for (std::size_t w = 0; w < title_len; ++w) {
      if (w) title += ' ';
      const std::string word = category_word(cat, rng.below(words_per_cat));
      title += word;
      product_words[p].insert(word);
    }
    rec.title = title;
    rec.brand = brands[rng.below(brands.size())];
    rec.color = colors[rng.below(colors.size())];
    rec.age_group = age_groups[rng.below(age_groups.size())];
    rec.price = std::round(std::exp(rng.normal(3.0, 0.7)) * 100.0) / 100.0;
    rec.rating = std::clamp(rng.normal(3.8, 0.6), 0.0, 5.0);

    auto& latent = product_latent[p];
    latent.resize(cfg.latent_dim);
    for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
      latent[j] = rng.normal(0.0, 1.0);
      rec.extra_numeric["attr_" + std::to_string(j)] = latent[j];
    }
    product_popularity[p] = rng.normal(0.0, 1.0);
    ds.products.emplace(pid, std::move(rec));
  }

  // Customers.
  std::vector<std::vector<double>> customer_latent(cfg.customers);
  for (std::size_t u = 0; u < cfg.customers; ++u) {
    const std::string uid = "u" + detail::zero_pad(u, 5);
    data::CustomerRecord rec;
    rec.customer_id = uid;
    auto& latent = customer_latent[u];
    latent.resize(cfg.latent_dim);
    for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
      latent[j] = rng.normal(0.0, 1.0);
      rec.history_numerics["aff_" + std::to_string(j)] = latent[j];
    }
    rec.history_numerics["activity"] = std::fabs(rng.normal(0.0, 1.0));
    rec.demographic_categoricals["segment"] = "s" + std::to_string(rng.below(4));
    ds.customers.emplace(uid, std::move(rec));
  }

  // Queries.
  std::vector<std::size_t> query_category(cfg.queries);
  std::vector<std::vector<double>> query_latent(cfg.queries);
  std::vector<std::set<std::string>> query_words(cfg.queries);
  for (std::size_t q = 0; q < cfg.queries; ++q) {
    const std::string qid = "q" + detail::zero_pad(q, 5);
    const std::size_t cat = rng.below(cfg.categories);
    query_category[q] = cat;
    const std::size_t len = 2 + rng.below(2);
    std::string txt;
    for (std::size_t w = 0; w < len; ++w) {
      if (w) txt += ' ';
      const std::string word = category_word(cat, rng.below(words_per_cat));
      txt += word;
      query_words[q].insert(word);
    }
    ds.queries.emplace(qid, data::QueryRecord{qid, txt});
    auto& latent = query_latent[q];
    latent.resize(cfg.latent_dim);
    for (std::size_t j = 0; j < cfg.latent_dim; ++j)
      latent[j] = rng.normal(0.0, 1.0);
  }

  const auto overlap01 = [&](std::size_t q, std::size_t p) {
    std::size_t shared = 0;
    for (const auto& w : query_words[q]) shared += product_words[p].count(w);
    return static_cast<double>(shared) /
           static_cast<double>(query_words[q].size());
  };
  const auto relevance = [&](std::size_t q, std::size_t p) {
    return detail::dot(query_latent[q], product_latent[p]) * inv_sqrt_k +
           2.2 * overlap01(q, p);
  };

  // Sessions. Click probability: sigmoid(planted affinity) damped by
  // pos^(-position_bias); ATC/TRX conditional on the previous action.
  const double base_logit =
      std::log(cfg.click_rate / (1.0 - cfg.click_rate));
  const double atc_cond = std::clamp(cfg.atc_rate / cfg.click_rate, 0.02, 0.95);
  const double trx_cond = std::clamp(cfg.trx_rate / cfg.atc_rate, 0.02, 0.95);
  const std::size_t n_sessions =
      std::max<std::size_t>(1, cfg.impressions / cfg.session_size);

  for (std::size_t s = 0; s < n_sessions; ++s) {
    const std::size_t q = rng.below(cfg.queries);
    const std::size_t u = rng.below(cfg.customers);
    const auto& same_cat = products_of_category[query_category[q]];

    std::set<std::size_t> chosen;
    std::vector<std::size_t> candidates;
    const std::size_t want = std::min(cfg.session_size, cfg.products);
    std::size_t guard = 0;
    while (candidates.size() < want && guard < want * 30) {
      ++guard;
      std::size_t p;
      if (!same_cat.empty() && rng.below(4) != 0) {
        p = same_cat[rng.below(same_cat.size())];
      } else {
        p = rng.below(cfg.products);
      }
      if (chosen.insert(p).second) candidates.push_back(p);
    }

    // Display order: popularity prior plus noise, best first.
    std::vector<std::pair<double, std::size_t>> ordering;
    ordering.reserve(candidates.size());
    for (const std::size_t p : candidates)
      ordering.emplace_back(-(product_popularity[p] + rng.normal(0.0, 0.5)), p);
    std::sort(ordering.begin(), ordering.end());

    for (std::size_t slot = 0; slot < ordering.size(); ++slot) {
      const std::size_t p = ordering[slot].second;
      const int position = static_cast<int>(slot + 1);
      const double personal =
          detail::dot(customer_latent[u], product_latent[p]) * inv_sqrt_k;
      const double logit = base_logit + relevance(q, p) + 0.9 * personal;
      const double p_click = (1.0 / (1.0 + std::exp(-logit))) *
                             std::pow(static_cast<double>(position),
                                      -cfg.position_bias);
      const int y_click = rng.uniform() < p_click ? 1 : 0;
      const int y_atc = y_click == 1 && rng.uniform() < atc_cond ? 1 : 0;
      const int y_trx = y_atc == 1 && rng.uniform() < trx_cond ? 1 : 0;
      ds.impressions.push_back({"q" + detail::zero_pad(q, 5),
                                "p" + detail::zero_pad(p, 6),
                                "u" + detail::zero_pad(u, 5), position, y_click,
                                y_atc, y_trx, -1});
    }
  }

  // Planted relevance ordering per query (its category's products, best
  // first, capped at 100) as an oracle file.
  for (std::size_t q = 0; q < cfg.queries; ++q) {
    const auto& pool = products_of_category[query_category[q]];
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(pool.size());
    for (const std::size_t p : pool) scored.emplace_back(-relevance(q, p), p);
    std::sort(scored.begin(), scored.end());
    GroundTruthEntry entry;
    entry.query_id = "q" + detail::zero_pad(q, 5);
    for (std::size_t i = 0; i < scored.size() && i < 100; ++i)
      entry.products_by_relevance.push_back(
          "p" + detail::zero_pad(scored[i].second, 6));
    world.ground_truth.push_back(std::move(entry));
  }
  return world;
}

inline void save_ground_truth(const std::vector<GroundTruthEntry>& entries,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& e : entries) {
    out << nlohmann::json{{"query_id", e.query_id},
                          {"products", e.products_by_relevance}}
        << "\n";
  }
}

}  // namespace mtlrank::harness
