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
#include <set>
#include <string>

#include <json.hpp>

#include "mtlrank/data/records.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/log.hpp"

namespace mtlrank::data {

// Impression JSONL: one object per line,
//   {"query": {"id", "text"},
//    "product": {"id", "title", "brand", "color", "age_group", "category",
//                "price", "rating", ...extras},
//    "customer": {"id", ...string/number fields},
//    "position": int,
//    "labels": {"click": 0|1, "atc": 0|1, "trx": 0|1}}
// Field order is irrelevant; unknown top-level or label fields are ignored
// with a one-time warning per load.

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj,
                                           const char* field,
                                           std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw DataError("line " + std::to_string(line_no) +
                    ": missing required field '" + field + "'");
  }
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* field,
                                  std::size_t line_no) {
  const auto& v = require_field(obj, field, line_no);
  if (!v.is_string())
    throw DataError("line " + std::to_string(line_no) + ": field '" + field +
                    "' must be a string");
  return v.get<std::string>();
}

inline int binary_label(const nlohmann::json& labels, const char* field,
                        std::size_t line_no) {
  const auto& v = require_field(labels, field, line_no);
  const int b = v.is_boolean() ? static_cast<int>(v.get<bool>()) : v.get<int>();
  if (b != 0 && b != 1)
    throw DataError("line " + std::to_string(line_no) + ": label '" + field +
                    "' must be 0 or 1");
  return b;
}

}  // namespace detail

inline Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  Dataset ds;
  std::set<std::string> warned_fields;
  std::string line;
  std::size_t line_no = 0;
  const std::set<std::string> known_top = {"query", "product", "customer",
                                           "position", "labels"};
  const std::set<std::string> known_labels = {"click", "atc", "trx"};

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": malformed JSON: " + e.what());
    }
    if (!j.is_object())
      throw DataError("line " + std::to_string(line_no) + ": expected object");

    try {
    for (const auto& [key, _] : j.items()) {
      if (!known_top.count(key) && warned_fields.insert(key).second)
        warn("ignoring unknown field '" + key + "' (first seen on line " +
             std::to_string(line_no) + ")");
    }

    const auto& jq = detail::require_field(j, "query", line_no);
    const auto& jp = detail::require_field(j, "product", line_no);
    const auto& jc = detail::require_field(j, "customer", line_no);
    const auto& jl = detail::require_field(j, "labels", line_no);

    QueryRecord q;
    q.query_id = detail::require_string(jq, "id", line_no);
    q.text = detail::require_string(jq, "text", line_no);
    {
      std::string trimmed = q.text;
      trimmed.erase(0, trimmed.find_first_not_of(" \t"));
      if (trimmed.empty())
        throw DataError("line " + std::to_string(line_no) +
                        ": query text is empty");
    }

    ProductRecord p;
    p.product_id = detail::require_string(jp, "id", line_no);
    p.title = detail::require_string(jp, "title", line_no);
    p.category_id = detail::require_string(jp, "category", line_no);
    for (const auto& [key, val] : jp.items()) {
      if (key == "id" || key == "title" || key == "category") continue;
      if (key == "brand") {
        p.brand = val.get<std::string>();
      } else if (key == "color") {
        p.color = val.get<std::string>();
      } else if (key == "age_group") {
        p.age_group = val.get<std::string>();
      } else if (key == "price") {
        p.price = val.get<double>();
        if (p.price < 0.0)
          throw DataError("line " + std::to_string(line_no) +
                          ": field 'price' must be non-negative");
      } else if (key == "rating") {
        p.rating = val.get<double>();
        if (p.rating < 0.0 || p.rating > 5.0) {
          if (warned_fields.insert("__rating_range").second)
            warn("rating outside [0, 5] clamped (first seen on line " +
                 std::to_string(line_no) + ")");
          p.rating = std::min(5.0, std::max(0.0, p.rating));
        }
      } else if (val.is_string()) {
        p.extra_categorical[key] = val.get<std::string>();
      } else if (val.is_number()) {
        p.extra_numeric[key] = val.get<double>();
      } else if (warned_fields.insert("product." + key).second) {
        warn("ignoring product field '" + key + "' of unsupported type");
      }
    }

    CustomerRecord c;
    c.customer_id = detail::require_string(jc, "id", line_no);
    for (const auto& [key, val] : jc.items()) {
      if (key == "id") continue;
      if (val.is_string()) {
        c.demographic_categoricals[key] = val.get<std::string>();
      } else if (val.is_number()) {
        c.history_numerics[key] = val.get<double>();
      } else if (warned_fields.insert("customer." + key).second) {
        warn("ignoring customer field '" + key + "' of unsupported type");
      }
    }

    ImpressionRecord im;
    im.query_id = q.query_id;
    im.product_id = p.product_id;
    im.customer_id = c.customer_id;
    im.position = detail::require_field(j, "position", line_no).get<int>();
    if (im.position < 1)
      throw DataError("line " + std::to_string(line_no) +
                      ": field 'position' must be >= 1");
    for (const auto& [key, _] : jl.items()) {
      if (!known_labels.count(key) && warned_fields.insert("labels." + key).second)
        warn("ignoring unknown label field '" + key + "'");
    }
    im.y_click = detail::binary_label(jl, "click", line_no);
    im.y_atc = detail::binary_label(jl, "atc", line_no);
    im.y_trx = detail::binary_label(jl, "trx", line_no);

    ds.queries.emplace(q.query_id, std::move(q));
    ds.products.emplace(p.product_id, std::move(p));
    ds.customers.emplace(c.customer_id, std::move(c));
    ds.impressions.push_back(std::move(im));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  validate_label_hierarchy(ds);
  return ds;
}

inline nlohmann::json impression_to_json(const Dataset& ds,
                                         const ImpressionRecord& im) {
  const auto& q = ds.query(im.query_id);
  const auto& p = ds.product(im.product_id);
  const auto& c = ds.customer(im.customer_id);
  nlohmann::json jp = {{"id", p.product_id}, {"title", p.title},
                       {"brand", p.brand},   {"color", p.color},
                       {"age_group", p.age_group}, {"category", p.category_id},
                       {"price", p.price},   {"rating", p.rating}};
  for (const auto& [k, v] : p.extra_categorical) jp[k] = v;
  for (const auto& [k, v] : p.extra_numeric) jp[k] = v;
  nlohmann::json jc = {{"id", c.customer_id}};
  for (const auto& [k, v] : c.demographic_categoricals) jc[k] = v;
  for (const auto& [k, v] : c.history_numerics) jc[k] = v;
  return nlohmann::json{
      {"query", {{"id", q.query_id}, {"text", q.text}}},
      {"product", jp},
      {"customer", jc},
      {"position", im.position},
      {"labels", {{"click", im.y_click}, {"atc", im.y_atc}, {"trx", im.y_trx}}}};
}

inline void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& im : ds.impressions) out << impression_to_json(ds, im) << "\n";
}

}  // namespace mtlrank::data
