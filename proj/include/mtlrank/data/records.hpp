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
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/log.hpp"

namespace mtlrank::data {

struct QueryRecord {
  std::string query_id;
  std::string text;

  bool operator==(const QueryRecord&) const = default;
};

struct ProductRecord {
  std::string product_id;
  std::string title;
  std::string brand;
  std::string color;
  std::string age_group;
  std::string category_id;
  double price = 0.0;
  double rating = 0.0;
  std::map<std::string, std::string> extra_categorical;
  std::map<std::string, double> extra_numeric;

  bool operator==(const ProductRecord&) const = default;

  /// Textual document for the product: title, brand, color and target age
  /// group joined with single spaces (empty fields skipped).
  std::string document() const {
    std::string doc;
    for (const std::string* part : {&title, &brand, &color, &age_group}) {
      if (part->empty()) continue;
      if (!doc.empty()) doc += ' ';
      doc += *part;
    }
    return doc;
  }
};

struct CustomerRecord {
  std::string customer_id;
  std::map<std::string, std::string> demographic_categoricals;
  std::map<std::string, double> history_numerics;

  bool operator==(const CustomerRecord&) const = default;
};

/// One display of a product to a customer for a query at a position, with
/// the three binary engagement labels and an optional relevance class filled
/// in by the labeling pipeline.
struct ImpressionRecord {
  std::string query_id;
  std::string product_id;
  std::string customer_id;
  int position = 1;
  int y_click = 0;
  int y_atc = 0;
  int y_trx = 0;
  int relevance_class = -1;  // -1 = unset

  bool operator==(const ImpressionRecord&) const = default;
};

struct Dataset {
  std::unordered_map<std::string, QueryRecord> queries;
  std::unordered_map<std::string, ProductRecord> products;
  std::unordered_map<std::string, CustomerRecord> customers;
  std::vector<ImpressionRecord> impressions;

  const QueryRecord& query(const std::string& id) const {
    const auto it = queries.find(id);
    if (it == queries.end()) throw DataError("unknown query id '" + id + "'");
    return it->second;
  }
  const ProductRecord& product(const std::string& id) const {
    const auto it = products.find(id);
    if (it == products.end()) throw DataError("unknown product id '" + id + "'");
    return it->second;
  }
  const CustomerRecord& customer(const std::string& id) const {
    const auto it = customers.find(id);
    if (it == customers.end())
      throw DataError("unknown customer id '" + id + "'");
    return it->second;
  }
};

/// Checks trx => atc => click over all impressions. Real click logs are
/// noisy, so violations are warned about and counted, never fatal.
inline std::size_t validate_label_hierarchy(const Dataset& ds) {
  std::size_t violations = 0;
  for (const auto& im : ds.impressions) {
    if ((im.y_trx == 1 && im.y_atc == 0) || (im.y_atc == 1 && im.y_click == 0))
      ++violations;
  }
  if (violations > 0) {
    warn(std::to_string(violations) +
         " impression(s) violate the trx => atc => click hierarchy");
  }
  return violations;
}

}  // namespace mtlrank::data
