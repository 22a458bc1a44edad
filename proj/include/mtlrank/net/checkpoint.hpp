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
#include <memory>
#include <string>

#include <json.hpp>

#include "mtlrank/errors.hpp"
#include "mtlrank/net/model.hpp"
#include "mtlrank/text/vocab.hpp"

namespace mtlrank::net {

inline constexpr const char* kCheckpointFormat = "mtlrank-checkpoint-v1";

/// Self-describing JSON checkpoint: config echo, schema (with hash),
/// vocabulary, seed and every parameter tensor.
inline void save_checkpoint(const std::string& path, const MtlModel& model,
                            const text::Vocabulary& vocab) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["seed"] = model.config().seed;
  j["model"] = model.config().to_json();
  j["schema"] = model.schema().to_json();
  j["schema_hash"] = model.schema().hash();
  j["vocab"] = vocab.to_json();
  nlohmann::json params = nlohmann::json::array();
  for (const auto& e : model.params().entries()) {
    params.push_back({{"name", e.name},
                      {"shape", e.tensor->shape},
                      {"data", e.tensor->data}});
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << j.dump() << "\n";
}

struct LoadedModel {
  std::unique_ptr<MtlModel> model;
  text::Vocabulary vocab;
  std::uint64_t seed = 0;
};

/// Rebuilds the model from the config echo and overwrites its parameters
/// with the stored tensors. The schema hash is verified, and every stored
/// tensor must match a registered parameter in name and shape.
inline LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat)
    throw DataError("checkpoint '" + path + "' has unknown format");

  const auto cfg = ModelConfig::from_json(j.at("model"));
  auto schema = data::FeatureSchema::from_json(j.at("schema"));
  if (schema.hash() != j.at("schema_hash").get<std::string>())
    throw DataError("checkpoint schema hash mismatch (file corrupted or "
                    "schema drifted)");

  LoadedModel loaded;
  loaded.vocab = text::Vocabulary::from_json(j.at("vocab"));
  loaded.seed = j.at("seed").get<std::uint64_t>();
  loaded.model = std::make_unique<MtlModel>(cfg, schema, loaded.vocab.size());

  std::size_t restored = 0;
  for (const auto& jp : j.at("params")) {
    const auto name = jp.at("name").get<std::string>();
    auto tensor = loaded.model->params().find(name);
    if (!tensor) throw DataError("checkpoint parameter '" + name + "' unknown");
    const auto shape = jp.at("shape").get<std::vector<std::size_t>>();
    if (shape != tensor->shape)
      throw DataError("checkpoint parameter '" + name + "' shape mismatch");
    tensor->data = jp.at("data").get<std::vector<double>>();
    ++restored;
  }
  if (restored != loaded.model->params().entries().size())
    throw DataError("checkpoint is missing parameters (" +
                    std::to_string(restored) + " of " +
                    std::to_string(loaded.model->params().entries().size()) + ")");
  return loaded;
}

}  // namespace mtlrank::net
