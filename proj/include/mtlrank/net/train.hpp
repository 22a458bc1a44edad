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
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/net/model.hpp"
#include "mtlrank/numerics/adam.hpp"
#include "mtlrank/numerics/rng.hpp"

namespace mtlrank::net {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 10;
  std::size_t patience = 2;     // epochs without improvement before stopping
  double min_delta = 1e-5;      // required validation-loss improvement
  std::uint64_t seed = 42;

  void validate() const {
    if (lr <= 0.0) throw ConfigError("train: lr must be positive");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  }
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  double best_valid_loss = 0.0;
  std::size_t best_epoch = 0;
  bool diverged = false;
  std::string diagnostic;
};

namespace detail {

inline double mean_loss(const MtlModel& model,
                        std::span<const data::EncodedExample> examples,
                        std::size_t batch_size) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t off = 0; off < examples.size(); off += batch_size) {
    const std::size_t len = std::min(batch_size, examples.size() - off);
    num::Graph g(/*grad_enabled=*/false);
    total += model.batch_loss(g, examples.subspan(off, len))->data[0] *
             static_cast<double>(len);
    n += len;
  }
  return total / static_cast<double>(n);
}

inline std::vector<std::vector<double>> snapshot(const MtlModel& model) {
  std::vector<std::vector<double>> out;
  for (const auto& e : model.params().entries()) out.push_back(e.tensor->data);
  return out;
}

inline void restore(MtlModel& model, const std::vector<std::vector<double>>& snap) {
  const auto& entries = model.params().entries();
  for (std::size_t i = 0; i < entries.size(); ++i)
    entries[i].tensor->data = snap[i];
}

}  // namespace detail

/// Adam training with per-epoch validation and early stopping: stop after
/// `patience` consecutive epochs whose validation loss fails to improve on
/// the best by at least min_delta. The returned model holds the
/// best-validation parameters. A non-finite loss aborts the run, restores
/// the last good parameters, and reports the diagnostic.
inline TrainResult train_model(MtlModel& model,
                               std::span<const data::EncodedExample> train,
                               std::span<const data::EncodedExample> valid,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || valid.empty())
    throw ContractError("train: train and validation splits must be nonempty");

  num::Adam opt(model.params().trainable(), {.lr = cfg.lr});
  TrainResult result;
  auto best = detail::snapshot(model);
  result.best_valid_loss = detail::mean_loss(model, valid, cfg.batch_size);
  result.best_epoch = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t bad_epochs = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    num::Rng shuffle_rng(
        num::derive_seed(cfg.seed, "train.epoch" + std::to_string(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::vector<data::EncodedExample> batch;
    batch.reserve(cfg.batch_size);
    try {
      for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
        const std::size_t len = std::min(cfg.batch_size, order.size() - off);
        batch.clear();
        for (std::size_t i = 0; i < len; ++i)
          batch.push_back(train[order[off + i]]);
        num::Graph g;
        auto loss = model.batch_loss(g, batch);
        if (!std::isfinite(loss->data[0]))
          throw NumericError("training loss became non-finite");
        epoch_loss += loss->data[0] * static_cast<double>(len);
        g.backward(loss);
        opt.step();
        opt.zero_grad();
      }
    } catch (const NumericError& e) {
      detail::restore(model, best);
      result.diverged = true;
      result.diagnostic = std::string("epoch ") + std::to_string(epoch) + ": " +
                          e.what() + "; restored best checkpoint";
      return result;
    }
    epoch_loss /= static_cast<double>(train.size());

    const double valid_loss = detail::mean_loss(model, valid, cfg.batch_size);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    result.log.push_back({epoch, epoch_loss, valid_loss, seconds});

    if (valid_loss < result.best_valid_loss - cfg.min_delta) {
      result.best_valid_loss = valid_loss;
      result.best_epoch = epoch;
      best = detail::snapshot(model);
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  detail::restore(model, best);
  return result;
}

}  // namespace mtlrank::net
