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

#include <string>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/net/mlp.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"

namespace mtlrank::net {

enum class Task { click, atc, trx, relevance };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::click: return "click";
    case Task::atc: return "atc";
    case Task::trx: return "trx";
    case Task::relevance: return "relevance";
  }
  throw ContractError("unknown task");
}

inline Task task_from_name(const std::string& name) {
  if (name == "click") return Task::click;
  if (name == "atc") return Task::atc;
  if (name == "trx") return Task::trx;
  if (name == "relevance") return Task::relevance;
  throw ConfigError("unknown task '" + name + "'");
}

struct MmoeConfig {
  std::size_t num_experts = 4;
  std::vector<std::size_t> expert_widths = {64, 32};
  std::vector<std::size_t> tower_widths = {32};
  std::vector<Task> tasks = {Task::click, Task::atc, Task::trx};
  std::vector<double> weights = {1.0, 1.0, 1.0};  // aligned with tasks
  std::size_t relevance_classes = 5;

  void validate() const {
    if (tasks.empty()) throw ConfigError("mmoe: no tasks configured");
    if (num_experts <= tasks.size())
      throw ConfigError("mmoe: expert count must exceed the task count (" +
                        std::to_string(num_experts) + " experts, " +
                        std::to_string(tasks.size()) + " tasks)");
    if (weights.size() != tasks.size())
      throw ConfigError("mmoe: weights must align with tasks");
    double total = 0.0;
    for (const double w : weights) {
      if (w < 0.0) throw ConfigError("mmoe: negative task weight");
      total += w;
    }
    if (total <= 0.0) throw ConfigError("mmoe: at least one weight must be > 0");
    if (expert_widths.empty()) throw ConfigError("mmoe: experts need layers");
    for (std::size_t i = 0; i < tasks.size(); ++i)
      for (std::size_t j = i + 1; j < tasks.size(); ++j)
        if (tasks[i] == tasks[j]) throw ConfigError("mmoe: duplicate task");
    if (has_task(Task::relevance) && relevance_classes < 2)
      throw ConfigError("mmoe: relevance needs at least 2 classes");
  }

  bool has_task(Task t) const {
    for (const Task task : tasks)
      if (task == t) return true;
    return false;
  }

  double weight(Task t) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i] == t) return weights[i];
    throw ConfigError(std::string("mmoe: task ") + task_name(t) + " not active");
  }
};

struct MmoeParams {
  std::vector<TensorPtr> gate_w;   // per task: [num_experts x x_final_dim]
  std::vector<MlpParams> experts;  // shared across tasks
  std::vector<MlpParams> towers;   // per task head
};

inline MmoeParams make_mmoe(ParamRegistry& reg, const std::string& prefix,
                            std::size_t x_final_dim, const MmoeConfig& cfg) {
  cfg.validate();
  MmoeParams p;
  for (const Task t : cfg.tasks)
    p.gate_w.push_back(reg.glorot(prefix + ".gate." + task_name(t),
                                  {cfg.num_experts, x_final_dim}, x_final_dim,
                                  cfg.num_experts));
  for (std::size_t i = 0; i < cfg.num_experts; ++i)
    p.experts.push_back(make_mlp(reg, prefix + ".expert" + std::to_string(i),
                                 x_final_dim, cfg.expert_widths));
  const std::size_t expert_out = cfg.expert_widths.back();
  for (const Task t : cfg.tasks) {
    std::vector<std::size_t> widths = cfg.tower_widths;
    widths.push_back(t == Task::relevance ? cfg.relevance_classes : 1);
    p.towers.push_back(make_mlp(reg, prefix + ".tower." + std::string(task_name(t)),
                                expert_out, widths));
  }
  return p;
}

/// Softmax gate over the experts; bias-free by construction.
inline TensorPtr gate_forward(Graph& g, const TensorPtr& gate_w,
                              const TensorPtr& x_final) {
  return g.softmax(g.matvec(gate_w, x_final));
}

/// Shared experts evaluated once per example; each expert is a ReLU MLP.
inline std::vector<TensorPtr> expert_forward_all(Graph& g, const MmoeParams& p,
                                                 const TensorPtr& x_final) {
  std::vector<TensorPtr> outs;
  outs.reserve(p.experts.size());
  for (const auto& e : p.experts)
    outs.push_back(mlp_forward(g, e, x_final, /*relu_last=*/true));
  return outs;
}

/// H^t = sum_i gate[i] * expert_i. Expert outputs are stacked once and
/// reused by every task's gate.
inline TensorPtr mix_experts(Graph& g, const TensorPtr& stacked_experts,
                             const TensorPtr& gate) {
  if (stacked_experts->rows() != gate->numel())
    throw DimensionError("mix_experts: " +
                         num::shape_str(stacked_experts->shape) + " vs gate " +
                         num::shape_str(gate->shape));
  return g.matvec_t(stacked_experts, gate);
}

/// Per-task head: binary tasks emit a sigmoid probability, the relevance
/// task emits class logits.
inline TensorPtr tower_forward(Graph& g, const MlpParams& tower,
                               const TensorPtr& mixed, Task t) {
  auto out = mlp_forward(g, tower, mixed, /*relu_last=*/false);
  return t == Task::relevance ? out : g.sigmoid(out);
}

}  // namespace mtlrank::net
