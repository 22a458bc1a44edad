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

#include <cstddef>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "mtlrank/errors.hpp"

namespace mtlrank::num {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense 64-bit float tensor in row-major order. Values are immutable once
/// produced by a kernel; only optimizer steps rewrite parameter data, and
/// those require exclusive access to the parameter set.
class Tensor {
 public:
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d, bool rg = false)
      : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
    if (numel_of(shape) != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }
    if (requires_grad) grad.assign(data.size(), 0.0);
  }

  static std::size_t numel_of(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) n *= d;
    return n;
  }

  static TensorPtr zeros(std::vector<std::size_t> shape, bool rg = false) {
    const std::size_t n = numel_of(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<double>(n, 0.0), rg);
  }

  static TensorPtr full(std::vector<std::size_t> shape, double v, bool rg = false) {
    const std::size_t n = numel_of(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<double>(n, v), rg);
  }

  static TensorPtr scalar(double v, bool rg = false) {
    return std::make_shared<Tensor>(std::vector<std::size_t>{1},
                                    std::vector<double>{v}, rg);
  }

  static TensorPtr vector(std::vector<double> v, bool rg = false) {
    const std::size_t n = v.size();
    return std::make_shared<Tensor>(std::vector<std::size_t>{n}, std::move(v), rg);
  }

  static TensorPtr matrix(std::size_t rows, std::size_t cols,
                          std::vector<double> v, bool rg = false) {
    return std::make_shared<Tensor>(std::vector<std::size_t>{rows, cols},
                                    std::move(v), rg);
  }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  bool is_scalar() const { return numel() == 1; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }

  std::size_t rows() const {
    if (!is_matrix()) throw DimensionError("rows() on non-matrix " + shape_str(shape));
    return shape[0];
  }
  std::size_t cols() const {
    if (!is_matrix()) throw DimensionError("cols() on non-matrix " + shape_str(shape));
    return shape[1];
  }

  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }

  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }
};

}  // namespace mtlrank::num
