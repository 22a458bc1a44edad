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
#include <limits>
#include <utility>
#include <vector>

#include "mtlrank/errors.hpp"
#include "mtlrank/numerics/tensor.hpp"

namespace mtlrank::num {

/// Reverse-mode autodiff over a linear tape.
///
/// Every kernel appends one tape step holding the adjoint closure for its
/// inputs; ops execute in program order, so the tape is topologically sorted
/// by construction and backward() replays it in reverse, touching each
/// recorded kernel exactly once. Kernel outputs are checked for non-finite
/// values on the spot: a NaN/Inf is an error state, never data.
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  std::size_t recorded_ops() const { return tape_.size(); }

  // ---- linear algebra ----

  /// C[i][j] = sum_t A[i][t] * B[t][j]
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_matrix("matmul", a);
    require_matrix("matmul", b);
    const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
    if (b->rows() != k) {
      throw DimensionError("matmul: inner dimensions differ, " +
                           shape_str(a->shape) + " vs " + shape_str(b->shape));
    }
    auto out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = &a->data[i * k];
      double* crow = &out->data[i * n];
      for (std::size_t t = 0; t < k; ++t) {
        const double av = arow[t];
        const double* brow = &b->data[t * n];
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
    return finish("matmul", out, {a, b}, [a, b, out, m, k, n] {
      if (a->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double g = out->grad[i * n + j];
            if (g == 0.0) continue;
            for (std::size_t t = 0; t < k; ++t)
              a->grad[i * k + t] += g * b->data[t * n + j];
          }
      }
      if (b->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double g = out->grad[i * n + j];
            if (g == 0.0) continue;
            for (std::size_t t = 0; t < k; ++t)
              b->grad[t * n + j] += g * a->data[i * k + t];
          }
      }
    });
  }

  /// C = A * B^T with A [m x k], B [n x k].
  TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b) {
    require_matrix("matmul_nt", a);
    require_matrix("matmul_nt", b);
    const std::size_t m = a->rows(), k = a->cols(), n = b->rows();
    if (b->cols() != k) {
      throw DimensionError("matmul_nt: inner dimensions differ, " +
                           shape_str(a->shape) + " vs " + shape_str(b->shape));
    }
    auto out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        const double* arow = &a->data[i * k];
        const double* brow = &b->data[j * k];
        for (std::size_t t = 0; t < k; ++t) s += arow[t] * brow[t];
        out->data[i * n + j] = s;
      }
    return finish("matmul_nt", out, {a, b}, [a, b, out, m, k, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = out->grad[i * n + j];
          if (g == 0.0) continue;
          if (a->requires_grad)
            for (std::size_t t = 0; t < k; ++t)
              a->grad[i * k + t] += g * b->data[j * k + t];
          if (b->requires_grad)
            for (std::size_t t = 0; t < k; ++t)
              b->grad[j * k + t] += g * a->data[i * k + t];
        }
    });
  }

  /// y = W x with W [m x n], x [n].
  TensorPtr matvec(const TensorPtr& w, const TensorPtr& x) {
    require_matrix("matvec", w);
    require_vec("matvec", x);
    const std::size_t m = w->rows(), n = w->cols();
    if (x->numel() != n) {
      throw DimensionError("matvec: " + shape_str(w->shape) + " vs " +
                           shape_str(x->shape));
    }
    auto out = Tensor::zeros({m});
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      const double* wrow = &w->data[i * n];
      for (std::size_t j = 0; j < n; ++j) s += wrow[j] * x->data[j];
      out->data[i] = s;
    }
    return finish("matvec", out, {w, x}, [w, x, out, m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        const double g = out->grad[i];
        if (g == 0.0) continue;
        if (w->requires_grad)
          for (std::size_t j = 0; j < n; ++j) w->grad[i * n + j] += g * x->data[j];
        if (x->requires_grad)
          for (std::size_t j = 0; j < n; ++j) x->grad[j] += g * w->data[i * n + j];
      }
    });
  }

  /// y = A^T x with A [n x m], x [n].
  TensorPtr matvec_t(const TensorPtr& a, const TensorPtr& x) {
    require_matrix("matvec_t", a);
    require_vec("matvec_t", x);
    const std::size_t n = a->rows(), m = a->cols();
    if (x->numel() != n) {
      throw DimensionError("matvec_t: " + shape_str(a->shape) + " vs " +
                           shape_str(x->shape));
    }
    auto out = Tensor::zeros({m});
    for (std::size_t i = 0; i < n; ++i) {
      const double xv = x->data[i];
      const double* arow = &a->data[i * m];
      for (std::size_t j = 0; j < m; ++j) out->data[j] += xv * arow[j];
    }
    return finish("matvec_t", out, {a, x}, [a, x, out, n, m] {
      for (std::size_t i = 0; i < n; ++i) {
        if (a->requires_grad)
          for (std::size_t j = 0; j < m; ++j)
            a->grad[i * m + j] += x->data[i] * out->grad[j];
        if (x->requires_grad) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += a->data[i * m + j] * out->grad[j];
          x->grad[i] += s;
        }
      }
    });
  }

  // ---- elementwise ----

  TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("add", a, b);
    auto out = Tensor::zeros(a->shape);
    for (std::size_t i = 0; i < out->numel(); ++i)
      out->data[i] = a->data[i] + b->data[i];
    return finish("add", out, {a, b}, [a, b, out] {
      const std::size_t n = out->numel();
      if (a->requires_grad)
        for (std::size_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < n; ++i) b->grad[i] += out->grad[i];
    });
  }

  /// Elementwise (Hadamard) product.
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("mul", a, b);
    auto out = Tensor::zeros(a->shape);
    for (std::size_t i = 0; i < out->numel(); ++i)
      out->data[i] = a->data[i] * b->data[i];
    return finish("mul", out, {a, b}, [a, b, out] {
      const std::size_t n = out->numel();
      if (a->requires_grad)
        for (std::size_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] * b->data[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < n; ++i) b->grad[i] += out->grad[i] * a->data[i];
    });
  }

  TensorPtr scale(const TensorPtr& a, double c) {
    auto out = Tensor::zeros(a->shape);
    for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = c * a->data[i];
    return finish("scale", out, {a}, [a, out, c] {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->numel(); ++i)
          a->grad[i] += c * out->grad[i];
    });
  }

  /// Y[t][j] = X[t][j] + b[j]
  TensorPtr add_rowwise(const TensorPtr& x, const TensorPtr& b) {
    require_matrix("add_rowwise", x);
    require_vec("add_rowwise", b);
    const std::size_t t = x->rows(), d = x->cols();
    if (b->numel() != d) {
      throw DimensionError("add_rowwise: " + shape_str(x->shape) + " vs " +
                           shape_str(b->shape));
    }
    auto out = Tensor::zeros(x->shape);
    for (std::size_t r = 0; r < t; ++r)
      for (std::size_t j = 0; j < d; ++j)
        out->data[r * d + j] = x->data[r * d + j] + b->data[j];
    return finish("add_rowwise", out, {x, b}, [x, b, out, t, d] {
      if (x->requires_grad)
        for (std::size_t i = 0; i < t * d; ++i) x->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (std::size_t r = 0; r < t; ++r)
          for (std::size_t j = 0; j < d; ++j) b->grad[j] += out->grad[r * d + j];
    });
  }

  TensorPtr relu(const TensorPtr& a) {
    auto out = Tensor::zeros(a->shape);
    for (std::size_t i = 0; i < out->numel(); ++i)
      out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    return finish("relu", out, {a}, [a, out] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < out->numel(); ++i)
        if (a->data[i] > 0.0) a->grad[i] += out->grad[i];
    });
  }

  TensorPtr sigmoid(const TensorPtr& a) {
    auto out = Tensor::zeros(a->shape);
    for (std::size_t i = 0; i < out->numel(); ++i) {
      const double x = a->data[i];
      out->data[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                              : std::exp(x) / (1.0 + std::exp(x));
    }
    return finish("sigmoid", out, {a}, [a, out] {
      if (!a->requires_grad) return;
      for (std::size_t i = 0; i < out->numel(); ++i) {
        const double s = out->data[i];
        a->grad[i] += out->grad[i] * s * (1.0 - s);
      }
    });
  }

  /// Numerically stable softmax over a vector (max-subtraction).
  TensorPtr softmax(const TensorPtr& x) {
    require_vec("softmax", x);
    if (x->numel() == 0) throw DimensionError("softmax: empty input");
    auto out = Tensor::zeros(x->shape);
    softmax_fill(x->data.data(), out->data.data(), x->numel());
    return finish("softmax", out, {x}, [x, out] {
      if (!x->requires_grad) return;
      softmax_backward(out->data.data(), out->grad.data(), x->grad.data(),
                       x->numel());
    });
  }

  /// Row-wise softmax over a matrix.
  TensorPtr softmax_rows(const TensorPtr& x) {
    require_matrix("softmax_rows", x);
    const std::size_t t = x->rows(), n = x->cols();
    if (n == 0) throw DimensionError("softmax_rows: empty rows");
    auto out = Tensor::zeros(x->shape);
    for (std::size_t r = 0; r < t; ++r)
      softmax_fill(&x->data[r * n], &out->data[r * n], n);
    return finish("softmax_rows", out, {x}, [x, out, t, n] {
      if (!x->requires_grad) return;
      for (std::size_t r = 0; r < t; ++r)
        softmax_backward(&out->data[r * n], &out->grad[r * n], &x->grad[r * n], n);
    });
  }

  /// (x - mean) / sqrt(var + 1e-5) * gain + bias, applied to a vector or to
  /// each row of a matrix; gain/bias span the normalized dimension.
  TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                       const TensorPtr& bias) {
    const bool mat = x->is_matrix();
    if (!mat && !x->is_vector())
      throw DimensionError("layer_norm: expected vector or matrix, got " +
                           shape_str(x->shape));
    const std::size_t t = mat ? x->rows() : 1;
    const std::size_t d = mat ? x->cols() : x->numel();
    if (d < 2) throw DimensionError("layer_norm: normalized dim must be >= 2");
    if (gain->numel() != d || bias->numel() != d) {
      throw DimensionError("layer_norm: gain/bias " + shape_str(gain->shape) +
                           "/" + shape_str(bias->shape) + " vs dim " +
                           std::to_string(d));
    }
    auto out = Tensor::zeros(x->shape);
    // Per-row inverse stddev and normalized values, kept for the adjoint.
    auto inv_sigma = std::make_shared<std::vector<double>>(t);
    auto xhat = std::make_shared<std::vector<double>>(t * d);
    for (std::size_t r = 0; r < t; ++r) {
      const double* xr = &x->data[r * d];
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += xr[j];
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double c = xr[j] - mean;
        var += c * c;
      }
      var /= static_cast<double>(d);
      const double is = 1.0 / std::sqrt(var + kLayerNormEps);
      (*inv_sigma)[r] = is;
      for (std::size_t j = 0; j < d; ++j) {
        const double h = (xr[j] - mean) * is;
        (*xhat)[r * d + j] = h;
        out->data[r * d + j] = gain->data[j] * h + bias->data[j];
      }
    }
    return finish("layer_norm", out, {x, gain, bias},
                  [x, gain, bias, out, inv_sigma, xhat, t, d] {
      for (std::size_t r = 0; r < t; ++r) {
        const double* dy = &out->grad[r * d];
        const double* h = &(*xhat)[r * d];
        if (gain->requires_grad)
          for (std::size_t j = 0; j < d; ++j) gain->grad[j] += dy[j] * h[j];
        if (bias->requires_grad)
          for (std::size_t j = 0; j < d; ++j) bias->grad[j] += dy[j];
        if (x->requires_grad) {
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double g = dy[j] * gain->data[j];
            m1 += g;
            m2 += g * h[j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          const double is = (*inv_sigma)[r];
          for (std::size_t j = 0; j < d; ++j) {
            const double g = dy[j] * gain->data[j];
            x->grad[r * d + j] += (g - m1 - h[j] * m2) * is;
          }
        }
      }
    });
  }

  /// Column-wise max over the rows of [t x d]; the adjoint routes to the
  /// first row attaining each maximum.
  TensorPtr max_pool_rows(const TensorPtr& x) {
    require_matrix("max_pool_rows", x);
    const std::size_t t = x->rows(), d = x->cols();
    if (t < 1) throw DimensionError("max_pool_rows: needs at least one row");
    auto out = Tensor::zeros({d});
    auto argmax = std::make_shared<std::vector<std::size_t>>(d, 0);
    for (std::size_t j = 0; j < d; ++j) {
      double best = x->data[j];
      std::size_t br = 0;
      for (std::size_t r = 1; r < t; ++r) {
        const double v = x->data[r * d + j];
        if (v > best) {
          best = v;
          br = r;
        }
      }
      out->data[j] = best;
      (*argmax)[j] = br;
    }
    return finish("max_pool_rows", out, {x}, [x, out, argmax, d] {
      if (!x->requires_grad) return;
      for (std::size_t j = 0; j < d; ++j)
        x->grad[(*argmax)[j] * d + j] += out->grad[j];
    });
  }

  // ---- shape assembly ----

  /// Concatenate vectors into one vector.
  TensorPtr concat(const std::vector<TensorPtr>& parts) {
    std::size_t n = 0;
    for (const auto& p : parts) {
      require_vec("concat", p);
      n += p->numel();
    }
    auto out = Tensor::zeros({n});
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p->data.begin(), p->data.end(), out->data.begin() + off);
      off += p->numel();
    }
    return finish("concat", out, parts, [parts, out] {
      std::size_t off = 0;
      for (const auto& p : parts) {
        if (p->requires_grad)
          for (std::size_t i = 0; i < p->numel(); ++i)
            p->grad[i] += out->grad[off + i];
        off += p->numel();
      }
    });
  }

  /// Stack equal-length vectors as the rows of a [t x d] matrix.
  TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
    if (rows.empty()) throw DimensionError("stack_rows: no rows");
    const std::size_t d = rows[0]->numel();
    for (const auto& r : rows) {
      require_vec("stack_rows", r);
      if (r->numel() != d)
        throw DimensionError("stack_rows: row lengths differ, " +
                             shape_str(rows[0]->shape) + " vs " +
                             shape_str(r->shape));
    }
    auto out = Tensor::zeros({rows.size(), d});
    for (std::size_t r = 0; r < rows.size(); ++r)
      std::copy(rows[r]->data.begin(), rows[r]->data.end(),
                out->data.begin() + r * d);
    return finish("stack_rows", out, rows, [rows, out, d] {
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r]->requires_grad)
          for (std::size_t j = 0; j < d; ++j)
            rows[r]->grad[j] += out->grad[r * d + j];
    });
  }

  TensorPtr slice_row(const TensorPtr& x, std::size_t row) {
    require_matrix("slice_row", x);
    const std::size_t d = x->cols();
    if (row >= x->rows())
      throw IndexError("slice_row: row " + std::to_string(row) + " of " +
                       shape_str(x->shape));
    auto out = Tensor::zeros({d});
    std::copy(x->data.begin() + row * d, x->data.begin() + (row + 1) * d,
              out->data.begin());
    return finish("slice_row", out, {x}, [x, out, row, d] {
      if (!x->requires_grad) return;
      for (std::size_t j = 0; j < d; ++j) x->grad[row * d + j] += out->grad[j];
    });
  }

  TensorPtr slice_cols(const TensorPtr& x, std::size_t c0, std::size_t width) {
    require_matrix("slice_cols", x);
    const std::size_t t = x->rows(), d = x->cols();
    if (c0 + width > d)
      throw IndexError("slice_cols: [" + std::to_string(c0) + ", " +
                       std::to_string(c0 + width) + ") of " + shape_str(x->shape));
    auto out = Tensor::zeros({t, width});
    for (std::size_t r = 0; r < t; ++r)
      std::copy(x->data.begin() + r * d + c0, x->data.begin() + r * d + c0 + width,
                out->data.begin() + r * width);
    return finish("slice_cols", out, {x}, [x, out, c0, width, t, d] {
      if (!x->requires_grad) return;
      for (std::size_t r = 0; r < t; ++r)
        for (std::size_t j = 0; j < width; ++j)
          x->grad[r * d + c0 + j] += out->grad[r * width + j];
    });
  }

  /// Concatenate matrices with equal row counts along columns.
  TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    const std::size_t t = parts[0]->rows();
    std::size_t d = 0;
    for (const auto& p : parts) {
      require_matrix("concat_cols", p);
      if (p->rows() != t)
        throw DimensionError("concat_cols: row counts differ, " +
                             shape_str(parts[0]->shape) + " vs " +
                             shape_str(p->shape));
      d += p->cols();
    }
    auto out = Tensor::zeros({t, d});
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t w = p->cols();
      for (std::size_t r = 0; r < t; ++r)
        std::copy(p->data.begin() + r * w, p->data.begin() + (r + 1) * w,
                  out->data.begin() + r * d + off);
      off += w;
    }
    return finish("concat_cols", out, parts, [parts, out, t, d] {
      std::size_t off = 0;
      for (const auto& p : parts) {
        const std::size_t w = p->cols();
        if (p->requires_grad)
          for (std::size_t r = 0; r < t; ++r)
            for (std::size_t j = 0; j < w; ++j)
              p->grad[r * w + j] += out->grad[r * d + off + j];
        off += w;
      }
    });
  }

  // ---- embedding lookups ----

  /// Column `col` of a [e x v] table, i.e. table * one_hot(col). Indices at
  /// or past v fall back to the reserved column 0.
  TensorPtr gather_column(const TensorPtr& table, std::size_t col) {
    require_matrix("gather_column", table);
    const std::size_t e = table->rows(), v = table->cols();
    if (col >= v) col = 0;
    auto out = Tensor::zeros({e});
    for (std::size_t i = 0; i < e; ++i) out->data[i] = table->data[i * v + col];
    return finish("gather_column", out, {table}, [table, out, col, e, v] {
      if (!table->requires_grad) return;
      for (std::size_t i = 0; i < e; ++i)
        table->grad[i * v + col] += out->grad[i];
    });
  }

  /// Rows of the output are columns of a [d x v] table selected by ids;
  /// out-of-range ids fall back to column 0.
  TensorPtr gather_columns(const TensorPtr& table, const std::vector<int>& ids) {
    require_matrix("gather_columns", table);
    const std::size_t d = table->rows(), v = table->cols();
    if (ids.empty()) throw DimensionError("gather_columns: empty id list");
    auto cols = std::make_shared<std::vector<std::size_t>>();
    cols->reserve(ids.size());
    for (const int id : ids)
      cols->push_back(id < 0 || static_cast<std::size_t>(id) >= v
                          ? 0
                          : static_cast<std::size_t>(id));
    auto out = Tensor::zeros({ids.size(), d});
    for (std::size_t r = 0; r < cols->size(); ++r)
      for (std::size_t i = 0; i < d; ++i)
        out->data[r * d + i] = table->data[i * v + (*cols)[r]];
    return finish("gather_columns", out, {table}, [table, out, cols, d, v] {
      if (!table->requires_grad) return;
      for (std::size_t r = 0; r < cols->size(); ++r)
        for (std::size_t i = 0; i < d; ++i)
          table->grad[i * v + (*cols)[r]] += out->grad[r * d + i];
    });
  }

  // ---- reductions & losses ----

  TensorPtr sum(const TensorPtr& x) {
    auto out = Tensor::zeros({1});
    double s = 0.0;
    for (const double v : x->data) s += v;
    out->data[0] = s;
    return finish("sum", out, {x}, [x, out] {
      if (!x->requires_grad) return;
      for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[0];
    });
  }

  /// Binary cross-entropy on a probability. p is clamped to
  /// [1e-7, 1 - 1e-7] before the logs; in the clamped region the adjoint
  /// is zero, matching the flat clamped value.
  TensorPtr bce(const TensorPtr& p, double y) {
    if (!p->is_scalar())
      throw ContractError("bce: probability must be scalar, got " +
                          shape_str(p->shape));
    if (y != 0.0 && y != 1.0) throw ContractError("bce: label must be 0 or 1");
    const double raw = p->data[0];
    const double c = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
    auto out = Tensor::scalar(-(y * std::log(c) + (1.0 - y) * std::log(1.0 - c)));
    const bool active = raw >= kProbClamp && raw <= 1.0 - kProbClamp;
    return finish("bce", out, {p}, [p, out, y, c, active] {
      if (!p->requires_grad || !active) return;
      p->grad[0] += out->grad[0] * (-(y / c) + (1.0 - y) / (1.0 - c));
    });
  }

  /// -log softmax(logits)[cls], computed via log-sum-exp.
  TensorPtr categorical_ce(const TensorPtr& logits, std::size_t cls) {
    require_vec("categorical_ce", logits);
    const std::size_t c = logits->numel();
    if (c == 0) throw DimensionError("categorical_ce: empty logits");
    if (cls >= c)
      throw IndexError("categorical_ce: class " + std::to_string(cls) +
                       " out of range for " + std::to_string(c) + " logits");
    double m = logits->data[0];
    for (const double v : logits->data) m = std::max(m, v);
    double se = 0.0;
    for (const double v : logits->data) se += std::exp(v - m);
    const double lse = m + std::log(se);
    auto out = Tensor::scalar(lse - logits->data[cls]);
    return finish("categorical_ce", out, {logits}, [logits, out, cls, m, se] {
      if (!logits->requires_grad) return;
      const double g = out->grad[0];
      for (std::size_t i = 0; i < logits->numel(); ++i) {
        const double p = std::exp(logits->data[i] - m) / se;
        logits->grad[i] += g * (p - (i == cls ? 1.0 : 0.0));
      }
    });
  }

  // ---- backward ----

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Parameters
  /// never reached keep their zero gradient. A record can be replayed once.
  void backward(const TensorPtr& loss) {
    if (!loss->is_scalar())
      throw ContractError("backward: loss must be scalar, got " +
                          shape_str(loss->shape));
    if (consumed_) throw ContractError("backward: record already replayed");
    consumed_ = true;
    if (!loss->requires_grad) return;  // fully detached graph: all grads zero
    loss->grad[0] += 1.0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) it->back();
  }

 private:
  struct Step {
    const char* kernel;
    std::function<void()> back;
  };

  static constexpr double kLayerNormEps = 1e-5;
  static constexpr double kProbClamp = 1e-7;

  std::vector<Step> tape_;
  bool grad_enabled_;
  bool consumed_ = false;

  static void require_matrix(const char* op, const TensorPtr& t) {
    if (!t->is_matrix())
      throw DimensionError(std::string(op) + ": expected matrix, got " +
                           shape_str(t->shape));
  }
  static void require_vec(const char* op, const TensorPtr& t) {
    if (!t->is_vector())
      throw DimensionError(std::string(op) + ": expected vector, got " +
                           shape_str(t->shape));
  }
  static void require_same_shape(const char* op, const TensorPtr& a,
                                 const TensorPtr& b) {
    if (a->shape != b->shape)
      throw DimensionError(std::string(op) + ": shape mismatch, " +
                           shape_str(a->shape) + " vs " + shape_str(b->shape));
  }

  static void softmax_fill(const double* x, double* out, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::exp(x[i] - m);
      s += out[i];
    }
    // Floor underflowed entries at the smallest normal double: outputs are
    // contractually positive, and the perturbation to the sum is ~1e-308.
    for (std::size_t i = 0; i < n; ++i)
      out[i] = std::max(out[i] / s, std::numeric_limits<double>::min());
  }

  static void softmax_backward(const double* p, const double* dp, double* dx,
                               std::size_t n) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += dp[i] * p[i];
    for (std::size_t i = 0; i < n; ++i) dx[i] += p[i] * (dp[i] - dot);
  }

  TensorPtr finish(const char* kernel, TensorPtr out,
                   std::initializer_list<TensorPtr> inputs,
                   std::function<void()> back) {
    return finish_impl(kernel, std::move(out), inputs, std::move(back));
  }

  TensorPtr finish(const char* kernel, TensorPtr out,
                   const std::vector<TensorPtr>& inputs,
                   std::function<void()> back) {
    return finish_impl(kernel, std::move(out), inputs, std::move(back));
  }

  template <class Range>
  TensorPtr finish_impl(const char* kernel, TensorPtr out, const Range& inputs,
                        std::function<void()> back) {
    for (const double v : out->data) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string("kernel '") + kernel +
                           "' produced a non-finite value");
      }
    }
    if (grad_enabled_) {
      bool needs = false;
      for (const auto& in : inputs)
        if (in->requires_grad) {
          needs = true;
          break;
        }
      if (needs) {
        out->requires_grad = true;
        out->ensure_grad();
        tape_.push_back({kernel, std::move(back)});
      }
    }
    return out;
  }
};

/// RAII toggle for Graph::set_grad_enabled, used to cut gradient flow at
/// frozen-layer boundaries.
class GradMode {
 public:
  GradMode(Graph& g, bool on) : g_(g), prev_(g.grad_enabled()) {
    g_.set_grad_enabled(on);
  }
  ~GradMode() { g_.set_grad_enabled(prev_); }
  GradMode(const GradMode&) = delete;
  GradMode& operator=(const GradMode&) = delete;

 private:
  Graph& g_;
  bool prev_;
};

}  // namespace mtlrank::num
