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

#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "mtlrank/errors.hpp"
#include "mtlrank/numerics/adam.hpp"
#include "mtlrank/numerics/graph.hpp"
#include "mtlrank/numerics/params.hpp"
#include "mtlrank/numerics/rng.hpp"
#include "mtlrank/numerics/tensor.hpp"

using namespace mtlrank;
using num::Adam;
using num::AdamConfig;
using num::Graph;
using num::Rng;
using num::Tensor;
using num::TensorPtr;

TEST(Tensor, ShapeDataInvariant) {
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  auto t = Tensor::matrix(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(t->numel(), 4u);
  EXPECT_DOUBLE_EQ(t->at(1, 0), 3.0);
}

TEST(Matmul, IdentityCase) {
  Graph g;
  auto eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  auto a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  auto c = g.matmul(eye, a);
  EXPECT_EQ(c->data, a->data);
}

TEST(Matmul, DirectArithmetic) {
  Graph g;
  auto a = Tensor::matrix(1, 2, {1, 2});
  auto b = Tensor::matrix(2, 1, {3, 4});
  auto c = g.matmul(a, b);
  ASSERT_EQ(c->numel(), 1u);
  EXPECT_DOUBLE_EQ(c->data[0], 11.0);
}

// Independent oracle: naive triple loop.
static std::vector<double> naive_matmul(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        std::size_t m, std::size_t k,
                                        std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < k; ++t)
        c[i * n + j] += a[i * k + t] * b[t * n + j];
  return c;
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  Rng rng(11);
  auto a = gradcheck::random_tensor({5, 4}, rng, false);
  auto b = gradcheck::random_tensor({4, 3}, rng, false);
  Graph g;
  auto c = g.matmul(a, b);
  const auto expected = naive_matmul(a->data, b->data, 5, 4, 3);
  for (std::size_t i = 0; i < expected.size(); ++i)
    EXPECT_NEAR(c->data[i], expected[i], 1e-12);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Graph g;
  auto a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  auto b = Tensor::matrix(2, 2, {1, 2, 3, 4});
  try {
    g.matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[2x2]"), std::string::npos);
  }
}

TEST(Softmax, UniformOnEqualInputs) {
  Graph g;
  auto p = g.softmax(Tensor::vector({0, 0, 0}));
  for (const double v : p->data) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(Softmax, StableUnderLargeInputs) {
  Graph g;
  auto p = g.softmax(Tensor::vector({1000, 0}));
  EXPECT_NEAR(p->data[0], 1.0, 1e-12);
  EXPECT_NEAR(p->data[1], 0.0, 1e-12);
}

TEST(Softmax, MatchesHighPrecisionOracle) {
  // Oracle: evaluate e^{x_i} / sum in long double.
  const std::vector<double> x = {1, 2, 3};
  long double s = 0.0L;
  std::vector<long double> e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = expl(static_cast<long double>(x[i]));
    s += e[i];
  }
  Graph g;
  auto p = g.softmax(Tensor::vector(x));
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(p->data[i], static_cast<double>(e[i] / s), 1e-12);
  EXPECT_NEAR(p->data[0], 0.09003, 5e-6);
  EXPECT_NEAR(p->data[1], 0.24473, 5e-6);
  EXPECT_NEAR(p->data[2], 0.66524, 5e-6);
}

TEST(Softmax, SumsToOneAcrossMagnitudes) {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rng.below(16);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1e3, 1e3);
    Graph g;
    auto p = g.softmax(Tensor::vector(x));
    double s = 0.0;
    for (const double v : p->data) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Softmax, EmptyInputRejected) {
  Graph g;
  EXPECT_THROW(g.softmax(Tensor::vector({})), DimensionError);
}

TEST(LayerNorm, ZeroVarianceMapsToBias) {
  Graph g;
  auto gain = Tensor::vector({1, 1, 1, 1});
  auto bias = Tensor::vector({0, 0, 0, 0});
  auto y = g.layer_norm(Tensor::vector({1, 1, 1, 1}), gain, bias);
  for (const double v : y->data) EXPECT_DOUBLE_EQ(v, 0.0);

  auto c = Tensor::vector({2.5, 2.5});
  auto y2 = g.layer_norm(Tensor::vector({7, -3}), Tensor::vector({0, 0}), c);
  for (const double v : y2->data) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(LayerNorm, TwoPointOracle) {
  // x = [-1, 1]: mean 0, var 1, so y = x / sqrt(1 + 1e-5).
  const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
  Graph g;
  auto y = g.layer_norm(Tensor::vector({-1, 1}), Tensor::vector({1, 1}),
                        Tensor::vector({0, 0}));
  EXPECT_NEAR(y->data[0], -expected, 1e-15);
  EXPECT_NEAR(y->data[1], expected, 1e-15);
}

TEST(LayerNorm, DegenerateDimRejected) {
  Graph g;
  EXPECT_THROW(g.layer_norm(Tensor::vector({1.0}), Tensor::vector({1.0}),
                            Tensor::vector({0.0})),
               DimensionError);
}

TEST(Elementwise, BasicSemantics) {
  Graph g;
  auto r = g.relu(Tensor::vector({-1, 0, 2}));
  EXPECT_EQ(r->data, (std::vector<double>{0, 0, 2}));

  auto m = g.mul(Tensor::vector({1, 2}), Tensor::vector({3, 4}));
  EXPECT_EQ(m->data, (std::vector<double>{3, 8}));

  auto p = g.max_pool_rows(Tensor::matrix(2, 2, {1, 5, 3, 2}));
  EXPECT_EQ(p->data, (std::vector<double>{3, 5}));

  EXPECT_THROW(g.mul(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})),
               DimensionError);
}

TEST(Losses, BceValues) {
  Graph g;
  auto l = g.bce(Tensor::scalar(0.5), 1.0);
  EXPECT_NEAR(l->data[0], std::log(2.0), 1e-12);

  // Clamp applies below 1e-7.
  auto tiny = g.bce(Tensor::scalar(1e-9), 0.0);
  auto clamped = g.bce(Tensor::scalar(1e-7), 0.0);
  EXPECT_DOUBLE_EQ(tiny->data[0], clamped->data[0]);
}

TEST(Losses, CategoricalCeUniform) {
  Graph g;
  auto l = g.categorical_ce(Tensor::vector({0, 0, 0, 0, 0}), 2);
  EXPECT_NEAR(l->data[0], std::log(5.0), 1e-12);
  EXPECT_THROW(g.categorical_ce(Tensor::vector({0, 0, 0}), 3), IndexError);
}

TEST(Backward, SumGivesOnes) {
  Graph g;
  auto x = Tensor::vector({1, 2, 3}, /*rg=*/true);
  auto loss = g.sum(x);
  g.backward(loss);
  EXPECT_EQ(x->grad, (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareGivesTwoX) {
  Graph g;
  auto x = Tensor::scalar(3.0, /*rg=*/true);
  auto loss = g.sum(g.mul(x, x));
  g.backward(loss);
  EXPECT_DOUBLE_EQ(x->grad[0], 6.0);
}

TEST(Backward, NonScalarLossRejected) {
  Graph g;
  auto x = Tensor::vector({1, 2}, true);
  auto y = g.relu(x);
  EXPECT_THROW(g.backward(y), ContractError);
}

TEST(Backward, ReplayedOnlyOnce) {
  Graph g;
  auto x = Tensor::scalar(2.0, true);
  auto loss = g.sum(x);
  g.backward(loss);
  EXPECT_THROW(g.backward(loss), ContractError);
}

TEST(Backward, UnreachedParamKeepsZeroGrad) {
  Graph g;
  auto x = Tensor::scalar(2.0, true);
  auto unused = Tensor::vector({1, 2}, true);
  auto loss = g.sum(g.mul(x, x));
  g.backward(loss);
  EXPECT_EQ(unused->grad, (std::vector<double>{0, 0}));
}

TEST(Graph, NanIsAnErrorNotAValue) {
  Graph g;
  auto big = Tensor::vector({1e308, 1e308});
  try {
    g.mul(big, big);  // overflows to inf
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("mul"), std::string::npos);
  }
}

// Finite-difference checks for every kernel used by the layers.
TEST(GradCheck, CoreKernels) {
  Rng rng(101);
  for (int rep = 0; rep < 5; ++rep) {
    auto a = gradcheck::random_tensor({3, 4}, rng);
    auto b = gradcheck::random_tensor({4, 2}, rng);
    auto bt = gradcheck::random_tensor({2, 4}, rng);
    auto w = gradcheck::random_tensor({3, 5}, rng);
    auto x5 = gradcheck::random_tensor({5}, rng);
    auto x3 = gradcheck::random_tensor({3}, rng);
    auto gain = gradcheck::random_tensor({4}, rng, true, 0.5, 1.5);
    auto bias = gradcheck::random_tensor({4}, rng);
    auto table = gradcheck::random_tensor({3, 6}, rng);

    struct Case {
      std::vector<TensorPtr> params;
      gradcheck::LossBuilder build;
    };
    const std::vector<Case> cases = {
        {{a, b}, [&](Graph& g) { return g.sum(g.matmul(a, b)); }},
        {{a, bt}, [&](Graph& g) { return g.sum(g.matmul_nt(a, bt)); }},
        {{w, x5}, [&](Graph& g) { return g.sum(g.matvec(w, x5)); }},
        {{w, x3}, [&](Graph& g) { return g.sum(g.matvec_t(w, x3)); }},
        {{x5}, [&](Graph& g) { return g.sum(g.relu(x5)); }},
        {{x5}, [&](Graph& g) { return g.sum(g.mul(g.sigmoid(x5), x5)); }},
        {{x5}, [&](Graph& g) { return g.sum(g.mul(g.softmax(x5), x5)); }},
        {{a}, [&](Graph& g) { return g.sum(g.mul(g.softmax_rows(a), a)); }},
        {{a, gain, bias},
         [&](Graph& g) {
           return g.sum(g.mul(g.layer_norm(a, gain, bias), a));
         }},
        {{a}, [&](Graph& g) { return g.sum(g.max_pool_rows(a)); }},
        {{a, bias}, [&](Graph& g) { return g.sum(g.add_rowwise(a, bias)); }},
        {{x5, x3},
         [&](Graph& g) {
           auto c = g.concat({x5, x3});
           return g.sum(g.mul(c, c));
         }},
        {{x3},
         [&](Graph& g) {
           auto s = g.stack_rows({x3, x3, g.scale(x3, 2.0)});
           return g.sum(g.mul(s, s));
         }},
        {{a}, [&](Graph& g) { return g.sum(g.slice_row(a, 1)); }},
        {{a},
         [&](Graph& g) {
           auto s = g.slice_cols(a, 1, 2);
           return g.sum(g.mul(s, s));
         }},
        {{a, b},
         [&](Graph& g) {
           auto c = g.concat_cols({a, g.matmul(a, b)});
           return g.sum(g.mul(c, c));
         }},
        {{table}, [&](Graph& g) { return g.sum(g.gather_column(table, 2)); }},
        {{table},
         [&](Graph& g) {
           auto s = g.gather_columns(table, {1, 4, 1});
           return g.sum(g.mul(s, s));
         }},
        {{x5},
         [&](Graph& g) { return g.bce(g.sigmoid(g.sum(x5)), 1.0); }},
        {{x5}, [&](Graph& g) { return g.categorical_ce(x5, 3); }},
    };
    for (const auto& c : cases) {
      const auto rep_out = gradcheck::compare(c.params, c.build);
      EXPECT_LT(rep_out.max_rel_error, 1e-4) << rep_out.worst;
    }
  }
}

TEST(GradMode, CutsGradientFlow) {
  Graph g;
  auto w = Tensor::vector({1, 2}, true);
  TensorPtr frozen;
  {
    num::GradMode off(g, false);
    frozen = g.scale(w, 3.0);
  }
  EXPECT_FALSE(frozen->requires_grad);
  auto x = Tensor::vector({1, 1}, true);
  auto loss = g.sum(g.mul(frozen, x));
  g.backward(loss);
  EXPECT_EQ(w->grad, (std::vector<double>{0, 0}));
  EXPECT_EQ(x->grad, (std::vector<double>{3, 6}));
}

TEST(Adam, ZeroGradLeavesParamsUnchanged) {
  auto p = Tensor::vector({1, 2, 3}, true);
  Adam opt({p});
  opt.step();
  EXPECT_EQ(p->data, (std::vector<double>{1, 2, 3}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Oracle: hand-evaluated update. mhat = g, vhat = g^2, so the first step
  // is lr * g / (|g| + eps) = lr for g = 1.
  auto p = Tensor::scalar(0.5, true);
  Adam opt({p});
  p->grad[0] = 1.0;
  opt.step();
  EXPECT_NEAR(p->data[0], 0.5 - 0.001, 1e-9);
}

TEST(Adam, DescendsQuadratic) {
  // Oracle loop: f(x) = x^2 from x = 1 shrinks monotonically.
  auto p = Tensor::scalar(1.0, true);
  Adam opt({p});
  double prev = std::fabs(p->data[0]);
  for (int i = 0; i < 100; ++i) {
    p->zero_grad();
    p->grad[0] = 2.0 * p->data[0];
    opt.step();
    const double cur = std::fabs(p->data[0]);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(Determinism, SameSeedSameBits) {
  auto run = [] {
    num::ParamRegistry reg(1234);
    auto w = reg.glorot("w", {4, 4}, 4, 4);
    auto e = reg.normal("e", {4, 8});
    Graph g;
    auto out = g.matmul(w, g.gather_columns(e, {1, 2, 3, 0}));
    return out->data;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(double)));
}

TEST(ParamRegistry, DuplicateNameRejected) {
  num::ParamRegistry reg(1);
  reg.zeros("w", {2});
  EXPECT_THROW(reg.zeros("w", {2}), ContractError);
}

TEST(ParamRegistry, CensusCountsElements) {
  num::ParamRegistry reg(1);
  reg.zeros("a", {2, 3});
  reg.zeros("b", {4});
  EXPECT_EQ(reg.census(), 10u);
  reg.set_trainable("b", false);
  EXPECT_EQ(reg.trainable_census(), 6u);
  EXPECT_EQ(reg.trainable().size(), 1u);
}
