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

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "mtlrank/numerics/params.hpp"
#include "mtlrank/text/encoder.hpp"
#include "mtlrank/text/semantic.hpp"
#include "mtlrank/text/vocab.hpp"

using namespace mtlrank;
using num::Graph;
using num::ParamRegistry;
using num::Rng;
using num::Tensor;
using text::TextEncoder;
using text::TextEncoderConfig;
using text::Vocabulary;

namespace {

Vocabulary demo_vocab() {
  return Vocabulary::build({"red shoes", "red running shoes", "blue mug"}, 64);
}

TextEncoderConfig small_config(std::size_t trainable) {
  TextEncoderConfig cfg;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.ff_dim = 16;
  cfg.max_seq_len = 6;
  cfg.trainable_layers = trainable;
  return cfg;
}

}  // namespace

TEST(Vocabulary, ReservedIdsAndLookup) {
  const auto vocab = demo_vocab();
  EXPECT_EQ(vocab.id("red"), 3 + 0);  // most frequent token gets the first slot
  EXPECT_EQ(vocab.id("never-seen"), Vocabulary::kUnk);
  EXPECT_GE(vocab.size(), 4u);
}

TEST(Tokenize, BasicCases) {
  const auto vocab = demo_vocab();
  const auto ids = text::tokenize("Red SHOES", vocab, 16);
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], vocab.id("red"));
  EXPECT_EQ(ids[1], vocab.id("shoes"));

  EXPECT_TRUE(text::tokenize("", vocab, 16).empty());
  EXPECT_EQ(text::tokenize("zzzz", vocab, 16),
            (std::vector<int>{Vocabulary::kUnk}));
  EXPECT_EQ(text::tokenize("red red red", vocab, 2).size(), 2u);
}

TEST(Vocabulary, CapRespectsMaxVocab) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 100; ++i)
    corpus.push_back("tok" + std::to_string(i) + " tok" + std::to_string(i));
  const auto vocab = Vocabulary::build(corpus, 20);
  EXPECT_EQ(vocab.size(), 20u);
}

TEST(TextEncoder, DeterministicAndShaped) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(1), 32, reg);
  Graph g(false);
  const std::vector<int> toks = {3, 4, 5};
  auto a = enc.encode(g, toks);
  Graph g2(false);
  auto b = enc.encode(g2, toks);
  EXPECT_EQ(a->shape, (std::vector<std::size_t>{8}));
  EXPECT_EQ(a->data, b->data);
}

TEST(TextEncoder, PositionalEmbeddingsBreakBagOfWords) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(1), 32, reg);
  Graph g(false);
  auto ab = enc.encode(g, std::vector<int>{3, 4});
  auto ba = enc.encode(g, std::vector<int>{4, 3});
  EXPECT_NE(ab->data, ba->data);
}

TEST(TextEncoder, EmptySequenceEncodesPadAlone) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(1), 32, reg);
  Graph g(false);
  auto empty = enc.encode(g, std::vector<int>{});
  auto pad = enc.encode(g, std::vector<int>{Vocabulary::kPad});
  EXPECT_EQ(empty->data, pad->data);
}

TEST(TextEncoder, OverLengthTruncatesAndCounts) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(1), 32, reg);
  Graph g(false);
  const std::vector<int> six = {3, 4, 5, 3, 4, 5};
  std::vector<int> eight = six;
  eight.push_back(6);
  eight.push_back(7);
  auto a = enc.encode(g, six);
  auto b = enc.encode(g, eight);
  EXPECT_EQ(a->data, b->data);
  EXPECT_EQ(enc.truncation_count(), 1u);
}

TEST(TextEncoder, FrozenEncoderHasExactlyZeroGradients) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(0), 32, reg);
  Graph g;
  auto out = enc.encode(g, std::vector<int>{3, 4, 5});
  auto target = Tensor::vector(std::vector<double>(8, 0.5));
  g.backward(g.sum(g.mul(out, target)));
  for (const auto& e : reg.entries()) {
    EXPECT_FALSE(e.trainable);
    for (const double gv : e.tensor->grad) EXPECT_DOUBLE_EQ(gv, 0.0);
  }
}

TEST(TextEncoder, PartialFreezeSplitsGradientFlow) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(1), 32, reg);  // bottom of 2 blocks frozen
  Graph g;
  auto out = enc.encode(g, std::vector<int>{3, 4, 5});
  auto target = Tensor::vector(std::vector<double>(8, 0.5));
  g.backward(g.sum(g.mul(out, target)));

  double block0_grad = 0.0, block1_grad = 0.0, embed_grad = 0.0;
  for (const auto& e : reg.entries()) {
    double s = 0.0;
    for (const double gv : e.tensor->grad) s += std::fabs(gv);
    if (e.name.find("block0") != std::string::npos) block0_grad += s;
    if (e.name.find("block1") != std::string::npos) block1_grad += s;
    if (e.name.find("tokens") != std::string::npos ||
        e.name.find("positions") != std::string::npos)
      embed_grad += s;
  }
  EXPECT_DOUBLE_EQ(block0_grad, 0.0);
  EXPECT_DOUBLE_EQ(embed_grad, 0.0);
  EXPECT_GT(block1_grad, 0.0);
}

TEST(TextEncoder, FullyTrainableEmbeddingsGetGradient) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(2), 32, reg);
  Graph g;
  auto out = enc.encode(g, std::vector<int>{3, 4});
  g.backward(g.sum(out));
  double embed_grad = 0.0;
  for (const auto& e : reg.entries()) {
    EXPECT_TRUE(e.trainable);
    if (e.name.find("tokens") != std::string::npos)
      for (const double gv : e.tensor->grad) embed_grad += std::fabs(gv);
  }
  EXPECT_GT(embed_grad, 0.0);
}

TEST(TextEncoder, TrainablePortionPassesGradCheck) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(2), 16, reg);
  std::vector<num::TensorPtr> params;
  for (const auto& e : reg.entries()) params.push_back(e.tensor);
  const std::vector<int> toks = {3, 4, 5};
  const auto rep = gradcheck::compare(params, [&](Graph& g) {
    auto out = enc.encode(g, toks);
    return g.sum(g.mul(out, out));
  });
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst;
}

TEST(Matching, CrossSemantics) {
  Graph g;
  auto m = text::match_cross(g, Tensor::vector({1, 2}), Tensor::vector({3, 4}));
  EXPECT_EQ(m->data, (std::vector<double>{3, 8}));

  auto z = text::match_cross(g, Tensor::vector({5, 7}), Tensor::vector({0, 0}));
  EXPECT_EQ(z->data, (std::vector<double>{0, 0}));

  EXPECT_THROW(
      text::match_cross(g, Tensor::vector({1}), Tensor::vector({1, 2})),
      DimensionError);
}

TEST(Matching, DotSemantics) {
  Graph g;
  auto d = text::match_dot(g, Tensor::vector({1, 2}), Tensor::vector({3, 4}));
  EXPECT_DOUBLE_EQ(d->data[0], 11.0);
  auto o = text::match_dot(g, Tensor::vector({1, 0}), Tensor::vector({0, 1}));
  EXPECT_DOUBLE_EQ(o->data[0], 0.0);
  auto sq = text::match_dot(g, Tensor::vector({-2, 3}), Tensor::vector({-2, 3}));
  EXPECT_GE(sq->data[0], 0.0);
}

TEST(Matching, SumOfCrossEqualsDot) {
  // Dot-product identity oracle on random vectors.
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    auto a = gradcheck::random_tensor({16}, rng, false, -2.0, 2.0);
    auto b = gradcheck::random_tensor({16}, rng, false, -2.0, 2.0);
    Graph g;
    auto cross = text::match_cross(g, a, b);
    auto dot = text::match_dot(g, a, b);
    double s = 0.0;
    for (const double v : cross->data) s += v;
    const double denom = std::max(1.0, std::fabs(dot->data[0]));
    EXPECT_LT(std::fabs(s - dot->data[0]) / denom, 1e-12);
  }
}

TEST(Semantic, SelfSimilarityIsOne) {
  text::SemanticScorer scorer;
  EXPECT_NEAR(scorer.score_texts("red shoes", "red shoes"), 1.0, 1e-12);
  for (const char* s : {"a", "mug", "wide ceramic bowl"})
    EXPECT_NEAR(scorer.score_texts(s, s), 1.0, 1e-12);
}

TEST(Semantic, DisjointNgramsScoreZero) {
  text::SemanticScorer scorer;
  // No shared character trigram between the two (verified by construction:
  // disjoint alphabets).
  EXPECT_DOUBLE_EQ(scorer.score_texts("aaaa", "bbbb"), 0.0);
  EXPECT_DOUBLE_EQ(scorer.score_texts("", ""), 0.0);
  EXPECT_DOUBLE_EQ(scorer.score_texts("abc", ""), 0.0);
}

TEST(Semantic, OnTopicBeatsOffTopic) {
  text::SemanticScorer scorer;
  data::ProductRecord shoes{"p1", "red running shoes", "acme", "red",
                            "adult", "footwear", 59.9, 4.2, {}, {}};
  data::ProductRecord mug{"p2", "blue ceramic mug", "mugco", "blue",
                          "all", "kitchen", 12.0, 4.8, {}, {}};
  // Hash oracle: both scores computed with the same embedding; the on-topic
  // document must win.
  const double on = scorer.score("red shoes", shoes);
  const double off = scorer.score("red shoes", mug);
  EXPECT_GT(on, off);
  EXPECT_LE(std::fabs(on), 1.0 + 1e-12);
  EXPECT_LE(std::fabs(off), 1.0 + 1e-12);
}

TEST(Semantic, EncoderCosineVariantUsesTheHook) {
  ParamRegistry reg(5);
  TextEncoder enc(small_config(1), 32, reg);
  const auto vocab = demo_vocab();
  text::SemanticScorerConfig cfg;
  cfg.variant = text::SemanticScorerConfig::Variant::encoder_cosine;
  text::SemanticScorer scorer(cfg, [&](const std::string& s) {
    Graph g(false);
    return enc.encode(g, text::tokenize(s, vocab, 6))->data;
  });
  EXPECT_NEAR(scorer.score_texts("red shoes", "red shoes"), 1.0, 1e-12);
  const text::SemanticScorer hash_scorer;
  EXPECT_NE(scorer.score_texts("red shoes", "blue mug"),
            hash_scorer.score_texts("red shoes", "blue mug"));
}

TEST(Semantic, BoundedByOne) {
  text::SemanticScorer scorer;
  Rng rng(17);
  const std::vector<std::string> words = {"red",  "blue", "mug",   "shoe",
                                          "sock", "bowl", "night", "lamp"};
  for (int rep = 0; rep < 50; ++rep) {
    std::string a, b;
    for (int i = 0; i < 4; ++i) {
      a += words[rng.below(words.size())] + " ";
      b += words[rng.below(words.size())] + " ";
    }
    EXPECT_LE(std::fabs(scorer.score_texts(a, b)), 1.0 + 1e-12);
  }
}
