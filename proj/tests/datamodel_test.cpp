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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "mtlrank/data/embedding.hpp"
#include "mtlrank/data/encode.hpp"
#include "mtlrank/data/jsonl.hpp"
#include "mtlrank/data/records.hpp"
#include "mtlrank/data/schema.hpp"
#include "mtlrank/numerics/params.hpp"

using namespace mtlrank;
using data::CtrLookup;
using data::Dataset;
using data::EncodedExample;
using data::FeatureSchema;
using num::Graph;
using num::ParamRegistry;
using num::Tensor;

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.queries["q1"] = {"q1", "red shoes"};
  ds.queries["q2"] = {"q2", "ceramic mug"};
  ds.products["p1"] = {"p1", "red running shoes", "acme", "red",
                       "adult", "footwear", 59.9, 4.2,
                       {{"material", "mesh"}}, {{"weight", 0.4}}};
  ds.products["p2"] = {"p2", "blue ceramic mug", "mugco", "blue",
                       "all", "kitchen", 12.0, 4.8,
                       {}, {{"weight", 0.3}}};
  ds.customers["c1"] = {"c1", {{"segment", "a"}}, {{"clicks_30d", 4.0}}};
  ds.customers["c2"] = {"c2", {{"segment", "b"}}, {{"clicks_30d", 0.0}}};
  ds.impressions = {
      {"q1", "p1", "c1", 1, 1, 1, 0, -1},
      {"q1", "p2", "c1", 2, 0, 0, 0, -1},
      {"q2", "p2", "c2", 1, 1, 0, 0, -1},
      {"q2", "p1", "c2", 2, 0, 0, 0, -1},
  };
  return ds;
}

struct EncodeContext {
  Dataset ds = tiny_dataset();
  FeatureSchema schema;
  CtrLookup ctr;
  text::SemanticScorer scorer;
  text::Vocabulary vocab;

  EncodeContext() {
    data::SchemaOptions opt;
    opt.embed_dim = 4;
    opt.text_dim = 8;
    schema = data::build_schema(ds, opt);
    ctr = CtrLookup::from_train(ds);
    std::vector<std::string> corpus;
    for (const auto& [_, q] : ds.queries) corpus.push_back(q.text);
    for (const auto& [_, p] : ds.products) corpus.push_back(p.document());
    vocab = text::Vocabulary::build(corpus, 64);
  }

  EncodedExample encode(const data::ImpressionRecord& im) const {
    return data::encode_example(im, ds, schema, ctr, scorer, vocab, 16);
  }
};

}  // namespace

TEST(Embedding, OneHotColumnSelection) {
  FeatureSchema schema;
  schema.categorical.push_back({"category", false, 3, {"a", "b", "c"}, {}});
  schema.categorical.back().rebuild_index();
  ParamRegistry reg(7);
  data::EmbeddingBank bank(schema, reg);

  Graph g;
  auto col = bank.embed(g, 0, 2);
  const auto& table = bank.table(0);  // 3 x 4
  ASSERT_EQ(table->shape, (std::vector<std::size_t>{3, 4}));
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_DOUBLE_EQ(col->data[i], table->at(i, 2));

  // Exactly matmul(table, one_hot(2)).
  auto onehot = Tensor::matrix(4, 1, {0, 0, 1, 0});
  auto via_matmul = g.matmul(table, onehot);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_DOUBLE_EQ(col->data[i], via_matmul->data[i]);
}

TEST(Embedding, OutOfVocabularyFallsBackToUnknown) {
  FeatureSchema schema;
  schema.categorical.push_back({"category", false, 2, {"a"}, {}});
  schema.categorical.back().rebuild_index();
  ParamRegistry reg(7);
  data::EmbeddingBank bank(schema, reg);
  Graph g;
  auto unk = bank.embed(g, 0, 0);
  auto oov = bank.embed(g, 0, 99);
  EXPECT_EQ(unk->data, oov->data);
}

TEST(Embedding, GradientIsOneOnSelectedColumn) {
  FeatureSchema schema;
  schema.categorical.push_back({"category", false, 3, {"a", "b", "c"}, {}});
  schema.categorical.back().rebuild_index();
  ParamRegistry reg(7);
  data::EmbeddingBank bank(schema, reg);
  const auto& table = bank.table(0);

  Graph g;
  auto loss = g.sum(bank.embed(g, 0, 1));
  g.backward(loss);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      EXPECT_DOUBLE_EQ(table->grad[r * 4 + c], c == 1 ? 1.0 : 0.0);

  // And against the finite-difference oracle.
  const auto rep = gradcheck::compare(
      {table}, [&](Graph& gg) { return gg.sum(bank.embed(gg, 0, 1)); });
  EXPECT_LT(rep.max_rel_error, 1e-4);
}

TEST(Interaction, ColdStartCtrIsZero) {
  EncodeContext ctx;
  const auto& q2 = ctx.ds.queries["q2"];
  // (q2, p1) is present with zero clicks; a fully unseen pair reads 0 too.
  EXPECT_DOUBLE_EQ(ctx.ctr.ctr("q2", "nonexistent"), 0.0);
  EXPECT_DOUBLE_EQ(ctx.ctr.ctr("q1", "p1"), 1.0);
  const auto v = data::build_interaction_features(
      q2, ctx.ds.products["p1"], ctx.ctr, ctx.scorer, ctx.schema);
  EXPECT_DOUBLE_EQ(v[0], 0.0);
}

TEST(Interaction, TitleOverlapContainment) {
  EXPECT_DOUBLE_EQ(data::title_overlap("red shoes", "red running shoes"), 1.0);
  EXPECT_DOUBLE_EQ(data::title_overlap("red shoes", "blue mug"), 0.0);
  EXPECT_DOUBLE_EQ(data::title_overlap("", "anything"), 0.0);
}

TEST(Interaction, MaskedSemanticSlotReadsZero) {
  EncodeContext ctx;
  data::SchemaOptions opt;
  opt.embed_dim = 4;
  opt.masked_interactions = {data::kSemanticScore};
  const auto masked_schema = data::build_schema(ctx.ds, opt);
  EXPECT_TRUE(masked_schema.interaction[2].masked);
  const auto v = data::build_interaction_features(
      ctx.ds.queries["q1"], ctx.ds.products["p1"], ctx.ctr, ctx.scorer,
      masked_schema);
  EXPECT_DOUBLE_EQ(v[2], 0.0);
  // Unmasked, the same slot is nonzero for an on-topic pair.
  const auto v2 = data::build_interaction_features(
      ctx.ds.queries["q1"], ctx.ds.products["p1"], ctx.ctr, ctx.scorer,
      ctx.schema);
  EXPECT_GT(v2[2], 0.0);
}

TEST(Encode, ShapesFollowSchema) {
  EncodeContext ctx;
  const auto ex = ctx.encode(ctx.ds.impressions[0]);
  EXPECT_EQ(ex.categorical.size(), ctx.schema.categorical.size());
  EXPECT_EQ(ex.continuous.size(), ctx.schema.continuous.size());
  EXPECT_EQ(ex.interaction.size(), 3u);
  EXPECT_FALSE(ex.query_tokens.empty());
}

TEST(Encode, TrainingMeanStandardizesToZero) {
  EncodeContext ctx;
  for (std::size_t i = 0; i < ctx.schema.continuous.size(); ++i) {
    const double mean = ctx.schema.continuous[i].mean;
    EXPECT_DOUBLE_EQ(ctx.schema.standardize(i, mean), 0.0);
  }
}

TEST(Encode, Deterministic) {
  EncodeContext ctx;
  const auto a = ctx.encode(ctx.ds.impressions[1]);
  const auto b = ctx.encode(ctx.ds.impressions[1]);
  EXPECT_EQ(a, b);
}

TEST(Encode, DanglingIdNamesTheId) {
  EncodeContext ctx;
  data::ImpressionRecord im{"q1", "ghost", "c1", 1, 0, 0, 0, -1};
  try {
    ctx.encode(im);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Encode, PureWithRespectToSchema) {
  EncodeContext ctx;
  const auto before = ctx.schema.to_json().dump();
  for (const auto& im : ctx.ds.impressions) ctx.encode(im);
  EXPECT_EQ(before, ctx.schema.to_json().dump());
}

TEST(Schema, RoundTripsThroughJson) {
  EncodeContext ctx;
  const auto j = ctx.schema.to_json();
  const auto back = FeatureSchema::from_json(j);
  EXPECT_EQ(j.dump(), back.to_json().dump());
  EXPECT_EQ(ctx.schema.hash(), back.hash());
}

TEST(Jsonl, EmptyFileIsEmptyDataset) {
  const auto path = std::filesystem::temp_directory_path() / "mtlrank_empty.jsonl";
  std::ofstream(path).close();
  const auto ds = data::load_jsonl(path.string());
  EXPECT_TRUE(ds.impressions.empty());
  std::filesystem::remove(path);
}

TEST(Jsonl, RoundTripPreservesRecords) {
  const auto ds = tiny_dataset();
  const auto path = std::filesystem::temp_directory_path() / "mtlrank_rt.jsonl";
  data::save_jsonl(ds, path.string());
  const auto back = data::load_jsonl(path.string());
  EXPECT_EQ(back.impressions, ds.impressions);
  EXPECT_EQ(back.queries.at("q1"), ds.queries.at("q1"));
  EXPECT_EQ(back.products.at("p1"), ds.products.at("p1"));
  EXPECT_EQ(back.customers.at("c2"), ds.customers.at("c2"));
  std::filesystem::remove(path);
}

TEST(Jsonl, MissingPositionRejectedWithFieldName) {
  const auto path = std::filesystem::temp_directory_path() / "mtlrank_bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"query":{"id":"q","text":"t"},"product":{"id":"p","title":"t","category":"c"},)"
        << R"("customer":{"id":"c"},"labels":{"click":0,"atc":0,"trx":0}})"
        << "\n";
  }
  try {
    data::load_jsonl(path.string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("position"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Jsonl, MalformedLineReportsLineNumber) {
  const auto path = std::filesystem::temp_directory_path() / "mtlrank_mal.jsonl";
  {
    std::ofstream out(path);
    out << "{not json}\n";
  }
  try {
    data::load_jsonl(path.string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  std::filesystem::remove(path);
}
