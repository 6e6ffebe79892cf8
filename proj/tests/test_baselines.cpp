#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "okra/baselines.hpp"

using namespace okra;
using namespace okra::baselines;
using kg::EntityKind;

TEST(Random, EmptyAndDeterministic) {
  EXPECT_TRUE(random_ranker("c", 0, 1).empty());
  EXPECT_EQ(random_ranker("c", 7, 1), random_ranker("c", 7, 1));
  EXPECT_NE(random_scores("c", 7, 1), random_scores("d", 7, 1));
  for (double s : random_scores("c", 50, 3)) {
    EXPECT_GE(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Random, UniformFirstPlace) {
  std::vector<int> first(3, 0);
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) ++first[random_ranker("cand", 3, static_cast<std::uint64_t>(seed))[0]];
  for (int f : first) EXPECT_NEAR(static_cast<double>(f) / n, 1.0 / 3.0, 0.02);
}

TEST(TfIdf, HandComputedTable) {
  const std::vector<std::string> docs{"a b", "a c", "b b d"};
  TfIdfIndex index;
  index.fit(docs);
  EXPECT_EQ(index.document_count(), 3u);
  EXPECT_EQ(index.vocabulary_size(), 4u);
  const double ia = std::log(4.0 / 3.0) + 1, ic = std::log(2.0) + 1;
  EXPECT_DOUBLE_EQ(index.idf("a"), ia);
  EXPECT_DOUBLE_EQ(index.idf("d"), ic);

  // query "a c" against each document
  const double q = std::hypot(ia, ic);
  const double d0 = std::hypot(ia, ia), d2 = std::hypot(2 * ia, ic);
  const auto ranked = tfidf_rank(index, "A, c!", docs);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].index, 1u);
  EXPECT_NEAR(ranked[0].score, 1.0, 1e-12);
  EXPECT_EQ(ranked[1].index, 0u);
  EXPECT_NEAR(ranked[1].score, ia * ia / (q * d0), 1e-12);
  EXPECT_EQ(ranked[2].index, 2u);
  EXPECT_NEAR(ranked[2].score, 0.0, 1e-12);

  const auto v = index.vectorize("b b d");
  EXPECT_NEAR(v.at("b"), 2 * ia / d2, 1e-12);
  EXPECT_NEAR(v.at("d"), ic / d2, 1e-12);
}

TEST(TfIdf, UnseenTokensAndZeroVectors) {
  TfIdfIndex index;
  index.fit(std::vector<std::string>{"welder forklift", "nurse"});
  EXPECT_TRUE(index.vectorize("astronaut").empty());
  EXPECT_EQ(cosine(index.vectorize("astronaut"), index.vectorize("nurse")), 0.0);
  EXPECT_EQ(cosine(index.vectorize("welder"), index.vectorize("nurse")), 0.0);
}

TEST(TfIdf, TiesKeepInputOrder) {
  TfIdfIndex index;
  const std::vector<std::string> docs{"x y", "x y", "z"};
  index.fit(docs);
  const auto r = tfidf_rank(index, "x", docs);
  EXPECT_EQ(r[0].index, 0u);
  EXPECT_EQ(r[1].index, 1u);
}

TEST(TfIdf, DuplicationInvariance) {
  std::mt19937_64 rng(6);
  const std::vector<std::string> vocab{"weld", "nurse", "drive", "cook", "code", "sell", "lift", "care"};
  auto doc = [&] {
    std::string s;
    for (int i = 0; i < 5; ++i) s += vocab[rng() % vocab.size()] + " ";
    return s;
  };
  std::vector<std::string> docs;
  for (int i = 0; i < 12; ++i) docs.push_back(doc());
  TfIdfIndex index;
  index.fit(docs);
  for (int t = 0; t < 20; ++t) {
    const std::string cv = doc();
    std::vector<std::string> tripled;
    for (const auto& d : docs) tripled.push_back(d + d + d);
    const auto a = tfidf_rank(index, cv, docs);
    const auto b = tfidf_rank(index, cv + cv, tripled);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i].score, b[i].score, 1e-12);
    }
  }
}

TEST(GraphBaselines, FactoryAndParamCounts) {
  model::ModelConfig c;
  c.text_dim = 8;
  c.node_dim = 6;
  c.hash_buckets = 32;
  c.relation_count = 3;
  model::OkraModel okra(c);
  const auto g1 = make_graph_baseline("gtrans1", c);
  const auto g2 = make_graph_baseline("gtrans2", c);
  const auto ab = make_graph_baseline("ablation", c);
  EXPECT_EQ(g1->depth(), 1u);
  EXPECT_EQ(g2->depth(), 2u);
  EXPECT_EQ(ab->kind(), "ablation");
  EXPECT_LT(g1->params().scalar_count(), g2->params().scalar_count());
  EXPECT_LT(g2->params().scalar_count(), okra.params().scalar_count());
  EXPECT_EQ(ab->params().snapshot(), g2->params().snapshot());
  EXPECT_THROW(make_graph_baseline("gtrans3", c), ConfigError);
}

TEST(GraphBaselines, AblationScoresEqualGtrans2) {
  model::ModelConfig c;
  c.text_dim = 8;
  c.node_dim = 6;
  c.hash_buckets = 32;
  c.relation_count = 2;
  model::FeatureStore f;
  f.add("c", EntityKind::Candidate);
  f.add("v", EntityKind::Vacancy);
  f.add("s", EntityKind::Skill);
  sampler::PairSubGraph s;
  s.nodes = {{0, EntityKind::Candidate, "c"}, {1, EntityKind::Vacancy, "v"}, {2, EntityKind::Skill, "s"}};
  s.edges = {{0, 2, 0}, {1, 2, 1}};
  s.main_vacancy = 1;
  const auto batch = model::GraphBatch::build(std::span(&s, 1));
  const auto g2 = make_graph_baseline("gtrans2", c);
  const auto ab = make_graph_baseline("ablation", c);
  ad::Tape t1, t2;
  EXPECT_EQ(g2->score(t1, batch, f).item(), ab->score(t2, batch, f).item());
  EXPECT_LE(std::abs(g2->score(t1, batch, f).item()), c.score_bound);
}
