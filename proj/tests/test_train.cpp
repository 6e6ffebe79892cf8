#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "okra/train.hpp"

using namespace okra;
using namespace okra::train;
using kg::EntityKind;
using sampler::PairSubGraph;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig c;
  c.text_dim = 8;
  c.node_dim = 6;
  c.hash_buckets = 32;
  c.relation_count = 2;
  c.seed = 9;
  return c;
}

model::FeatureStore features() {
  model::FeatureStore f;
  for (int i = 0; i < 4; ++i) f.add("c" + std::to_string(i), EntityKind::Candidate);
  for (int i = 0; i < 4; ++i) f.add("v" + std::to_string(i), EntityKind::Vacancy);
  for (int i = 0; i < 4; ++i) f.add("s" + std::to_string(i), EntityKind::Skill);
  return f;
}

PairSubGraph pair(const std::string& c, const std::string& v, const std::string& skill, int label) {
  PairSubGraph s;
  s.nodes = {{0, EntityKind::Candidate, c}, {1, EntityKind::Vacancy, v}, {2, EntityKind::Skill, skill}};
  s.edges = {{0, 2, 0}, {1, 2, 1}};
  s.main_candidate = 0;
  s.main_vacancy = 1;
  s.label = label;
  s.candidate_key = c;
  s.vacancy_key = v;
  return s;
}

std::vector<PairSubGraph> corpus() {
  std::vector<PairSubGraph> out;
  for (int c = 0; c < 4; ++c) {
    for (int v = 0; v < 4; ++v) {
      out.push_back(pair("c" + std::to_string(c), "v" + std::to_string(v), "s" + std::to_string((c + v) % 4),
                         (c + v) % 4 == 0 ? 3 : (v % 2 ? 0 : 1)));
    }
  }
  return out;
}

}  // namespace

TEST(LambdaRank, ToyGradient) {
  const std::vector<double> s{0.0, 0.0};
  const std::vector<int> l{1, 0};
  const auto g = lambdarank_grads(s, l, 1.0, 2);
  const double expected = 0.5 * (1.0 - 1.0 / std::log2(3.0));
  EXPECT_NEAR(std::abs(g[0]), 0.18454, 1e-5);
  EXPECT_NEAR(std::abs(g[0]), expected, 1e-12);
  EXPECT_LT(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[0], -g[1]);
}

TEST(LambdaRank, EqualLabelsGiveZero) {
  const auto g = lambdarank_grads(std::vector<double>{0.3, -1.0, 2.0}, std::vector<int>{2, 2, 2});
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(LambdaRank, SaturatesForLargeMargin) {
  const auto g = lambdarank_grads(std::vector<double>{20.0, 0.0}, std::vector<int>{1, 0}, 1.0, 2);
  EXPECT_LT(std::abs(g[0]), 1e-8);
  EXPECT_LT(std::abs(g[1]), 1e-8);
}

TEST(LambdaRank, GradientsSumToZero) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> lab(-1, 5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t len = 2 + rng() % 10;
    std::vector<double> s(len);
    std::vector<int> l(len);
    for (std::size_t i = 0; i < len; ++i) {
      s[i] = n(rng);
      l[i] = lab(rng);
    }
    double sum = 0.0, mag = 0.0;
    for (double g : lambdarank_grads(s, l)) {
      sum += g;
      mag += std::abs(g);
    }
    EXPECT_NEAR(sum, 0.0, 1e-12 * std::max(1.0, mag));
  }
}

TEST(LambdaRank, DescentRaisesBetterItem) {
  std::vector<double> s{0.0, 0.5, -0.2};
  const std::vector<int> l{4, 0, 1};
  for (int step = 0; step < 200; ++step) {
    const auto g = lambdarank_grads(s, l);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= 0.5 * g[i];
  }
  EXPECT_GT(s[0], s[2]);
  EXPECT_GT(s[2], s[1]);
  EXPECT_LT(lambdarank_loss(s, l), lambdarank_loss(std::vector<double>{0.0, 0.5, -0.2}, l));
}

TEST(LambdaRank, RaggedInput) {
  EXPECT_THROW(lambdarank_grads(std::vector<double>{1.0}, std::vector<int>{1, 0}), ShapeMismatch);
}

TEST(Adam, FirstStepIsLearningRate) {
  model::ParamSet p;
  auto w = p.add_constant("w", {3}, 0.0);
  for (auto& g : w.grad()) g = 1.0;
  TrainConfig c;
  c.learning_rate = 0.1;
  AdamState st;
  adam_step(p, st, c);
  for (double x : w.data()) EXPECT_NEAR(x, -0.1, 1e-6);
}

TEST(Adam, ZeroGradientLeavesParams) {
  model::ParamSet p;
  auto w = p.add_constant("w", {2}, 1.5);
  TrainConfig c;
  AdamState st;
  adam_step(p, st, c);
  for (double x : w.data()) EXPECT_EQ(x, 1.5);
}

TEST(Adam, ConstantGradientStepsStayNearLr) {
  model::ParamSet p;
  auto w = p.add_constant("w", {1}, 0.0);
  TrainConfig c;
  c.learning_rate = 0.01;
  AdamState st;
  double prev = 0.0;
  for (int i = 0; i < 2; ++i) {
    w.grad()[0] = -3.0;
    adam_step(p, st, c);
    EXPECT_NEAR(w.data()[0] - prev, 0.01, 1e-6);
    prev = w.data()[0];
  }
}

TEST(Adam, NonFiniteGradientLeavesParams) {
  model::ParamSet p;
  auto a = p.add_constant("a", {2}, 1.0);
  auto b = p.add_constant("b", {2}, 2.0);
  a.grad()[0] = 1.0;
  b.grad()[1] = std::nan("");
  TrainConfig c;
  AdamState st;
  EXPECT_THROW(adam_step(p, st, c), NonFiniteGradient);
  EXPECT_EQ(a.data()[0], 1.0);
  EXPECT_EQ(b.data()[0], 2.0);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Train, GroupsByCandidate) {
  const auto data = corpus();
  const auto g = make_groups(data);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[0].key, "c0");
  EXPECT_EQ(g[0].items.size(), 4u);
  EXPECT_EQ(make_groups(data, true)[1].items[0]->vacancy_key, "v1");
}

TEST(Train, ToyPairReachesPerfectNdcg) {
  const auto f = features();
  std::vector<PairSubGraph> data{pair("c0", "v0", "s0", -1), pair("c0", "v1", "s1", 5)};
  model::OkraModel m(small_config());
  TrainConfig c;
  c.epochs = 50;
  c.learning_rate = 1e-3;
  const auto r = train::train(m, f, data, {}, c);
  const auto groups = make_groups(data);
  EXPECT_EQ(mean_ndcg(m, groups, f), 1.0);
  EXPECT_EQ(r.history.size(), 51u);
}

TEST(Train, DeterministicHistory) {
  const auto f = features();
  const auto data = corpus();
  auto run = [&] {
    model::OkraModel m(small_config());
    TrainConfig c;
    c.epochs = 3;
    c.learning_rate = 1e-3;
    c.seed = 2;
    auto r = train::train(m, f, std::span(data).subspan(0, 12), std::span(data).subspan(12), c);
    std::ostringstream out;
    for (auto& h : r.history) h.seconds = 0;
    write_history_csv(r.history, out);
    return std::make_pair(out.str(), m.params().snapshot());
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Train, EmptyCorpus) {
  const auto f = features();
  model::OkraModel m(small_config());
  std::vector<PairSubGraph> flat{pair("c0", "v0", "s0", 1), pair("c0", "v1", "s1", 1)};
  EXPECT_THROW(train::train(m, f, flat, {}, TrainConfig{}), EmptyCorpus);
  EXPECT_THROW(train::train(m, f, {}, {}, TrainConfig{}), EmptyCorpus);
}

TEST(Checkpoint, RoundTrip) {
  model::OkraModel a(small_config());
  auto cfg = small_config();
  cfg.seed = 77;
  model::OkraModel b(cfg);
  ASSERT_NE(a.params().snapshot(), b.params().snapshot());
  std::stringstream buf;
  write_checkpoint(a.params(), "digest-1", buf);
  EXPECT_EQ(read_checkpoint(b.params(), buf, std::string("digest-1")), "digest-1");
  EXPECT_EQ(a.params().snapshot(), b.params().snapshot());
}

TEST(Checkpoint, Errors) {
  model::OkraModel a(small_config());
  std::stringstream buf;
  write_checkpoint(a.params(), "digest-1", buf);
  const std::string bytes = buf.str();
  {
    std::istringstream in(bytes);
    EXPECT_THROW(read_checkpoint(a.params(), in, std::string("other")), DigestMismatch);
  }
  {
    std::istringstream in(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_checkpoint(a.params(), in), FormatError);
  }
  {
    std::istringstream in("not a checkpoint at all");
    EXPECT_THROW(read_checkpoint(a.params(), in), FormatError);
  }
  auto cfg = small_config();
  cfg.node_dim = 4;
  model::OkraModel other(cfg);
  std::istringstream in(bytes);
  EXPECT_THROW(read_checkpoint(other.params(), in), FormatError);
}

TEST(Search, DeterministicAndArgmax) {
  auto objective = [](const model::ModelConfig& m, const TrainConfig& t) {
    return static_cast<double>(m.text_dim + m.node_dim) + std::log10(t.learning_rate);
  };
  const auto a = random_search(small_config(), TrainConfig{}, 12, 5, objective);
  const auto b = random_search(small_config(), TrainConfig{}, 12, 5, objective);
  ASSERT_EQ(a.trials.size(), 12u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].train.learning_rate, b.trials[i].train.learning_rate);
    EXPECT_EQ(a.trials[i].model.text_dim, b.trials[i].model.text_dim);
    const auto& t = a.trials[i];
    EXPECT_TRUE(t.model.text_dim == 64 || t.model.text_dim == 128);
    EXPECT_TRUE(t.model.node_dim == 16 || t.model.node_dim == 32);
    EXPECT_GE(t.train.learning_rate, 1e-5);
    EXPECT_LE(t.train.learning_rate, 1e-3);
    EXPECT_LE(t.validation_ndcg, a.best_trial().validation_ndcg);
  }
  const auto one = random_search(small_config(), TrainConfig{}, 1, 5, objective);
  EXPECT_EQ(one.best, 0u);
  EXPECT_EQ(one.trials[0].train.learning_rate, a.trials[0].train.learning_rate);
  EXPECT_THROW(random_search(small_config(), TrainConfig{}, 0, 5, objective), ConfigError);
}
