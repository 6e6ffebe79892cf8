#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "okra/sampler.hpp"

using namespace okra;
using namespace okra::kg;
using namespace okra::sampler;

namespace {

KnowledgeGraph star_graph() {
  KnowledgeGraph g;
  const auto has = g.register_relation("has_skill").id, req = g.register_relation("requires_skill").id;
  const auto c = g.add_entity(EntityKind::Candidate, "c"), s = g.add_entity(EntityKind::Skill, "s"),
             v = g.add_entity(EntityKind::Vacancy, "v");
  g.add_triple({c, has, s});
  g.add_triple({v, req, s});
  return g;
}

// A connected random graph of candidates, vacancies and skills plus a long
// tail so that walks can run past 7 hops.
KnowledgeGraph random_graph(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KnowledgeGraph g;
  const auto has = g.register_relation("has_skill").id, req = g.register_relation("requires_skill").id,
             next = g.register_relation("next").id;
  std::vector<EntityId> skills;
  for (int i = 0; i < 12; ++i) skills.push_back(g.add_entity(EntityKind::Skill, "s" + std::to_string(i)));
  std::uniform_int_distribution<std::size_t> pick(0, skills.size() - 1);
  for (int i = 0; i < 6; ++i) {
    const auto c = g.add_entity(EntityKind::Candidate, "c" + std::to_string(i));
    const auto v = g.add_entity(EntityKind::Vacancy, "v" + std::to_string(i));
    for (int k = 0; k < 3; ++k) {
      g.add_triple({c, has, skills[pick(rng)]});
      g.add_triple({v, req, skills[pick(rng)]});
    }
  }
  EntityId prev = skills.back();
  for (int i = 0; i < 15; ++i) {
    const auto t = g.add_entity(EntityKind::Location, "t" + std::to_string(i));
    g.add_triple({prev, next, t});
    prev = t;
  }
  return g;
}

std::set<std::tuple<std::string, std::string, RelationId>> keyed_edges(const PairSubGraph& s) {
  std::map<std::uint32_t, std::string> ref;
  for (const auto& n : s.nodes) ref[n.local_id] = n.feature_ref;
  std::set<std::tuple<std::string, std::string, RelationId>> out;
  for (const auto& e : s.edges) out.insert({ref.at(e.src), ref.at(e.dst), e.relation});
  return out;
}

}  // namespace

TEST(Sample, IsolatedAnchorsGiveTwoNodes) {
  KnowledgeGraph g;
  g.add_entity(EntityKind::Candidate, "c");
  g.add_entity(EntityKind::Vacancy, "v");
  const auto s = relabel_local(sample_pair_subgraph(g, "c", "v", {}, 1));
  EXPECT_EQ(s.nodes.size(), 2u);
  EXPECT_TRUE(s.edges.empty());
  EXPECT_EQ(s.main_candidate, 0u);
  EXPECT_EQ(s.main_vacancy, 1u);
}

TEST(Sample, MissingAnchorThrows) {
  const auto g = star_graph();
  EXPECT_THROW(sample_pair_subgraph(g, "nope", "v", {}, 1), MissingAnchor);
  EXPECT_THROW(sample_pair_subgraph(g, "c", "nope", {}, 1), MissingAnchor);
}

TEST(Sample, StarGraphReachesVacancyWithinSevenHops) {
  const auto g = star_graph();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = relabel_local(sample_pair_subgraph(g, "c", "v", {7, 1}, seed));
    validate(s);
    const auto d = undirected_distances(s, s.main_candidate);
    EXPECT_EQ(d[s.main_vacancy], 2u);
    for (auto x : d) EXPECT_LE(x, 7u);
  }
}

TEST(Sample, DeterministicPerSeed) {
  const auto g = random_graph(5);
  const auto a = sample_pair_subgraph(g, "c1", "v3", {}, 42);
  const auto b = sample_pair_subgraph(g, "c1", "v3", {}, 42);
  EXPECT_EQ(a, b);
  const WalkIndex index(g);
  EXPECT_EQ(sample_pair_subgraph(index, "c1", "v3", {}, 42), a);
}

TEST(Sample, EdgesPreserveOriginalDirection) {
  const auto g = random_graph(9);
  const auto s = sample_pair_subgraph(g, "c0", "v0", {}, 3);
  for (const auto& e : s.edges) EXPECT_TRUE(g.contains({e.src, e.relation, e.dst}));
}

TEST(Sample, NodesWithinPathLengthOfAnAnchor) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = random_graph(seed % 7);
    const std::size_t k = 1 + seed % 7;
    const auto s = relabel_local(
        sample_pair_subgraph(g, "c" + std::to_string(seed % 6), "v" + std::to_string(seed % 5), {k, 4}, seed));
    const auto dc = undirected_distances(s, s.main_candidate), dv = undirected_distances(s, s.main_vacancy);
    for (std::size_t i = 0; i < s.nodes.size(); ++i) EXPECT_LE(std::min(dc[i], dv[i]), k);
  }
}

TEST(Reverse, FlipsEdgesAndDirection) {
  PairSubGraph s;
  s.nodes = {{0, EntityKind::Candidate, "c"}, {1, EntityKind::Skill, "s"}, {2, EntityKind::Vacancy, "v"}};
  s.main_candidate = 0;
  s.main_vacancy = 2;
  s.edges = {{0, 1, 0}};
  const auto r = reverse(s);
  EXPECT_EQ(r.edges.front(), (LocalEdge{1, 0, 0}));
  EXPECT_EQ(r.direction, Direction::VacancyToCandidate);
  EXPECT_EQ(r.nodes, s.nodes);
  EXPECT_EQ(r.main_candidate, s.main_candidate);
  EXPECT_EQ(reverse(r), s);
}

TEST(Reverse, InvolutionAndMultisetOnLargeSubgraph) {
  const auto g = random_graph(11);
  const auto s = relabel_local(sample_pair_subgraph(g, "c2", "v4", {7, 32}, 8));
  ASSERT_GE(s.edges.size(), 20u);
  EXPECT_EQ(reverse(reverse(s)), s);
  auto flipped = reverse(s).edges;
  for (auto& e : flipped) std::swap(e.src, e.dst);
  std::sort(flipped.begin(), flipped.end());
  auto orig = s.edges;
  std::sort(orig.begin(), orig.end());
  EXPECT_EQ(flipped, orig);
}

TEST(Relabel, DenseIdsPreserveAdjacency) {
  PairSubGraph s;
  s.nodes = {{7, EntityKind::Candidate, "c"}, {42, EntityKind::Vacancy, "v"}, {9, EntityKind::Skill, "s"}};
  s.main_candidate = 7;
  s.main_vacancy = 42;
  s.edges = {{7, 9, 0}, {42, 9, 1}};
  const auto r = relabel_local(s);
  validate(r);
  EXPECT_EQ(r.nodes[0].local_id, 0u);
  EXPECT_EQ(r.nodes[2].local_id, 2u);
  EXPECT_EQ(r.edges, (std::vector<LocalEdge>{{0, 2, 0}, {1, 2, 1}}));
  EXPECT_EQ(keyed_edges(r), keyed_edges(s));
}

TEST(Relabel, SharedGlobalNodeGetsNoCommonId) {
  const auto g = random_graph(2);
  const auto a = relabel_local(sample_pair_subgraph(g, "c0", "v0", {}, 1));
  const auto b = relabel_local(sample_pair_subgraph(g, "c1", "v1", {}, 2));
  EXPECT_EQ(a.nodes.front().local_id, 0u);
  EXPECT_EQ(b.nodes.front().local_id, 0u);
  EXPECT_EQ(a.main_candidate, 0u);
  EXPECT_EQ(b.main_vacancy, 1u);
}

TEST(RelabelProperty, CanonicalEdgesUnchanged) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = random_graph(seed);
    const auto raw = sample_pair_subgraph(g, "c3", "v1", {3, 2}, seed);
    const auto r = relabel_local(raw);
    validate(r);
    EXPECT_EQ(keyed_edges(r), keyed_edges(raw));
    EXPECT_EQ(r.nodes.size(), raw.nodes.size());
  }
}

TEST(Validate, RejectsBrokenSubgraphs) {
  PairSubGraph s;
  s.nodes = {{0, EntityKind::Candidate, "c"}, {1, EntityKind::Vacancy, "v"}};
  s.main_vacancy = 1;
  EXPECT_NO_THROW(validate(s));
  auto bad = s;
  bad.edges = {{0, 5, 0}};
  EXPECT_THROW(validate(bad), Error);
  bad = s;
  bad.main_vacancy = 0;
  EXPECT_THROW(validate(bad), Error);
  bad = s;
  bad.label = 6;
  EXPECT_THROW(validate(bad), Error);
  bad.scheme = LabelScheme::Zhaopin;
  bad.label = -1;
  EXPECT_THROW(validate(bad), Error);
}

TEST(Negatives, ForcedRemainingPair) {
  const std::vector<std::string> c = {"c1", "c2"}, v = {"v1", "v2"};
  const std::set<KeyPair> labeled = {{"c1", "v1"}, {"c1", "v2"}, {"c2", "v1"}};
  const auto n = negative_sample(c, v, labeled, 1, LabelScheme::Proprietary, 3);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].candidate, "c2");
  EXPECT_EQ(n[0].vacancy, "v2");
  EXPECT_EQ(n[0].label, -1);
  EXPECT_THROW(negative_sample(c, v, labeled, 2, LabelScheme::Proprietary, 3), ExhaustedSpace);
}

TEST(Negatives, ZeroCountAndSchemeLabel) {
  const std::vector<std::string> c = {"c1"}, v = {"v1", "v2"};
  EXPECT_TRUE(negative_sample(c, v, {}, 0, LabelScheme::Proprietary, 1).empty());
  EXPECT_EQ(negative_sample(c, v, {}, 1, LabelScheme::Zhaopin, 1).front().label, 0);
}

TEST(Negatives, GridSamplesAreDistinctAndUnlabeled) {
  std::vector<std::string> c, v;
  for (int i = 0; i < 10; ++i) {
    c.push_back("c" + std::to_string(i));
    v.push_back("v" + std::to_string(i));
  }
  std::set<KeyPair> labeled;
  for (int i = 0; i < 20; ++i) labeled.insert({c[i % 10], v[(i / 10) * 5 + i % 5]});
  ASSERT_EQ(labeled.size(), 20u);
  const auto n = negative_sample(c, v, labeled, 30, LabelScheme::Proprietary, 5);
  std::set<KeyPair> seen;
  for (const auto& p : n) {
    EXPECT_FALSE(labeled.count({p.candidate, p.vacancy}));
    EXPECT_TRUE(seen.insert({p.candidate, p.vacancy}).second);
  }
  EXPECT_EQ(n.size(), 30u);
}

TEST(Splits, TenAndNineCandidates) {
  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("c" + std::to_string(i));
  auto s = split_by_candidate(ten, {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  std::vector<std::string> nine(ten.begin(), ten.begin() + 9);
  s = split_by_candidate(nine, {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_THROW(split_by_candidate(nine, {0.5, 0.1, 0.1}, 1), Error);
}

TEST(Splits, DisjointExhaustiveDeterministic) {
  for (std::size_t n = 1; n < 60; n += 7) {
    std::vector<std::string> cands;
    for (std::size_t i = 0; i < n; ++i) cands.push_back("c" + std::to_string(i));
    const auto a = split_by_candidate(cands, {0.8, 0.1, 0.1}, n);
    const auto b = split_by_candidate(cands, {0.8, 0.1, 0.1}, n);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::string> all;
    for (const auto* part : {&a.train, &a.validation, &a.test}) all.insert(part->begin(), part->end());
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(a.train.size() + a.validation.size() + a.test.size(), n);
  }
}
