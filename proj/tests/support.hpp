#pragma once

// Independent reference implementations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "okra/kg.hpp"

namespace okra::oracle {

// Plain DCG straight from the definition, no shared helpers.
inline double brute_dcg(const std::vector<int>& labels, std::size_t k) {
  double s = 0.0;
  for (std::size_t p = 0; p < labels.size() && p < k; ++p) {
    const int l = labels[p] < 0 ? 0 : labels[p];
    s += (std::pow(2.0, l) - 1.0) / std::log2(static_cast<double>(p) + 2.0);
  }
  return s;
}

inline double brute_ndcg(const std::vector<int>& predicted, std::size_t k) {
  std::vector<int> ideal = predicted;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = brute_dcg(ideal, k);
  return idcg == 0.0 ? 0.0 : brute_dcg(predicted, k) / idcg;
}

// Naive fixpoint: apply every rule to every triple (pair) until nothing changes.
inline std::set<kg::Triple> brute_closure(std::set<kg::Triple> t, const std::vector<kg::InferenceRule>& rules) {
  using K = kg::InferenceRule::Kind;
  for (bool changed = true; changed;) {
    changed = false;
    std::set<kg::Triple> add;
    for (const auto& r : rules) {
      for (const auto& a : t) {
        if (r.kind == K::InversePair) {
          if (a.predicate == r.first) add.insert({a.object, r.second, a.subject});
          if (a.predicate == r.second) add.insert({a.object, r.first, a.subject});
          continue;
        }
        for (const auto& b : t) {
          if (r.kind == K::Transitive && a.predicate == r.first && b.predicate == r.first && a.object == b.subject) {
            add.insert({a.subject, r.first, b.object});
          }
          if (r.kind == K::SubclassPropagate && a.predicate == r.second && b.predicate == r.first &&
              a.object == b.subject) {
            add.insert({a.subject, r.second, b.object});
          }
        }
      }
    }
    for (const auto& x : add) changed |= t.insert(x).second;
  }
  return t;
}

struct RandomGraph {
  kg::KnowledgeGraph graph;
  std::vector<kg::InferenceRule> rules;
};

// Up to 8 entities, 3 relations, a random subset of the three rule kinds.
inline RandomGraph random_rule_graph(std::mt19937_64& rng) {
  RandomGraph out;
  auto& g = out.graph;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
  for (std::size_t i = 0; i < n; ++i) g.add_entity(kg::EntityKind::JobType, "e" + std::to_string(i));
  const auto r0 = g.register_relation("r0").id, r1 = g.register_relation("r1").id, r2 = g.register_relation("r2").id;
  const std::size_t edges = std::uniform_int_distribution<std::size_t>(0, 2 * n)(rng);
  std::uniform_int_distribution<std::uint32_t> node(0, static_cast<std::uint32_t>(n - 1)), rel(0, 2);
  for (std::size_t e = 0; e < edges; ++e) g.add_triple({node(rng), rel(rng), node(rng)});
  std::bernoulli_distribution coin(0.5);
  if (coin(rng)) out.rules.push_back(kg::InferenceRule::transitive(r0));
  if (coin(rng)) out.rules.push_back(kg::InferenceRule::inverse_pair(r1, r2));
  if (coin(rng)) out.rules.push_back(kg::InferenceRule::subclass_propagate(r0, r1));
  if (coin(rng)) out.rules.push_back(kg::InferenceRule::transitive(r2));
  return out;
}

}  // namespace okra::oracle
