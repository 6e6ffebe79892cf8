#include "okra/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>

namespace okra::sampler {

std::pair<int, int> label_range(LabelScheme scheme) {
  return scheme == LabelScheme::Proprietary ? std::pair{-1, 5} : std::pair{0, 3};
}

int negative_label(LabelScheme scheme) { return scheme == LabelScheme::Proprietary ? -1 : 0; }

void validate(const PairSubGraph& sub) {
  const std::size_t n = sub.nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (sub.nodes[i].local_id != i) throw Error("subgraph node " + std::to_string(i) + " has non-dense local id");
  }
  if (sub.main_candidate >= n || sub.main_vacancy >= n) throw Error("subgraph anchor outside node list");
  if (sub.main_candidate == sub.main_vacancy) throw Error("subgraph anchors coincide");
  for (const auto& e : sub.edges) {
    if (e.src >= n || e.dst >= n) throw Error("subgraph edge endpoint outside node list");
  }
  auto [lo, hi] = label_range(sub.scheme);
  if (sub.label < lo || sub.label > hi) throw Error("subgraph label " + std::to_string(sub.label) + " outside scheme");
}

WalkIndex::WalkIndex(const kg::KnowledgeGraph& graph) : graph_(&graph), adjacency_(graph.entity_count()) {
  const auto& triples = graph.triples();
  for (kg::EntityId id = 0; id < graph.entity_count(); ++id) {
    std::map<kg::EntityId, std::vector<std::size_t>> by_other;
    for (std::size_t t : graph.out_edges(id)) by_other[triples[t].object].push_back(t);
    for (std::size_t t : graph.in_edges(id)) {
      if (triples[t].subject == id) continue;  // self-loop already listed
      by_other[triples[t].subject].push_back(t);
    }
    for (auto& [other, ts] : by_other) {
      std::sort(ts.begin(), ts.end(), [&](std::size_t a, std::size_t b) { return triples[a] < triples[b]; });
      adjacency_[id].push_back({other, std::move(ts)});
    }
  }
}

PairSubGraph sample_pair_subgraph(const kg::KnowledgeGraph& graph, std::string_view candidate_key,
                                  std::string_view vacancy_key, const SampleOptions& options, std::uint64_t seed) {
  return sample_pair_subgraph(WalkIndex(graph), candidate_key, vacancy_key, options, seed);
}

PairSubGraph sample_pair_subgraph(const WalkIndex& index, std::string_view candidate_key, std::string_view vacancy_key,
                                  const SampleOptions& options, std::uint64_t seed) {
  const kg::KnowledgeGraph& graph = index.graph();
  auto cand = graph.find_entity(kg::EntityKind::Candidate, candidate_key);
  auto vac = graph.find_entity(kg::EntityKind::Vacancy, vacancy_key);
  if (!cand) throw MissingAnchor("candidate '" + std::string(candidate_key) + "' not in graph");
  if (!vac) throw MissingAnchor("vacancy '" + std::string(vacancy_key) + "' not in graph");
  if (options.max_path_length < 1 || options.walks_per_anchor < 1) {
    throw Error("sample_pair_subgraph: path length and walk count must be >= 1");
  }

  std::mt19937_64 rng(seed);
  std::set<kg::EntityId> visited{*cand, *vac};
  std::set<std::size_t> walked;
  for (kg::EntityId anchor : {*cand, *vac}) {
    for (std::size_t w = 0; w < options.walks_per_anchor; ++w) {
      kg::EntityId at = anchor;
      for (std::size_t step = 0; step < options.max_path_length; ++step) {
        const auto& nbrs = index.neighbours(at);
        if (nbrs.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
        const auto& next = nbrs[pick(rng)];
        walked.insert(next.triples.begin(), next.triples.end());
        at = next.other;
        visited.insert(at);
      }
    }
  }

  PairSubGraph sub;
  sub.candidate_key = std::string(candidate_key);
  sub.vacancy_key = std::string(vacancy_key);
  auto push_node = [&](kg::EntityId id) {
    const auto& e = graph.entity(id);
    sub.nodes.push_back({id, e.kind, e.key});
  };
  push_node(*cand);
  push_node(*vac);
  for (kg::EntityId id : visited) {
    if (id != *cand && id != *vac) push_node(id);
  }
  sub.main_candidate = *cand;
  sub.main_vacancy = *vac;
  for (std::size_t t : walked) {
    const auto& tr = graph.triples()[t];
    sub.edges.push_back({tr.subject, tr.object, tr.predicate});
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  return sub;
}

PairSubGraph reverse(const PairSubGraph& sub) {
  PairSubGraph out = sub;
  for (auto& e : out.edges) std::swap(e.src, e.dst);
  out.direction =
      sub.direction == Direction::CandidateToVacancy ? Direction::VacancyToCandidate : Direction::CandidateToVacancy;
  return out;
}

PairSubGraph relabel_local(const PairSubGraph& sub) {
  std::map<std::uint32_t, std::uint32_t> remap;
  PairSubGraph out = sub;
  out.nodes.clear();
  auto assign = [&](std::uint32_t old_id) {
    if (remap.count(old_id)) return;
    auto it =
        std::find_if(sub.nodes.begin(), sub.nodes.end(), [&](const LocalNode& n) { return n.local_id == old_id; });
    if (it == sub.nodes.end()) throw Error("relabel_local: anchor is not a node of the subgraph");
    const auto fresh = static_cast<std::uint32_t>(out.nodes.size());
    remap[old_id] = fresh;
    out.nodes.push_back({fresh, it->kind, it->feature_ref});
  };
  assign(sub.main_candidate);
  assign(sub.main_vacancy);
  for (const auto& n : sub.nodes) assign(n.local_id);
  for (auto& e : out.edges) {
    e.src = remap.at(e.src);
    e.dst = remap.at(e.dst);
  }
  out.main_candidate = remap.at(sub.main_candidate);
  out.main_vacancy = remap.at(sub.main_vacancy);
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

std::vector<LabeledPair> negative_sample(std::span<const std::string> candidates,
                                         std::span<const std::string> vacancies, const std::set<KeyPair>& labeled,
                                         std::size_t count, LabelScheme scheme, std::uint64_t seed) {
  std::size_t labeled_in_space = 0;
  {
    std::set<std::string> cs(candidates.begin(), candidates.end()), vs(vacancies.begin(), vacancies.end());
    for (const auto& [c, v] : labeled) labeled_in_space += (cs.count(c) && vs.count(v)) ? 1 : 0;
  }
  const std::size_t space = candidates.size() * vacancies.size();
  if (count > space - labeled_in_space) {
    throw ExhaustedSpace("requested " + std::to_string(count) + " negatives but only " +
                         std::to_string(space - labeled_in_space) + " unlabeled pairs exist");
  }
  std::vector<LabeledPair> out;
  if (count == 0) return out;
  std::mt19937_64 rng(seed);
  const int label = negative_label(scheme);
  if (2 * count >= space - labeled_in_space) {
    // Dense regime: enumerate the complement and take a seeded sample.
    std::vector<std::pair<std::size_t, std::size_t>> pool;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      for (std::size_t v = 0; v < vacancies.size(); ++v) {
        if (!labeled.count({candidates[c], vacancies[v]})) pool.emplace_back(c, v);
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < count; ++i)
      out.push_back({candidates[pool[i].first], vacancies[pool[i].second], label});
    return out;
  }
  std::set<KeyPair> taken;
  std::uniform_int_distribution<std::size_t> pick_c(0, candidates.size() - 1), pick_v(0, vacancies.size() - 1);
  while (out.size() < count) {
    KeyPair p{candidates[pick_c(rng)], vacancies[pick_v(rng)]};
    if (labeled.count(p) || !taken.insert(p).second) continue;
    out.push_back({p.first, p.second, label});
  }
  return out;
}

std::vector<LabeledPair> negative_sample(const kg::KnowledgeGraph& graph, const std::set<KeyPair>& labeled,
                                         std::size_t count, LabelScheme scheme, std::uint64_t seed) {
  std::vector<std::string> cands, vacs;
  for (auto id : graph.entities_of_kind(kg::EntityKind::Candidate)) cands.push_back(graph.entity(id).key);
  for (auto id : graph.entities_of_kind(kg::EntityKind::Vacancy)) vacs.push_back(graph.entity(id).key);
  return negative_sample(cands, vacs, labeled, count, scheme, seed);
}

SplitAssignment split_by_candidate(std::span<const std::string> candidates, std::array<double, 3> ratios,
                                   std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) throw Error("split ratios must sum to 1");
  std::vector<std::string> order(candidates.begin(), candidates.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = order.size();
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    remainder[i] = quota - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> by_remainder{0, 1, 2};
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[by_remainder[i % 3]];

  SplitAssignment out;
  std::size_t i = 0;
  for (; i < sizes[0]; ++i) out.train.insert(order[i]);
  for (; i < sizes[0] + sizes[1]; ++i) out.validation.insert(order[i]);
  for (; i < n; ++i) out.test.insert(order[i]);
  return out;
}

std::vector<std::size_t> undirected_distances(const PairSubGraph& sub, std::uint32_t from) {
  const std::size_t n = sub.nodes.size();
  std::map<std::uint32_t, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[sub.nodes[i].local_id] = i;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : sub.edges) {
    adj[index.at(e.src)].push_back(index.at(e.dst));
    adj[index.at(e.dst)].push_back(index.at(e.src));
  }
  std::vector<std::size_t> dist(n, std::numeric_limits<std::size_t>::max());
  std::queue<std::size_t> q;
  dist[index.at(from)] = 0;
  q.push(index.at(from));
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u]) {
      if (dist[v] == std::numeric_limits<std::size_t>::max()) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

}  // namespace okra::sampler
