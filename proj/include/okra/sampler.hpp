#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "okra/kg.hpp"

namespace okra::sampler {

enum class LabelScheme { Proprietary, Zhaopin };

/// Inclusive label range of a scheme: [-1, 5] or [0, 3].
std::pair<int, int> label_range(LabelScheme scheme);
/// The label given to randomly sampled non-matching pairs.
int negative_label(LabelScheme scheme);

enum class Direction { CandidateToVacancy, VacancyToCandidate };

struct LocalNode {
  std::uint32_t local_id = 0;
  kg::EntityKind kind = kg::EntityKind::Skill;
  /// Key of the source entity; only for feature lookup.
  std::string feature_ref;
  bool operator==(const LocalNode&) const = default;
};

struct LocalEdge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  kg::RelationId relation = 0;
  auto operator<=>(const LocalEdge&) const = default;
};

/// Candidate/vacancy neighbourhood graph; the unit being ranked.
struct PairSubGraph {
  std::vector<LocalNode> nodes;
  std::vector<LocalEdge> edges;
  std::uint32_t main_candidate = 0;
  std::uint32_t main_vacancy = 0;
  int label = 0;
  LabelScheme scheme = LabelScheme::Proprietary;
  Direction direction = Direction::CandidateToVacancy;
  std::string candidate_key;
  std::string vacancy_key;

  bool operator==(const PairSubGraph&) const = default;
};

/// Throws Error describing the first violated structural invariant.
void validate(const PairSubGraph& sub);

struct SampleOptions {
  std::size_t max_path_length = 7;
  std::size_t walks_per_anchor = 8;
};

/// Undirected neighbour lists of a graph. Each neighbour carries every triple
/// joining the two entities, in either direction. Ordered by entity id and
/// triple content so that walks never depend on triple insertion order.
/// Keeps a reference to the graph.
class WalkIndex {
 public:
  struct Neighbour {
    kg::EntityId other;
    std::vector<std::size_t> triples;
  };
  explicit WalkIndex(const kg::KnowledgeGraph& graph);
  const kg::KnowledgeGraph& graph() const { return *graph_; }
  const std::vector<Neighbour>& neighbours(kg::EntityId id) const { return adjacency_[id]; }

 private:
  const kg::KnowledgeGraph* graph_;
  std::vector<std::vector<Neighbour>> adjacency_;
};

/// Union of `walks_per_anchor` uniform random walks of at most
/// `max_path_length` steps from each anchor. A step moves to a uniformly
/// chosen neighbour and keeps every triple between the two entities, with its
/// original direction. Node ids in the result are global entity ids; call
/// relabel_local() before handing the graph to a model.
PairSubGraph sample_pair_subgraph(const kg::KnowledgeGraph& graph, std::string_view candidate_key,
                                  std::string_view vacancy_key, const SampleOptions& options, std::uint64_t seed);
PairSubGraph sample_pair_subgraph(const WalkIndex& index, std::string_view candidate_key, std::string_view vacancy_key,
                                  const SampleOptions& options, std::uint64_t seed);

/// Flips every edge and the direction flag.
PairSubGraph reverse(const PairSubGraph& sub);

/// Renumbers nodes densely: anchors first (candidate, vacancy), then the rest
/// in their current order.
PairSubGraph relabel_local(const PairSubGraph& sub);

using KeyPair = std::pair<std::string, std::string>;

struct LabeledPair {
  std::string candidate;
  std::string vacancy;
  int label = 0;
};

/// Uniformly samples `count` distinct (candidate, vacancy) pairs absent from
/// `labeled`. Throws ExhaustedSpace when fewer than `count` pairs remain.
std::vector<LabeledPair> negative_sample(std::span<const std::string> candidates,
                                         std::span<const std::string> vacancies, const std::set<KeyPair>& labeled,
                                         std::size_t count, LabelScheme scheme, std::uint64_t seed);

/// Graph-level convenience: candidates and vacancies are the graph's entities
/// of those kinds.
std::vector<LabeledPair> negative_sample(const kg::KnowledgeGraph& graph, const std::set<KeyPair>& labeled,
                                         std::size_t count, LabelScheme scheme, std::uint64_t seed);

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;
};

/// Shuffles candidates with `seed` and cuts them by largest-remainder rounded
/// ratios (ties go to the earlier split).
SplitAssignment split_by_candidate(std::span<const std::string> candidates,
                                   std::array<double, 3> ratios = {0.8, 0.1, 0.1}, std::uint64_t seed = 0);

/// BFS hop distance (ignoring direction) from `from` to every node of `sub`;
/// unreachable nodes map to SIZE_MAX.
std::vector<std::size_t> undirected_distances(const PairSubGraph& sub, std::uint32_t from);

}  // namespace okra::sampler
