#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "okra/common.hpp"

namespace okra::kg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

enum class EntityKind : std::uint8_t {
  Candidate,
  Vacancy,
  Skill,
  Language,
  License,
  Location,
  EducationLevel,
  JobType,
  WorkExperience,
  TextDoc,
};
inline constexpr std::size_t kEntityKindCount = 10;

std::string_view to_string(EntityKind kind);
/// Throws FormatError on an unknown name.
EntityKind parse_kind(std::string_view name);

struct Entity {
  EntityId id = 0;
  EntityKind kind = EntityKind::Skill;
  std::string key;
  std::optional<std::string> payload;
  std::map<std::string, std::string> attrs;
};

struct RelationType {
  std::string name;
  RelationId id = 0;
  bool operator==(const RelationType&) const = default;
};

struct Triple {
  EntityId subject = 0;
  RelationId predicate = 0;
  EntityId object = 0;
  auto operator<=>(const Triple&) const = default;
};

struct InferenceRule {
  enum class Kind { Transitive, InversePair, SubclassPropagate };
  Kind kind = Kind::Transitive;
  /// Transitive: the relation. InversePair: the forward relation.
  /// SubclassPropagate: the hierarchy relation (e.g. subclass_of).
  RelationId first = 0;
  /// InversePair: the inverse relation. SubclassPropagate: the relation
  /// whose objects are lifted along the hierarchy. Unused for Transitive.
  RelationId second = 0;

  static InferenceRule transitive(RelationId rel) { return {Kind::Transitive, rel, rel}; }
  static InferenceRule inverse_pair(RelationId rel, RelationId inverse) { return {Kind::InversePair, rel, inverse}; }
  static InferenceRule subclass_propagate(RelationId hierarchy, RelationId target) {
    return {Kind::SubclassPropagate, hierarchy, target};
  }
};

/// Typed entity/triple store with out- and in-adjacency indexes.
///
/// Entities are deduplicated by (kind, key) and numbered densely in insertion
/// order. Relations are registered lazily by name. Once built, a graph is
/// only read, so it may be shared across sampling threads.
class KnowledgeGraph {
 public:
  KnowledgeGraph();

  /// Idempotent; ids are dense in first-registration order.
  RelationType register_relation(std::string_view name);
  std::optional<RelationType> find_relation(std::string_view name) const;
  const std::vector<RelationType>& relations() const { return relations_; }

  void register_attribute(std::string_view name);
  bool has_attribute(std::string_view name) const { return attribute_vocab_.count(std::string(name)) > 0; }

  /// Returns the existing id when (kind, key) is already present; attrs are
  /// merged and a non-empty payload replaces an absent one.
  EntityId add_entity(EntityKind kind, std::string_view key, std::optional<std::string> payload = {},
                      std::map<std::string, std::string> attrs = {});
  std::optional<EntityId> find_entity(EntityKind kind, std::string_view key) const;
  /// Lookup by key alone; nullopt when absent or ambiguous across kinds.
  std::optional<EntityId> find_key(std::string_view key) const;
  const Entity& entity(EntityId id) const { return entities_.at(id); }
  const std::vector<Entity>& entities() const { return entities_; }
  std::size_t entity_count() const { return entities_.size(); }

  /// Returns false when the triple already exists.
  bool add_triple(const Triple& t);
  bool contains(const Triple& t) const { return triple_set_.count(t) > 0; }
  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t triple_count() const { return triples_.size(); }

  /// Indexes into triples() of edges leaving / entering `id`.
  std::span<const std::size_t> out_edges(EntityId id) const { return out_[id]; }
  std::span<const std::size_t> in_edges(EntityId id) const { return in_[id]; }

  std::vector<EntityId> entities_of_kind(EntityKind kind) const;

 private:
  std::vector<Entity> entities_;
  std::map<std::pair<EntityKind, std::string>, EntityId> by_kind_key_;
  std::unordered_multimap<std::string, EntityId> by_key_;
  std::vector<RelationType> relations_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::set<std::string> attribute_vocab_;
  std::vector<Triple> triples_;
  std::set<Triple> triple_set_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

// ---------------------------------------------------------------------------
// Table -> graph conversion

enum class ColumnRole {
  Key,      ///< declares an entity of `kind` keyed by the cell
  Ref,      ///< references a declared entity of `kind`
  Literal,  ///< numeric cell promoted to a bucketed value entity of `kind`
  Text,     ///< free text stored as a TextDoc payload
  Attr,     ///< string attribute on the row's key entity (no triple)
};

struct Column {
  std::string name;
  ColumnRole role = ColumnRole::Ref;
  EntityKind kind = EntityKind::Skill;
  /// Literal bucket edges, ascending. Bucket i covers [edges[i-1], edges[i]).
  std::vector<double> bins;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<std::string>> rows;
};

/// Maps table names (for two-column link tables) or column names (for keyed
/// and wider tables) to relation names. Unmapped names are used verbatim.
using RelationNaming = std::map<std::string, std::string, std::less<>>;

/// Converts tables to triples: one per (row, non-key, non-attr column).
/// Empty cells are skipped. Throws UnknownEntityRef when a Ref cell names a key
/// no table declares.
KnowledgeGraph build_graph(std::span<const Table> tables, const RelationNaming& naming = {});

/// Least fixpoint of `rules` over the triples of `graph`, computed semi-naively.
/// `budget` caps the number of derived triples (0 = entity_count^2 times the
/// relation count, the largest closure possible).
KnowledgeGraph apply_inference(const KnowledgeGraph& graph, std::span<const InferenceRule> rules,
                               std::size_t budget = 0);

// ---------------------------------------------------------------------------
// TSV interchange

void write_triples_tsv(const KnowledgeGraph& graph, std::ostream& out);
void write_entities_tsv(const KnowledgeGraph& graph, std::ostream& out);
void write_relations_tsv(const KnowledgeGraph& graph, std::ostream& out);
KnowledgeGraph read_graph_tsv(std::istream& entities, std::istream& relations, std::istream& triples);

std::string escape_tsv(std::string_view text);
std::string unescape_tsv(std::string_view text);

}  // namespace okra::kg
