#include "okra/kg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>

namespace okra::kg {

namespace {

constexpr std::array<std::string_view, kEntityKindCount> kKindNames = {
    "Candidate", "Vacancy",        "Skill",   "Language",       "License",
    "Location",  "EducationLevel", "JobType", "WorkExperience", "TextDoc",
};

}  // namespace

std::string_view to_string(EntityKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

EntityKind parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EntityKind>(i);
  }
  throw FormatError("unknown entity kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

KnowledgeGraph::KnowledgeGraph() {
  register_attribute("region");
  register_attribute("name");
}

RelationType KnowledgeGraph::register_relation(std::string_view name) {
  if (name.empty()) throw Error("register_relation: empty relation name");
  std::string key(name);
  if (auto it = relation_ids_.find(key); it != relation_ids_.end()) return relations_[it->second];
  RelationType rel{key, static_cast<RelationId>(relations_.size())};
  relations_.push_back(rel);
  relation_ids_.emplace(std::move(key), rel.id);
  return rel;
}

std::optional<RelationType> KnowledgeGraph::find_relation(std::string_view name) const {
  if (auto it = relation_ids_.find(std::string(name)); it != relation_ids_.end()) {
    return relations_[it->second];
  }
  return std::nullopt;
}

void KnowledgeGraph::register_attribute(std::string_view name) { attribute_vocab_.emplace(name); }

EntityId KnowledgeGraph::add_entity(EntityKind kind, std::string_view key, std::optional<std::string> payload,
                                    std::map<std::string, std::string> attrs) {
  for (const auto& [k, v] : attrs) {
    if (!has_attribute(k)) throw Error("attribute '" + k + "' is not registered");
  }
  if (kind == EntityKind::TextDoc && (!payload || payload->empty())) {
    throw Error("TextDoc entity '" + std::string(key) + "' needs a non-empty payload");
  }
  auto map_key = std::make_pair(kind, std::string(key));
  if (auto it = by_kind_key_.find(map_key); it != by_kind_key_.end()) {
    Entity& e = entities_[it->second];
    for (auto& [k, v] : attrs) e.attrs[k] = std::move(v);
    if (payload && !payload->empty() && !e.payload) e.payload = std::move(payload);
    return e.id;
  }
  const auto id = static_cast<EntityId>(entities_.size());
  entities_.push_back(Entity{id, kind, std::string(key), std::move(payload), std::move(attrs)});
  by_kind_key_.emplace(std::move(map_key), id);
  by_key_.emplace(std::string(key), id);
  out_.emplace_back();
  in_.emplace_back();
  return id;
}

std::optional<EntityId> KnowledgeGraph::find_entity(EntityKind kind, std::string_view key) const {
  if (auto it = by_kind_key_.find({kind, std::string(key)}); it != by_kind_key_.end()) return it->second;
  return std::nullopt;
}

std::optional<EntityId> KnowledgeGraph::find_key(std::string_view key) const {
  auto [lo, hi] = by_key_.equal_range(std::string(key));
  if (lo == hi || std::next(lo) != hi) return std::nullopt;
  return lo->second;
}

bool KnowledgeGraph::add_triple(const Triple& t) {
  if (t.subject >= entities_.size() || t.object >= entities_.size()) {
    throw UnknownEntityRef("triple references entity outside the graph");
  }
  if (t.predicate >= relations_.size()) throw Error("triple uses unregistered relation");
  if (!triple_set_.insert(t).second) return false;
  out_[t.subject].push_back(triples_.size());
  in_[t.object].push_back(triples_.size());
  triples_.push_back(t);
  return true;
}

std::vector<EntityId> KnowledgeGraph::entities_of_kind(EntityKind kind) const {
  std::vector<EntityId> out;
  for (const auto& e : entities_) {
    if (e.kind == kind) out.push_back(e.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// build_graph

namespace {

std::string bucket_key(const Column& col, double value) {
  const auto& edges = col.bins;
  std::size_t b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
  std::ostringstream os;
  os << col.name << ":";
  if (b == 0)
    os << "<" << (edges.empty() ? 0.0 : edges.front());
  else if (b == edges.size())
    os << ">=" << edges.back();
  else
    os << edges[b - 1] << "-" << edges[b];
  return os.str();
}

double parse_number(const std::string& cell, const std::string& table, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError(table + "." + column + ": '" + cell + "' is not numeric");
  }
  return v;
}

const Column* key_column(const Table& t) {
  for (const auto& c : t.columns) {
    if (c.role == ColumnRole::Key) return &c;
  }
  return nullptr;
}

}  // namespace

KnowledgeGraph build_graph(std::span<const Table> tables, const RelationNaming& naming) {
  KnowledgeGraph g;
  auto relation_for = [&](const std::string& name) -> RelationType {
    auto it = naming.find(name);
    return g.register_relation(it == naming.end() ? name : it->second);
  };

  // Declarations first so that references may point at tables listed later.
  for (const auto& t : tables) {
    const Column* key = key_column(t);
    if (!key) continue;
    const std::size_t key_idx = static_cast<std::size_t>(key - t.columns.data());
    for (const auto& row : t.rows) {
      if (row.size() != t.columns.size()) {
        throw FormatError(t.name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(t.columns.size()));
      }
      std::map<std::string, std::string> attrs;
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (t.columns[c].role == ColumnRole::Attr && !row[c].empty()) {
          g.register_attribute(t.columns[c].name);
          attrs[t.columns[c].name] = row[c];
        }
      }
      g.add_entity(key->kind, row[key_idx], std::nullopt, std::move(attrs));
    }
  }

  for (const auto& t : tables) {
    const Column* key = key_column(t);
    const bool link_table = !key && t.columns.size() == 2;
    std::size_t subject_idx = 0;
    if (key) {
      subject_idx = static_cast<std::size_t>(key - t.columns.data());
    } else if (t.columns.empty() || t.columns.front().role != ColumnRole::Ref) {
      throw FormatError(t.name + ": tables without a key column must start with a reference column");
    }
    for (const auto& row : t.rows) {
      if (row.size() != t.columns.size()) {
        throw FormatError(t.name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(t.columns.size()));
      }
      const Column& subject_col = t.columns[subject_idx];
      auto subject = g.find_entity(subject_col.kind, row[subject_idx]);
      if (!subject) {
        throw UnknownEntityRef(t.name + ": undeclared " + std::string(to_string(subject_col.kind)) + " '" +
                               row[subject_idx] + "'");
      }
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c == subject_idx) continue;
        const Column& col = t.columns[c];
        const std::string& cell = row[c];
        if (col.role == ColumnRole::Attr || col.role == ColumnRole::Key || cell.empty()) continue;
        EntityId object = 0;
        switch (col.role) {
          case ColumnRole::Ref: {
            auto ref = g.find_entity(col.kind, cell);
            if (!ref) {
              throw UnknownEntityRef(t.name + "." + col.name + ": undeclared " + std::string(to_string(col.kind)) +
                                     " '" + cell + "'");
            }
            object = *ref;
            break;
          }
          case ColumnRole::Literal:
            object = g.add_entity(col.kind, bucket_key(col, parse_number(cell, t.name, col.name)));
            break;
          case ColumnRole::Text:
            object = g.add_entity(EntityKind::TextDoc, row[subject_idx] + "#" + col.name, cell);
            break;
          default:
            continue;
        }
        const RelationType rel = relation_for(link_table ? t.name : col.name);
        g.add_triple({*subject, rel.id, object});
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// apply_inference

KnowledgeGraph apply_inference(const KnowledgeGraph& graph, std::span<const InferenceRule> rules, std::size_t budget) {
  const std::size_t n_rel = graph.relations().size();
  for (const auto& r : rules) {
    if (r.first >= n_rel || r.second >= n_rel) throw Error("inference rule references an unregistered relation");
  }
  KnowledgeGraph out = graph;
  if (budget == 0) {
    const std::size_t n = graph.entity_count();
    budget = std::max<std::size_t>(1, n * n * std::max<std::size_t>(1, n_rel));
  }

  std::deque<Triple> delta(graph.triples().begin(), graph.triples().end());
  std::size_t derived = 0;
  std::vector<Triple> fresh;
  auto emit = [&](const Triple& t) {
    if (out.contains(t)) return;
    fresh.push_back(t);
  };

  while (!delta.empty()) {
    const Triple d = delta.front();
    delta.pop_front();
    fresh.clear();
    for (const auto& r : rules) {
      switch (r.kind) {
        case InferenceRule::Kind::Transitive:
          if (d.predicate != r.first) break;
          for (std::size_t idx : out.out_edges(d.object)) {
            const Triple& n = out.triples()[idx];
            if (n.predicate == r.first) emit({d.subject, r.first, n.object});
          }
          for (std::size_t idx : out.in_edges(d.subject)) {
            const Triple& p = out.triples()[idx];
            if (p.predicate == r.first) emit({p.subject, r.first, d.object});
          }
          break;
        case InferenceRule::Kind::InversePair:
          if (d.predicate == r.first) emit({d.object, r.second, d.subject});
          if (d.predicate == r.second) emit({d.object, r.first, d.subject});
          break;
        case InferenceRule::Kind::SubclassPropagate:
          if (d.predicate == r.second) {
            for (std::size_t idx : out.out_edges(d.object)) {
              const Triple& h = out.triples()[idx];
              if (h.predicate == r.first) emit({d.subject, r.second, h.object});
            }
          }
          if (d.predicate == r.first) {
            for (std::size_t idx : out.in_edges(d.subject)) {
              const Triple& x = out.triples()[idx];
              if (x.predicate == r.second) emit({x.subject, r.second, d.object});
            }
          }
          break;
      }
    }
    for (const auto& t : fresh) {
      if (!out.add_triple(t)) continue;
      if (++derived > budget) {
        throw CycleBudgetExceeded("inference derived more than " + std::to_string(budget) + " triples");
      }
      delta.push_back(t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// TSV

std::string escape_tsv(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string unescape_tsv(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out.push_back(text[i]);
      continue;
    }
    switch (text[++i]) {
      case 't':
        out.push_back('\t');
        break;
      case 'n':
        out.push_back('\n');
        break;
      case 'r':
        out.push_back('\r');
        break;
      default:
        out.push_back(text[i]);
    }
  }
  return out;
}

void write_triples_tsv(const KnowledgeGraph& graph, std::ostream& out) {
  std::vector<std::string> lines;
  lines.reserve(graph.triple_count());
  for (const auto& t : graph.triples()) {
    lines.push_back(escape_tsv(graph.entity(t.subject).key) + "\t" + graph.relations()[t.predicate].name + "\t" +
                    escape_tsv(graph.entity(t.object).key));
  }
  std::sort(lines.begin(), lines.end());
  out << "subject_key\tpredicate\tobject_key\n";
  for (const auto& l : lines) out << l << "\n";
}

void write_entities_tsv(const KnowledgeGraph& graph, std::ostream& out) {
  out << "key\tkind\tattrs\tpayload\n";
  for (const auto& e : graph.entities()) {
    std::vector<std::string> kv;
    for (const auto& [k, v] : e.attrs) kv.push_back(k + "=" + v);
    out << escape_tsv(e.key) << "\t" << to_string(e.kind) << "\t" << escape_tsv(join(kv, ";")) << "\t"
        << (e.payload ? escape_tsv(*e.payload) : std::string()) << "\n";
  }
}

void write_relations_tsv(const KnowledgeGraph& graph, std::ostream& out) {
  out << "id\tname\n";
  for (const auto& r : graph.relations()) out << r.id << "\t" << r.name << "\n";
}

namespace {

std::vector<std::vector<std::string>> read_rows(std::istream& in, std::size_t columns, const char* what) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != columns) {
      throw FormatError(std::string(what) + ": expected " + std::to_string(columns) + " columns in '" + line + "'");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

KnowledgeGraph read_graph_tsv(std::istream& entities, std::istream& relations, std::istream& triples) {
  KnowledgeGraph g;
  for (auto& row : read_rows(relations, 2, "relations")) g.register_relation(row[1]);
  for (auto& row : read_rows(entities, 4, "entities")) {
    std::map<std::string, std::string> attrs;
    const std::string joined = unescape_tsv(row[2]);
    if (!joined.empty()) {
      for (const auto& kv : split(joined, ';')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw FormatError("entities: malformed attr '" + kv + "'");
        g.register_attribute(kv.substr(0, eq));
        attrs[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    std::optional<std::string> payload;
    if (!row[3].empty()) payload = unescape_tsv(row[3]);
    g.add_entity(parse_kind(row[1]), unescape_tsv(row[0]), std::move(payload), std::move(attrs));
  }
  for (auto& row : read_rows(triples, 3, "triples")) {
    auto s = g.find_key(unescape_tsv(row[0]));
    auto o = g.find_key(unescape_tsv(row[2]));
    auto p = g.find_relation(row[1]);
    if (!s || !o) throw UnknownEntityRef("triples: unknown or ambiguous key in '" + row[0] + "\t" + row[2] + "'");
    if (!p) throw FormatError("triples: unknown relation '" + row[1] + "'");
    g.add_triple({*s, p->id, *o});
  }
  return g;
}

}  // namespace okra::kg
