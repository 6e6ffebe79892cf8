#include "okra/pipeline.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <set>
#include <sstream>

namespace okra::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// RunConfig

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& full_key, const std::string& value)> set;
};

#define OKRA_UINT(sec, name, member)                                                               \
  Field {                                                                                          \
    sec, name, [](const RunConfig& c) { return std::to_string(c.member); },                        \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_uint(k, v); } \
  }
#define OKRA_DOUBLE(sec, name, member)                                                               \
  Field {                                                                                            \
    sec, name, [](const RunConfig& c) { return fmt(c.member); },                                     \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); } \
  }
#define OKRA_BOOL(sec, name, member)                                                               \
  Field {                                                                                          \
    sec, name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); },        \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      Field{"", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.set_seed(to_uint(k, v)); }},
      OKRA_UINT("data", "n_candidates", data.n_candidates),
      OKRA_UINT("data", "n_vacancies", data.n_vacancies),
      OKRA_UINT("data", "n_skills", data.n_skills),
      OKRA_UINT("data", "n_locations", data.n_locations),
      OKRA_UINT("data", "n_languages", data.n_languages),
      OKRA_UINT("data", "n_licenses", data.n_licenses),
      OKRA_UINT("data", "n_major_job_types", data.n_major_job_types),
      OKRA_UINT("data", "minors_per_major", data.minors_per_major),
      OKRA_UINT("data", "units_per_minor", data.units_per_minor),
      OKRA_UINT("data", "skills_per_entity", data.skills_per_entity),
      OKRA_UINT("data", "experience_per_candidate", data.experience_per_candidate),
      OKRA_DOUBLE("data", "rural_vacancy_fraction", data.rural_vacancy_fraction),
      OKRA_DOUBLE("data", "rural_candidate_fraction", data.rural_candidate_fraction),
      OKRA_UINT("data", "latent_dim", data.latent_dim),
      OKRA_DOUBLE("data", "feature_sharpness", data.feature_sharpness),
      Field{"data", "label_scheme",
            [](const RunConfig& c) {
              return std::string(c.data.label_scheme == sampler::LabelScheme::Proprietary ? "proprietary" : "zhaopin");
            },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v == "proprietary") {
                c.data.label_scheme = sampler::LabelScheme::Proprietary;
              } else if (v == "zhaopin") {
                c.data.label_scheme = sampler::LabelScheme::Zhaopin;
              } else {
                throw ConfigError("key '" + k + "': expected proprietary or zhaopin, got '" + v + "'");
              }
            }},
      OKRA_DOUBLE("data", "stakeholder_divergence", data.stakeholder_divergence),
      OKRA_DOUBLE("data", "affinity_shift", data.affinity_shift),
      OKRA_DOUBLE("data", "fairness_bias", data.fairness_bias),
      OKRA_UINT("data", "labeled_per_candidate", data.labeled_per_candidate),
      OKRA_UINT("data", "negative_per_candidate", data.negative_per_candidate),
      OKRA_DOUBLE("data", "labeled_sharpness", data.labeled_sharpness),
      OKRA_BOOL("graph", "inference", graph.inference),
      OKRA_UINT("graph", "inference_budget", graph.inference_budget),
      OKRA_UINT("sampler", "max_path_length", sampler.sample.max_path_length),
      OKRA_UINT("sampler", "walks_per_anchor", sampler.sample.walks_per_anchor),
      OKRA_DOUBLE("sampler", "train_ratio", sampler.split[0]),
      OKRA_DOUBLE("sampler", "validation_ratio", sampler.split[1]),
      OKRA_DOUBLE("sampler", "test_ratio", sampler.split[2]),
      OKRA_UINT("model", "text_dim", model.text_dim),
      OKRA_UINT("model", "node_dim", model.node_dim),
      OKRA_UINT("model", "channels", model.channels),
      Field{"model", "pooling", [](const RunConfig& c) { return std::string(model::to_string(c.model.pooling)); },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              try {
                c.model.pooling = model::parse_pooling(v);
              } catch (const ConfigError&) {
                throw ConfigError("key '" + k + "': expected mean, max or sum, got '" + v + "'");
              }
            }},
      OKRA_UINT("model", "hash_buckets", model.hash_buckets),
      OKRA_UINT("model", "token_limit", model.token_limit),
      OKRA_DOUBLE("model", "leaky_slope", model.leaky_slope),
      OKRA_DOUBLE("model", "score_bound", model.score_bound),
      OKRA_DOUBLE("model", "fusion_shift", model.fusion_shift),
      OKRA_DOUBLE("train", "learning_rate", train.learning_rate),
      OKRA_UINT("train", "epochs", train.epochs),
      OKRA_DOUBLE("train", "beta1", train.beta1),
      OKRA_DOUBLE("train", "beta2", train.beta2),
      OKRA_DOUBLE("train", "epsilon", train.epsilon),
      OKRA_DOUBLE("train", "sigma", train.sigma),
      OKRA_UINT("train", "ndcg_cutoff", train.ndcg_cutoff),
      OKRA_BOOL("train", "company_groups", train.company_groups),
      OKRA_UINT("train", "search_trials", search_trials),
      Field{"eval", "ks",
            [](const RunConfig& c) {
              std::vector<std::string> parts;
              for (auto k : c.eval.ks) parts.push_back(std::to_string(k));
              return join(parts, ",");
            },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.eval.ks.clear();
              for (const auto& p : split(v, ',')) {
                const auto n = to_uint(k, p);
                if (n == 0) throw ConfigError("key '" + k + "': cutoffs must be >= 1");
                c.eval.ks.push_back(n);
              }
            }},
      Field{"eval", "protected", [](const RunConfig& c) { return c.eval.protected_value; },
            [](RunConfig& c, const std::string&, const std::string& v) { c.eval.protected_value = v; }},
      Field{"eval", "unprotected", [](const RunConfig& c) { return c.eval.unprotected_value; },
            [](RunConfig& c, const std::string&, const std::string& v) { c.eval.unprotected_value = v; }},
      OKRA_UINT("eval", "visibility_top", eval.visibility_top),
  };
  return all;
}

#undef OKRA_UINT
#undef OKRA_DOUBLE
#undef OKRA_BOOL

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  data.seed = s;
  model.seed = s;
  train.seed = s;
}

std::string RunConfig::canonical() const {
  std::vector<std::string> lines;
  for (const auto& f : fields())
    lines.push_back((f.section.empty() ? "" : f.section + ".") + f.key + "=" + f.get(*this));
  std::sort(lines.begin(), lines.end());
  return join(lines, "\n") + "\n";
}

std::string RunConfig::digest() const { return sha256_hex(canonical()); }

RunConfig RunConfig::parse(std::istream& in, const fs::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  auto apply = [&](const std::string& section, const std::string& key, const std::string& value) {
    const std::string full = section.empty() ? key : section + "." + key;
    if (section.empty() && key == "out") {
      c.out = fs::path(value).is_absolute() ? fs::path(value) : base_dir / value;
      return;
    }
    for (const auto& f : fields()) {
      if (f.section == section && f.key == key) {
        f.set(c, full, value);
        return;
      }
    }
    throw ConfigError("unknown config key '" + full + "'");
  };
  static const std::set<std::string> sections = {"data", "graph", "sampler", "model", "train", "eval"};
  // Seed first, so an explicit per-module value cannot be clobbered by order.
  if (auto s = tree.get_child_optional("seed"); s && s->empty()) apply("", "seed", s->data());
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (name != "seed") apply("", name, node.data());
      continue;
    }
    if (!sections.count(name)) throw ConfigError("unknown config section '" + name + "'");
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("nested key under '" + name + "." + key + "'");
      apply(name, key, leaf.data());
    }
  }
  c.data.validate();
  c.model.validate();
  c.train.validate();
  const double ratio_sum = c.sampler.split[0] + c.sampler.split[1] + c.sampler.split[2];
  if (std::abs(ratio_sum - 1.0) > 1e-9) throw ConfigError("sampler ratios must sum to 1");
  if (c.sampler.sample.max_path_length < 1 || c.sampler.sample.walks_per_anchor < 1) {
    throw ConfigError("sampler: max_path_length and walks_per_anchor must be >= 1");
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse(in, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// In-memory pipeline

kg::KnowledgeGraph build_knowledge_graph(std::span<const kg::Table> tables, const GraphOptions& options) {
  kg::KnowledgeGraph graph = kg::build_graph(tables, synth::relation_naming());
  if (!options.inference) return graph;
  auto rules = synth::default_rules(graph);
  return kg::apply_inference(graph, rules, options.inference_budget);
}

std::vector<sampler::PairSubGraph> sample_corpus(const kg::KnowledgeGraph& graph,
                                                 std::span<const sampler::LabeledPair> labels,
                                                 const sampler::SampleOptions& options, sampler::LabelScheme scheme,
                                                 std::uint64_t seed) {
  const sampler::WalkIndex index(graph);
  std::vector<sampler::PairSubGraph> out(labels.size());
  parallel_for(labels.size(), [&](std::size_t i) {
    const auto& l = labels[i];
    auto sub = sampler::sample_pair_subgraph(index, l.candidate, l.vacancy, options,
                                             derive_seed(seed, {"walk", l.candidate, l.vacancy}));
    sub = sampler::relabel_local(sub);
    sub.label = l.label;
    sub.scheme = scheme;
    sampler::validate(sub);
    out[i] = std::move(sub);
  });
  return out;
}

void assign_splits(Corpus& corpus, const std::array<double, 3>& ratios, std::uint64_t seed) {
  std::set<std::string> keys;
  for (const auto& s : corpus.subgraphs) keys.insert(s.candidate_key);
  const std::vector<std::string> candidates(keys.begin(), keys.end());
  corpus.splits = sampler::split_by_candidate(candidates, ratios, derive_seed(seed, {"split"}));
  corpus.train.clear();
  corpus.validation.clear();
  corpus.test.clear();
  for (const auto& s : corpus.subgraphs) {
    if (corpus.splits.train.count(s.candidate_key)) {
      corpus.train.push_back(s);
    } else if (corpus.splits.validation.count(s.candidate_key)) {
      corpus.validation.push_back(s);
    } else {
      corpus.test.push_back(s);
    }
  }
}

std::map<std::string, std::string> regions_of(const kg::KnowledgeGraph& graph, kg::EntityKind kind) {
  std::map<std::string, std::string> out;
  for (auto id : graph.entities_of_kind(kind)) {
    const auto& e = graph.entity(id);
    auto it = e.attrs.find("region");
    out[e.key] = it == e.attrs.end() ? "" : it->second;
  }
  return out;
}

namespace {
void finish_corpus(Corpus& c) {
  c.features = model::FeatureStore::from_graph(c.graph);
  c.candidate_region = regions_of(c.graph, kg::EntityKind::Candidate);
  c.vacancy_region = regions_of(c.graph, kg::EntityKind::Vacancy);
}
}  // namespace

Corpus build_corpus(const synth::SynthWorld& world, const RunConfig& config) {
  Corpus c;
  const auto tables = synth::world_to_tables(world);
  c.graph = build_knowledge_graph(tables, config.graph);
  finish_corpus(c);
  c.subgraphs = sample_corpus(c.graph, world.labels, config.sampler.sample, world.config.label_scheme, config.seed);
  assign_splits(c, config.sampler.split, config.seed);
  return c;
}

model::ModelConfig model_config_for(const RunConfig& config, const kg::KnowledgeGraph& graph) {
  model::ModelConfig m = config.model;
  m.relation_count = std::max<std::size_t>(1, graph.relations().size());
  m.seed = config.seed;
  return m;
}

std::vector<metrics::RankedList> ranked_lists(std::span<const sampler::PairSubGraph> subs,
                                              std::span<const double> scores,
                                              const std::map<std::string, std::string>& candidate_region) {
  if (subs.size() != scores.size()) throw ShapeMismatch("ranked_lists: one score per subgraph required");
  std::map<std::string, std::vector<std::size_t>> by_candidate;
  for (std::size_t i = 0; i < subs.size(); ++i) by_candidate[subs[i].candidate_key].push_back(i);
  std::vector<metrics::RankedList> out;
  for (const auto& [cand, idx] : by_candidate) {
    std::vector<std::string> vacs;
    std::vector<double> sc;
    std::vector<int> labels;
    for (std::size_t i : idx) {
      vacs.push_back(subs[i].vacancy_key);
      sc.push_back(scores[i]);
      labels.push_back(subs[i].label);
    }
    auto it = candidate_region.find(cand);
    out.push_back(metrics::RankedList::build(cand, it == candidate_region.end() ? "" : it->second, std::move(vacs),
                                             std::move(sc), std::move(labels)));
  }
  return out;
}

std::vector<double> random_scores(std::span<const sampler::PairSubGraph> subs, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_candidate;
  for (std::size_t i = 0; i < subs.size(); ++i) by_candidate[subs[i].candidate_key].push_back(i);
  std::vector<double> out(subs.size());
  for (const auto& [cand, idx] : by_candidate) {
    auto s = baselines::random_scores(cand, idx.size(), seed);
    for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = s[j];
  }
  return out;
}

namespace {
const std::string& text_of(const model::FeatureStore& features, const std::string& key, const char* column) {
  return features.at(key + "#" + column).payload;
}
}  // namespace

std::vector<double> tfidf_scores(const Corpus& corpus, std::span<const sampler::PairSubGraph> subs) {
  std::set<std::string> cands, vacs;
  for (const auto& s : corpus.train) {
    cands.insert(s.candidate_key);
    vacs.insert(s.vacancy_key);
  }
  std::vector<std::string> docs;
  for (const auto& c : cands) docs.push_back(text_of(corpus.features, c, "cv"));
  for (const auto& v : vacs) docs.push_back(text_of(corpus.features, v, "description"));
  baselines::TfIdfIndex index;
  index.fit(docs);
  std::vector<double> out;
  std::map<std::string, baselines::SparseVector> cache;
  auto vec = [&](const std::string& key, const char* column) -> const baselines::SparseVector& {
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, index.vectorize(text_of(corpus.features, key, column))).first;
    return it->second;
  };
  for (const auto& s : subs)
    out.push_back(baselines::cosine(vec(s.candidate_key, "cv"), vec(s.vacancy_key, "description")));
  return out;
}

std::vector<double> ranker_scores(const model::GraphRanker& ranker, const Corpus& corpus,
                                  std::span<const sampler::PairSubGraph> subs) {
  std::vector<const sampler::PairSubGraph*> ptrs;
  for (const auto& s : subs) ptrs.push_back(&s);
  return model::score_subgraphs(ranker, ptrs, corpus.features);
}

std::unique_ptr<model::GraphRanker> make_ranker(const std::string& name, const model::ModelConfig& config) {
  if (name == "okra") return std::make_unique<model::OkraModel>(config);
  return baselines::make_graph_baseline(name, config);
}

metrics::EvalReport evaluate_scores(const std::string& name, const Corpus& corpus,
                                    std::span<const sampler::PairSubGraph> subs, std::span<const double> scores,
                                    const metrics::EvalOptions& options) {
  auto lists = ranked_lists(subs, scores, corpus.candidate_region);
  return metrics::evaluate(name, lists, corpus.vacancy_region, options);
}

// ---------------------------------------------------------------------------
// Subgraph JSON lines

void write_subgraphs_jsonl(std::span<const sampler::PairSubGraph> subs, std::ostream& out) {
  for (const auto& s : subs) {
    ordered_json j;
    j["origin"] = {s.candidate_key, s.vacancy_key};
    auto& nodes = j["nodes"] = ordered_json::array();
    for (const auto& n : s.nodes) nodes.push_back({n.local_id, kg::to_string(n.kind), n.feature_ref});
    auto& edges = j["edges"] = ordered_json::array();
    for (const auto& e : s.edges) edges.push_back({e.src, e.dst, e.relation});
    j["main_candidate"] = s.main_candidate;
    j["main_vacancy"] = s.main_vacancy;
    j["label"] = s.label;
    j["scheme"] = s.scheme == sampler::LabelScheme::Proprietary ? "proprietary" : "zhaopin";
    j["direction"] =
        s.direction == sampler::Direction::CandidateToVacancy ? "candidate_to_vacancy" : "vacancy_to_candidate";
    out << j.dump() << "\n";
  }
}

std::vector<sampler::PairSubGraph> read_subgraphs_jsonl(std::istream& in) {
  std::vector<sampler::PairSubGraph> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      sampler::PairSubGraph s;
      s.candidate_key = j.at("origin").at(0).get<std::string>();
      s.vacancy_key = j.at("origin").at(1).get<std::string>();
      for (const auto& n : j.at("nodes")) {
        s.nodes.push_back(
            {n.at(0).get<std::uint32_t>(), kg::parse_kind(n.at(1).get<std::string>()), n.at(2).get<std::string>()});
      }
      for (const auto& e : j.at("edges")) {
        s.edges.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>(), e.at(2).get<kg::RelationId>()});
      }
      s.main_candidate = j.at("main_candidate").get<std::uint32_t>();
      s.main_vacancy = j.at("main_vacancy").get<std::uint32_t>();
      s.label = j.at("label").get<int>();
      s.scheme = j.at("scheme").get<std::string>() == "zhaopin" ? sampler::LabelScheme::Zhaopin
                                                                : sampler::LabelScheme::Proprietary;
      s.direction = j.at("direction").get<std::string>() == "vacancy_to_candidate"
                        ? sampler::Direction::VacancyToCandidate
                        : sampler::Direction::CandidateToVacancy;
      sampler::validate(s);
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw FormatError("subgraphs line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError("subgraphs line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

fs::path manifest_path(const RunConfig& c) { return c.out / "manifest.json"; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("missing input " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("missing input " + p.string() + " (run the upstream stage first)");
  return in;
}

ordered_json load_manifest(const RunConfig& c) {
  const auto text = read_file(manifest_path(c));
  ordered_json m;
  try {
    m = ordered_json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  const auto stored = m.value("config_digest", std::string());
  if (stored != c.digest()) {
    throw DigestMismatch("artifacts in " + c.out.string() + " were produced with config digest " + stored +
                         ", current config has " + c.digest());
  }
  return m;
}

void save_manifest(const RunConfig& c, ordered_json m) {
  std::ofstream out(manifest_path(c), std::ios::binary);
  out << m.dump(2) << "\n";
}

/// Records the SHA-256 of freshly written artifacts in the manifest.
void record_artifacts(const RunConfig& c, const std::vector<std::string>& names) {
  auto m = load_manifest(c);
  for (const auto& n : names) m["artifacts"][n] = sha256_hex(read_file(c.out / n));
  save_manifest(c, m);
}

std::ofstream open_output(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

/// Graph plus features as written by build-kg.
Corpus load_graph_stage(const RunConfig& c) {
  auto ents = open_input(c.out / "entities.tsv");
  auto rels = open_input(c.out / "relations.tsv");
  auto trip = open_input(c.out / "triples.tsv");
  Corpus corpus;
  corpus.graph = kg::read_graph_tsv(ents, rels, trip);
  finish_corpus(corpus);
  return corpus;
}

Corpus load_sampled(const RunConfig& c) {
  load_manifest(c);
  Corpus corpus = load_graph_stage(c);
  auto in = open_input(c.out / "subgraphs.jsonl");
  corpus.subgraphs = read_subgraphs_jsonl(in);
  open_input(c.out / "splits.json");
  assign_splits(corpus, c.sampler.split, c.seed);
  return corpus;
}

void write_checkpoint_file(const fs::path& p, const model::GraphRanker& r, const std::string& digest) {
  auto out = open_output(p);
  train::write_checkpoint(r.params(), digest, out);
}

std::unique_ptr<model::GraphRanker> load_ranker(const RunConfig& c, const Corpus& corpus, const std::string& name,
                                                const fs::path& ckpt, const fs::path& model_json) {
  auto mj = ordered_json::parse(read_file(model_json));
  model::ModelConfig m = model_config_for(c, corpus.graph);
  m.text_dim = mj.at("text_dim").get<std::size_t>();
  m.node_dim = mj.at("node_dim").get<std::size_t>();
  m.pooling = model::parse_pooling(mj.at("pooling").get<std::string>());
  auto ranker = make_ranker(name, m);
  auto in = open_input(ckpt);
  train::read_checkpoint(ranker->params(), in, c.digest());
  return ranker;
}

void write_model_json(const fs::path& p, const model::ModelConfig& m, double learning_rate, const std::string& digest) {
  ordered_json j;
  j["config_digest"] = digest;
  j["text_dim"] = m.text_dim;
  j["node_dim"] = m.node_dim;
  j["pooling"] = model::to_string(m.pooling);
  j["learning_rate"] = learning_rate;
  auto out = open_output(p);
  out << j.dump(2) << "\n";
}

/// Optional random search, then the final fit. Returns the trained ranker.
std::unique_ptr<model::GraphRanker> fit_ranker(const RunConfig& c, const Corpus& corpus, const std::string& name,
                                               std::vector<train::HistoryEntry>& history, train::TrainConfig& used) {
  model::ModelConfig m = model_config_for(c, corpus.graph);
  used = c.train;
  if (c.search_trials > 0) {
    auto result = train::random_search(
        m, c.train, c.search_trials, derive_seed(c.seed, {"search"}),
        [&](const model::ModelConfig& mc, const train::TrainConfig& tc) {
          auto r = make_ranker(name, mc);
          return train::train(*r, corpus.features, corpus.train, corpus.validation, tc).best_validation;
        });
    m = result.best_trial().model;
    used = result.best_trial().train;
  }
  auto ranker = make_ranker(name, m);
  history = train::train(*ranker, corpus.features, corpus.train, corpus.validation, used).history;
  return ranker;
}

void write_report(const fs::path& dir, const metrics::EvalReport& report) {
  {
    auto out = open_output(dir / "report.json");
    out << report.to_json().dump(2) << "\n";
  }
  auto out = open_output(dir / "plotdata.csv");
  metrics::write_plotdata(std::span<const metrics::EvalReport>(&report, 1), out);
}

}  // namespace

void stage_generate(const RunConfig& c) {
  fs::create_directories(c.out);
  const auto world = synth::generate(c.data);
  ordered_json m;
  m["config_digest"] = c.digest();
  m["seed"] = c.seed;
  m["artifacts"] = ordered_json::object();
  save_manifest(c, m);
  std::vector<std::string> names;
  for (const auto& t : synth::world_to_tables(world)) {
    auto out = open_output(c.out / (t.name + ".tsv"));
    synth::write_table_tsv(t, out);
    names.push_back(t.name + ".tsv");
  }
  {
    auto out = open_output(c.out / "labels.tsv");
    synth::write_labels_tsv(world.labels, out);
  }
  names.push_back("labels.tsv");
  record_artifacts(c, names);
}

void stage_build_kg(const RunConfig& c) {
  load_manifest(c);
  std::vector<kg::Table> tables;
  for (const auto& schema : synth::table_schemas()) {
    auto in = open_input(c.out / (schema.name + ".tsv"));
    tables.push_back(synth::read_table_tsv(schema, in));
  }
  const auto graph = build_knowledge_graph(tables, c.graph);
  {
    auto out = open_output(c.out / "entities.tsv");
    kg::write_entities_tsv(graph, out);
  }
  {
    auto out = open_output(c.out / "relations.tsv");
    kg::write_relations_tsv(graph, out);
  }
  {
    auto out = open_output(c.out / "triples.tsv");
    kg::write_triples_tsv(graph, out);
  }
  {
    auto out = open_output(c.out / "features.tsv");
    model::FeatureStore::from_graph(graph).write_tsv(out);
  }
  record_artifacts(c, {"entities.tsv", "relations.tsv", "triples.tsv", "features.tsv"});
}

void stage_sample(const RunConfig& c) {
  load_manifest(c);
  Corpus corpus = load_graph_stage(c);
  auto lin = open_input(c.out / "labels.tsv");
  const auto labels = synth::read_labels_tsv(lin);
  corpus.subgraphs = sample_corpus(corpus.graph, labels, c.sampler.sample, c.data.label_scheme, c.seed);
  assign_splits(corpus, c.sampler.split, c.seed);
  {
    auto out = open_output(c.out / "subgraphs.jsonl");
    write_subgraphs_jsonl(corpus.subgraphs, out);
  }
  {
    ordered_json j;
    j["config_digest"] = c.digest();
    j["train"] = corpus.splits.train;
    j["validation"] = corpus.splits.validation;
    j["test"] = corpus.splits.test;
    auto out = open_output(c.out / "splits.json");
    out << j.dump(2) << "\n";
  }
  record_artifacts(c, {"subgraphs.jsonl", "splits.json"});
}

void stage_train(const RunConfig& c) {
  const Corpus corpus = load_sampled(c);
  std::vector<train::HistoryEntry> history;
  train::TrainConfig used;
  auto ranker = fit_ranker(c, corpus, "okra", history, used);
  write_checkpoint_file(c.out / "checkpoint.bin", *ranker, c.digest());
  write_model_json(c.out / "model.json", ranker->config(), used.learning_rate, c.digest());
  {
    auto out = open_output(c.out / "history.csv");
    train::write_history_csv(history, out);
  }
  record_artifacts(c, {"checkpoint.bin", "model.json", "history.csv"});
}

void stage_evaluate(const RunConfig& c) {
  const Corpus corpus = load_sampled(c);
  auto ranker = load_ranker(c, corpus, "okra", c.out / "checkpoint.bin", c.out / "model.json");
  auto scores = ranker_scores(*ranker, corpus, corpus.test);
  auto report = evaluate_scores("okra", corpus, corpus.test, scores, c.eval);
  report.config_digest = c.digest();
  write_report(c.out, report);
  record_artifacts(c, {"report.json", "plotdata.csv"});
}

void stage_explain(const RunConfig& c) {
  const Corpus corpus = load_sampled(c);
  auto ranker = load_ranker(c, corpus, "okra", c.out / "checkpoint.bin", c.out / "model.json");
  const auto& okra = dynamic_cast<const model::OkraModel&>(*ranker);
  auto out = open_output(c.out / "explanations.jsonl");
  for (const auto& report : okra.explain(corpus.test, corpus.features)) model::write_explanation_json(report, out);
  out.close();
  record_artifacts(c, {"explanations.jsonl"});
}

void stage_baseline(const RunConfig& c, const std::string& name) {
  static const std::set<std::string> known = {"random", "tfidf", "gtrans1", "gtrans2", "ablation"};
  if (!known.count(name))
    throw ConfigError("unknown baseline '" + name + "' (random, tfidf, gtrans1, gtrans2, ablation)");
  const Corpus corpus = load_sampled(c);
  std::vector<double> scores;
  const fs::path dir = c.out / "baselines" / name;
  std::vector<std::string> artifacts;
  if (name == "random") {
    scores = random_scores(corpus.test, derive_seed(c.seed, {"random-baseline"}));
  } else if (name == "tfidf") {
    scores = tfidf_scores(corpus, corpus.test);
  } else {
    std::vector<train::HistoryEntry> history;
    train::TrainConfig used;
    auto ranker = fit_ranker(c, corpus, name, history, used);
    scores = ranker_scores(*ranker, corpus, corpus.test);
    write_checkpoint_file(dir / "checkpoint.bin", *ranker, c.digest());
    auto out = open_output(dir / "history.csv");
    train::write_history_csv(history, out);
    artifacts = {"baselines/" + name + "/checkpoint.bin", "baselines/" + name + "/history.csv"};
  }
  auto report = evaluate_scores(name, corpus, corpus.test, scores, c.eval);
  report.config_digest = c.digest();
  write_report(dir, report);
  artifacts.push_back("baselines/" + name + "/report.json");
  artifacts.push_back("baselines/" + name + "/plotdata.csv");
  record_artifacts(c, artifacts);
}

}  // namespace okra::pipeline
