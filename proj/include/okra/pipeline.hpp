#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "okra/baselines.hpp"
#include "okra/kg.hpp"
#include "okra/metrics.hpp"
#include "okra/model.hpp"
#include "okra/sampler.hpp"
#include "okra/synthgen.hpp"
#include "okra/train.hpp"

namespace okra::pipeline {

struct GraphOptions {
  bool inference = true;
  /// Cap on derived triples; 0 picks the default.
  std::size_t inference_budget = 0;
};

struct SamplerConfig {
  sampler::SampleOptions sample;
  std::array<double, 3> split{0.8, 0.1, 0.1};
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  synth::SynthConfig data;
  GraphOptions graph;
  SamplerConfig sampler;
  model::ModelConfig model;
  train::TrainConfig train;
  std::size_t search_trials = 0;
  metrics::EvalOptions eval;

  /// Pushes the global seed into every module config.
  void set_seed(std::uint64_t s);
  /// Every addressable key as section.key=value lines, sorted.
  std::string canonical() const;
  /// SHA-256 of canonical().
  std::string digest() const;

  /// INI text; unknown sections or keys throw ConfigError naming them.
  /// Relative paths resolve against `base_dir`.
  static RunConfig parse(std::istream& in, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

/// Everything downstream of the tables, in memory.
struct Corpus {
  kg::KnowledgeGraph graph;
  model::FeatureStore features;
  std::vector<sampler::PairSubGraph> subgraphs;
  sampler::SplitAssignment splits;
  std::vector<sampler::PairSubGraph> train, validation, test;
  std::map<std::string, std::string> candidate_region;
  std::map<std::string, std::string> vacancy_region;
};

kg::KnowledgeGraph build_knowledge_graph(std::span<const kg::Table> tables, const GraphOptions& options);

std::vector<sampler::PairSubGraph> sample_corpus(const kg::KnowledgeGraph& graph,
                                                 std::span<const sampler::LabeledPair> labels,
                                                 const sampler::SampleOptions& options, sampler::LabelScheme scheme,
                                                 std::uint64_t seed);

/// Splits subgraphs by candidate (candidates from the graph's label list).
void assign_splits(Corpus& corpus, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Region attribute of every candidate and vacancy in the graph.
std::map<std::string, std::string> regions_of(const kg::KnowledgeGraph& graph, kg::EntityKind kind);

Corpus build_corpus(const synth::SynthWorld& world, const RunConfig& config);

model::ModelConfig model_config_for(const RunConfig& config, const kg::KnowledgeGraph& graph);

/// Ranked lists of the test split, grouped by candidate, from arbitrary
/// per-subgraph scores (same order as `subs`).
std::vector<metrics::RankedList> ranked_lists(std::span<const sampler::PairSubGraph> subs,
                                              std::span<const double> scores,
                                              const std::map<std::string, std::string>& candidate_region);

std::vector<double> random_scores(std::span<const sampler::PairSubGraph> subs, std::uint64_t seed);
std::vector<double> tfidf_scores(const Corpus& corpus, std::span<const sampler::PairSubGraph> subs);
std::vector<double> ranker_scores(const model::GraphRanker& ranker, const Corpus& corpus,
                                  std::span<const sampler::PairSubGraph> subs);

/// Trains any graph ranker ("okra", "gtrans1", "gtrans2", "ablation").
std::unique_ptr<model::GraphRanker> make_ranker(const std::string& name, const model::ModelConfig& config);

metrics::EvalReport evaluate_scores(const std::string& name, const Corpus& corpus,
                                    std::span<const sampler::PairSubGraph> subs, std::span<const double> scores,
                                    const metrics::EvalOptions& options);

void write_subgraphs_jsonl(std::span<const sampler::PairSubGraph> subs, std::ostream& out);
std::vector<sampler::PairSubGraph> read_subgraphs_jsonl(std::istream& in);

// ---------------------------------------------------------------------------
// File-based stages. Each reads its inputs from config.out and writes its
// artifacts there. Missing inputs throw MissingInput, artifacts produced
// under another config throw DigestMismatch.

void stage_generate(const RunConfig& config);
void stage_build_kg(const RunConfig& config);
void stage_sample(const RunConfig& config);
void stage_train(const RunConfig& config);
void stage_evaluate(const RunConfig& config);
void stage_explain(const RunConfig& config);
void stage_baseline(const RunConfig& config, const std::string& name);

}  // namespace okra::pipeline
