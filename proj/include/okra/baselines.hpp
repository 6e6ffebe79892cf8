#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "okra/model.hpp"

namespace okra::baselines {

/// One uniform score in [0,1) per vacancy, drawn from a stream derived from
/// (seed, candidate key). Scores follow input order.
std::vector<double> random_scores(std::string_view candidate, std::size_t vacancy_count, std::uint64_t seed);

/// Vacancy indices, best first, for the random baseline.
std::vector<std::size_t> random_ranker(std::string_view candidate, std::size_t vacancy_count, std::uint64_t seed);

using SparseVector = std::map<std::string, double>;

class TfIdfIndex {
 public:
  /// Document frequencies over lowercase alphanumeric tokens.
  void fit(std::span<const std::string> documents);
  /// tf * idf with idf = ln((1+N)/(1+df)) + 1, L2-normalised; tokens unseen at
  /// fit time are dropped. All-zero vectors stay zero.
  SparseVector vectorize(std::string_view text) const;
  double idf(const std::string& token) const;

  std::size_t document_count() const { return n_docs_; }
  std::size_t vocabulary_size() const { return df_.size(); }

 private:
  std::map<std::string, std::size_t, std::less<>> df_;
  std::size_t n_docs_ = 0;
};

double cosine(const SparseVector& a, const SparseVector& b);

struct ScoredIndex {
  std::size_t index;
  double score;
};

/// Vacancies ranked by cosine similarity to the CV (stable on ties).
std::vector<ScoredIndex> tfidf_rank(const TfIdfIndex& index, std::string_view cv_text,
                                    std::span<const std::string> vacancy_texts);

/// Node encoder, `depth` graph transformer layers, pooling with main-node
/// concatenation and one bounded score head. Depth 2 is the OKRA ablation.
class GraphTransformerRanker : public model::GraphRanker {
 public:
  GraphTransformerRanker(model::ModelConfig config, std::size_t depth, std::string kind);
  GraphTransformerRanker(const GraphTransformerRanker&) = delete;
  GraphTransformerRanker& operator=(const GraphTransformerRanker&) = delete;

  ad::Tensor score(ad::Tape& tape, const model::GraphBatch& batch, const model::FeatureStore& features) const override;
  model::ParamSet& params() override { return params_; }
  const model::ParamSet& params() const override { return params_; }
  std::string kind() const override { return kind_; }
  const model::ModelConfig& config() const override { return config_; }
  std::size_t depth() const { return layers_.size(); }

 private:
  model::ModelConfig config_;
  std::string kind_;
  model::ParamSet params_;
  model::NodeEncoder encoder_;
  std::vector<model::GraphTransformerLayer> layers_;
  model::ScoreHead head_;
};

/// "gtrans1", "gtrans2" or "ablation"; throws ConfigError otherwise.
std::unique_ptr<GraphTransformerRanker> make_graph_baseline(const std::string& name, const model::ModelConfig& config);

}  // namespace okra::baselines
