#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "okra/model.hpp"
#include "okra/sampler.hpp"

namespace okra::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double sigma = 1.0;
  std::size_t ndcg_cutoff = 10;
  /// Group by vacancy instead of candidate.
  bool company_groups = false;
  std::uint64_t seed = 0;

  void validate() const;
  std::string canonical() const;
};

/// The subgraphs ranked against each other: all pairs of one candidate.
struct Group {
  std::string key;
  std::vector<const sampler::PairSubGraph*> items;
  std::vector<int> labels() const;
};

/// Groups in key order; items keep corpus order.
std::vector<Group> make_groups(std::span<const sampler::PairSubGraph> corpus, bool by_vacancy = false);

/// dC/ds for each item of one group. Pairs (i, j) with label_i > label_j
/// contribute lambda = -sigma |dNDCG| / (1 + exp(sigma (s_i - s_j))) to i and
/// its negation to j, so a descent step raises s_i. A group whose labels are
/// all equal gets zero gradients.
std::vector<double> lambdarank_grads(std::span<const double> scores, std::span<const int> labels, double sigma = 1.0,
                                     std::size_t cutoff = 10);

/// |dNDCG|-weighted RankNet loss of one group, reported in the history.
double lambdarank_loss(std::span<const double> scores, std::span<const int> labels, double sigma = 1.0,
                       std::size_t cutoff = 10);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

/// One bias-corrected ADAM update from the parameters' gradient buffers.
/// Throws NonFiniteGradient (leaving parameters untouched) on NaN/inf.
void adam_step(model::ParamSet& params, AdamState& state, const TrainConfig& config);

struct HistoryEntry {
  std::size_t epoch = 0;
  std::string split;  // "train" | "validation"
  double ndcg10 = 0.0;
  double loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<HistoryEntry> history;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;
};

/// Mean nDCG@10 over groups, scored with the current parameters.
double mean_ndcg(const model::GraphRanker& ranker, std::span<const Group> groups, const model::FeatureStore& features,
                 std::size_t k = 10);

/// Epoch 0 is the untrained model. Each epoch shuffles the groups and takes
/// one ADAM step per group. Parameters end at the best-validation epoch (the
/// training split stands in when there is no validation data).
/// Throws EmptyCorpus when no training group has two labels to compare.
TrainResult train(model::GraphRanker& ranker, const model::FeatureStore& features,
                  std::span<const sampler::PairSubGraph> train_set,
                  std::span<const sampler::PairSubGraph> validation_set, const TrainConfig& config);

void write_history_csv(std::span<const HistoryEntry> history, std::ostream& out);

/// Binary checkpoint: magic, version, config digest, parameter count and a
/// little-endian float64 blob in declaration order.
void write_checkpoint(const model::ParamSet& params, const std::string& digest, std::ostream& out);
/// Throws FormatError on a malformed file, DigestMismatch when the stored
/// digest differs from `expected_digest` (if given).
std::string read_checkpoint(model::ParamSet& params, std::istream& in,
                            const std::optional<std::string>& expected_digest = std::nullopt);

struct SearchTrial {
  model::ModelConfig model;
  TrainConfig train;
  double validation_ndcg = 0.0;
};

struct SearchResult {
  std::vector<SearchTrial> trials;
  std::size_t best = 0;
  const SearchTrial& best_trial() const { return trials.at(best); }
};

using SearchObjective = std::function<double(const model::ModelConfig&, const TrainConfig&)>;

/// Samples T in {64,128}, M in {16,32}, pooling in {mean,max,sum} and a
/// log-uniform learning rate in [1e-5, 1e-3]; everything else comes from the
/// base configs. Returns all trials and the argmax (first on ties).
SearchResult random_search(const model::ModelConfig& base_model, const TrainConfig& base_train, std::size_t trials,
                           std::uint64_t seed, const SearchObjective& objective);

}  // namespace okra::train
