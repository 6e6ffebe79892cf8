#include "okra/baselines.hpp"

#include <cmath>
#include <random>

namespace okra::baselines {

std::vector<double> random_scores(std::string_view candidate, std::size_t vacancy_count, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, {"random-ranker", candidate}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(vacancy_count);
  for (double& s : out) s = u(rng);
  return out;
}

std::vector<std::size_t> random_ranker(std::string_view candidate, std::size_t vacancy_count, std::uint64_t seed) {
  auto scores = random_scores(candidate, vacancy_count, seed);
  std::vector<std::size_t> idx(vacancy_count);
  for (std::size_t i = 0; i < vacancy_count; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

void TfIdfIndex::fit(std::span<const std::string> documents) {
  df_.clear();
  n_docs_ = documents.size();
  for (const auto& doc : documents) {
    auto toks = tokenize_alnum(doc);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df_[t];
  }
}

double TfIdfIndex::idf(const std::string& token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + df)) + 1.0;
}

SparseVector TfIdfIndex::vectorize(std::string_view text) const {
  SparseVector v;
  for (auto& t : tokenize_alnum(text)) {
    if (df_.count(t)) v[t] += 1.0;
  }
  double norm = 0.0;
  for (auto& [t, w] : v) {
    w *= idf(t);
    norm += w * w;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& [t, w] : v) w /= norm;
  }
  return v;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : a) na += w * w;
  for (const auto& [t, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia, ++ib;
    }
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<ScoredIndex> tfidf_rank(const TfIdfIndex& index, std::string_view cv_text,
                                    std::span<const std::string> vacancy_texts) {
  const SparseVector cv = index.vectorize(cv_text);
  std::vector<ScoredIndex> out;
  for (std::size_t i = 0; i < vacancy_texts.size(); ++i)
    out.push_back({i, cosine(cv, index.vectorize(vacancy_texts[i]))});
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredIndex& a, const ScoredIndex& b) { return a.score > b.score; });
  return out;
}

GraphTransformerRanker::GraphTransformerRanker(model::ModelConfig config, std::size_t depth, std::string kind)
    : config_((config.validate(), config)),
      kind_(std::move(kind)),
      encoder_(params_, config_),
      head_(params_, "head", 3 * config_.node_dim, config_.score_bound, config_.seed) {
  if (depth < 1 || depth > 2) throw ConfigError("graph transformer baseline depth must be 1 or 2");
  layers_.reserve(depth);
  for (std::size_t d = 0; d < depth; ++d) {
    layers_.emplace_back(params_, "layer" + std::to_string(d), config_.node_dim, config_.relation_count,
                         config_.leaky_slope, config_.seed);
  }
}

ad::Tensor GraphTransformerRanker::score(ad::Tape& tape, const model::GraphBatch& batch,
                                         const model::FeatureStore& features) const {
  ad::Tensor h = encoder_.forward(tape, batch, features);
  for (const auto& layer : layers_) h = layer.forward(tape, h, batch.stored);
  return head_.forward(tape, model::pool_subgraph(tape, h, batch, config_.pooling));
}

std::unique_ptr<GraphTransformerRanker> make_graph_baseline(const std::string& name, const model::ModelConfig& config) {
  if (name == "gtrans1") return std::make_unique<GraphTransformerRanker>(config, 1, name);
  if (name == "gtrans2" || name == "ablation") return std::make_unique<GraphTransformerRanker>(config, 2, name);
  throw ConfigError("unknown graph baseline '" + name + "'");
}

}  // namespace okra::baselines
