#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "okra/autodiff.hpp"
#include "okra/kg.hpp"
#include "okra/sampler.hpp"

namespace okra::model {

enum class Pooling { Mean, Max, Sum };
std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view name);

struct ModelConfig {
  std::size_t text_dim = 128;  // T
  std::size_t node_dim = 32;   // M
  std::size_t channels = 4;    // H, fixed
  Pooling pooling = Pooling::Mean;
  std::size_t hash_buckets = 512;
  std::size_t token_limit = 96;
  double leaky_slope = 0.2;
  double score_bound = 100.0;
  double fusion_shift = 1.0;
  std::size_t relation_count = 1;
  std::uint64_t seed = 0;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
  /// Canonical key=value rendering, used for digests.
  std::string canonical() const;
};

// ---------------------------------------------------------------------------
// Node features

/// Feature sidecar: what a subgraph node's feature_ref resolves to.
class FeatureStore {
 public:
  struct Feature {
    kg::EntityKind kind = kg::EntityKind::Skill;
    std::string payload;
    /// FNV-1a hashes of the payload's leading whitespace tokens.
    std::vector<std::uint64_t> token_hashes;
  };

  void add(std::string key, kg::EntityKind kind, std::string payload = {});
  /// Throws MissingFeature.
  const Feature& at(std::string_view key) const;
  bool contains(std::string_view key) const { return features_.count(std::string(key)) > 0; }
  std::size_t size() const { return features_.size(); }

  static FeatureStore from_graph(const kg::KnowledgeGraph& graph);
  void write_tsv(std::ostream& out) const;
  static FeatureStore read_tsv(std::istream& in);

 private:
  std::map<std::string, Feature, std::less<>> features_;
};

/// Tokens kept per text (also bounds the cached hashes).
inline constexpr std::size_t kMaxCachedTokens = 1024;

// ---------------------------------------------------------------------------
// Batched graph view

/// One orientation of a batch's edges, sorted by destination so that each
/// destination's incoming edges form one segment.
struct EdgeView {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<std::size_t> type;
  /// For each sorted edge, its index in the concatenated stored edge list.
  std::vector<std::size_t> stored_index;
  ad::Segments by_dst;
  /// Per node: its row in the per-segment output, or segment_count() when
  /// the node has no incoming edge.
  std::vector<std::size_t> node_segment;
  std::size_t segment_count = 0;

  std::size_t size() const { return src.size(); }
  static EdgeView build(std::size_t node_count, std::vector<std::size_t> src, std::vector<std::size_t> dst,
                        std::vector<std::size_t> type);
};

/// Disjoint union of a group of subgraphs with global node numbering.
struct GraphBatch {
  std::size_t node_count = 0;
  std::vector<kg::EntityKind> kinds;
  std::vector<std::string> feature_refs;
  std::vector<std::size_t> node_offset;     // per graph, plus total at the end
  std::vector<std::size_t> edge_offset;     // per graph, plus total at the end
  ad::Segments graphs;                      // node rows of each graph
  std::vector<std::size_t> main_candidate;  // global node index per graph
  std::vector<std::size_t> main_vacancy;
  EdgeView stored;          // edges as stored in the subgraphs
  EdgeView candidate_view;  // CandidateToVacancy orientation
  EdgeView company_view;    // VacancyToCandidate orientation

  std::size_t graph_count() const { return main_candidate.size(); }
  static GraphBatch build(std::span<const sampler::PairSubGraph* const> subs);
  static GraphBatch build(std::span<const sampler::PairSubGraph> subs);
};

// ---------------------------------------------------------------------------
// Parameters

/// Ordered, named trainable tensors. Declaration order is the checkpoint order.
class ParamSet {
 public:
  ad::Tensor add(std::string name, ad::Shape shape, double stddev, std::uint64_t seed);
  ad::Tensor add_constant(std::string name, ad::Shape shape, double value);

  std::span<const std::pair<std::string, ad::Tensor>> entries() const { return entries_; }
  std::size_t scalar_count() const;
  void zero_grad();
  std::vector<double> snapshot() const;
  void restore(std::span<const double> values);

 private:
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
};

// ---------------------------------------------------------------------------
// Components

/// Initial node embeddings: hashed bag of tokens for text nodes, per-kind
/// embedding plus a fixed per-entity random offset for everything else.
/// Every node also gets a role embedding: main candidate, main vacancy or other.
class NodeEncoder {
 public:
  NodeEncoder(ParamSet& params, const ModelConfig& config);
  ad::Tensor forward(ad::Tape& tape, const GraphBatch& batch, const FeatureStore& features) const;
  /// The text path alone (V x T), before the linear map to M; rows for
  /// bucket-count vectors built from the first token_limit tokens.
  ad::Tensor text_projection(ad::Tape& tape, std::span<const std::string> payloads) const;
  /// The fixed offset added to a non-text node.
  std::vector<double> node_offset(std::string_view feature_ref) const;

 private:
  ad::Tensor project_tokens(ad::Tape& tape, const std::vector<std::vector<std::size_t>>& buckets) const;

  struct OffsetCache;

  const ModelConfig* config_;
  ad::Tensor text_proj_, text_bias_, text_out_, text_out_bias_, kind_embedding_, role_embedding_;
  std::shared_ptr<OffsetCache> offsets_;
};

/// Masked-attention graph transformer convolution with edge-type embeddings
/// and a root (skip) weight, followed by leaky ReLU.
class GraphTransformerLayer {
 public:
  GraphTransformerLayer(ParamSet& params, const std::string& prefix, std::size_t dim, std::size_t relations,
                        double slope, std::uint64_t seed);
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& h, const EdgeView& edges) const;

  ad::Tensor query, key, value, skip, skip_bias, edge_type;

 private:
  std::size_t dim_;
  double slope_;
};

/// Per-channel attention output of one stakeholder side.
struct SideOutput {
  ad::Tensor embedding;                     // V x (M*H)
  std::vector<ad::Tensor> node_importance;  // H tensors of V x 1
  std::vector<ad::Tensor> edge_importance;  // H tensors of E x 1, in the view's sorted order
};

/// H GATv2 attention channels for one side. Each channel scores its edges,
/// turns the attention-weighted incoming logits into a per-graph node
/// softmax, and rescales the node embeddings with it.
class StakeholderChannels {
 public:
  StakeholderChannels(ParamSet& params, const std::string& prefix, const ModelConfig& config);
  SideOutput forward(ad::Tape& tape, const ad::Tensor& h, const EdgeView& edges, const GraphBatch& batch) const;

  struct Channel {
    ad::Tensor left, right, attn;
  };
  std::vector<Channel> channels;

 private:
  const ModelConfig* config_;
};

/// Linear score head bounded by score_bound * tanh.
class ScoreHead {
 public:
  ScoreHead(ParamSet& params, const std::string& prefix, std::size_t in_dim, double bound, std::uint64_t seed);
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x) const;

  ad::Tensor weight, bias;

 private:
  double bound_;
};

/// pooled || main candidate || main vacancy, one row per graph.
ad::Tensor pool_subgraph(ad::Tape& tape, const ad::Tensor& h, const GraphBatch& batch, Pooling pooling);

/// Harmonic mean of shifted scores, shifted back: lower score dominates.
double fuse_harmonic(double s_cand, double s_comp, double bound = 100.0, double shift = 1.0);
ad::Tensor fuse_harmonic(ad::Tape& tape, const ad::Tensor& s_cand, const ad::Tensor& s_comp, double bound = 100.0,
                         double shift = 1.0);

// ---------------------------------------------------------------------------
// Rankers

/// Anything that scores a batch of subgraphs with trainable parameters.
class GraphRanker {
 public:
  virtual ~GraphRanker() = default;
  virtual ParamSet& params() = 0;
  virtual const ParamSet& params() const = 0;
  /// G x 1 ranking scores.
  virtual ad::Tensor score(ad::Tape& tape, const GraphBatch& batch, const FeatureStore& features) const = 0;
  virtual std::string kind() const = 0;
  virtual const ModelConfig& config() const = 0;
};

struct ForwardOutput {
  ad::Tensor fused;      // G x 1
  ad::Tensor candidate;  // G x 1
  ad::Tensor company;    // G x 1
  SideOutput candidate_side;
  SideOutput company_side;
};

struct ChannelReport {
  std::string side;                      // "candidate" | "company"
  std::string polarity;                  // "positive" | "negative"
  std::vector<double> node_importances;  // per local node
  std::vector<double> edge_importances;  // per stored edge
};

struct ExplanationReport {
  std::string candidate_key;
  std::string vacancy_key;
  std::array<ChannelReport, 4> channels;
  double candidate_score = 0.0;
  double company_score = 0.0;
  double fused_score = 0.0;

  /// Indices of the k most important nodes of a channel, best first.
  std::vector<std::size_t> top_nodes(std::size_t channel, std::size_t k) const;
};

/// Relational embedding (two graph transformers), stakeholder-specific
/// channels for both sides, pooling with main-node concatenation, two score
/// heads and harmonic fusion.
class OkraModel : public GraphRanker {
 public:
  explicit OkraModel(ModelConfig config);
  OkraModel(const OkraModel&) = delete;
  OkraModel& operator=(const OkraModel&) = delete;

  ForwardOutput forward(ad::Tape& tape, const GraphBatch& batch, const FeatureStore& features) const;
  ad::Tensor score(ad::Tape& tape, const GraphBatch& batch, const FeatureStore& features) const override;
  std::vector<ExplanationReport> explain(std::span<const sampler::PairSubGraph> subs,
                                         const FeatureStore& features) const;

  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  std::string kind() const override { return "okra"; }
  const ModelConfig& config() const override { return config_; }

  const NodeEncoder& encoder() const { return encoder_; }
  const std::array<GraphTransformerLayer, 2>& layers() const { return layers_; }
  StakeholderChannels& candidate_channels() { return candidate_channels_; }
  StakeholderChannels& company_channels() { return company_channels_; }
  ScoreHead& candidate_head() { return candidate_head_; }
  ScoreHead& company_head() { return company_head_; }

 private:
  ModelConfig config_;
  ParamSet params_;
  NodeEncoder encoder_;
  std::array<GraphTransformerLayer, 2> layers_;
  StakeholderChannels candidate_channels_;
  StakeholderChannels company_channels_;
  ScoreHead candidate_head_;
  ScoreHead company_head_;
};

/// Plain-value scores for a list of subgraphs, evaluated in chunks.
std::vector<double> score_subgraphs(const GraphRanker& ranker, std::span<const sampler::PairSubGraph* const> subs,
                                    const FeatureStore& features);

void write_explanation_json(const ExplanationReport& report, std::ostream& out);

}  // namespace okra::model
