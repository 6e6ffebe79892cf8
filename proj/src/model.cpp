#include "okra/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace okra::model {

using ad::Tape;
using ad::Tensor;

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::Mean:
      return "mean";
    case Pooling::Max:
      return "max";
    case Pooling::Sum:
      return "sum";
  }
  return "mean";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::Mean;
  if (name == "max") return Pooling::Max;
  if (name == "sum") return Pooling::Sum;
  throw ConfigError("unknown pooling '" + std::string(name) + "' (expected mean, max or sum)");
}

void ModelConfig::validate() const {
  if (text_dim == 0 || node_dim == 0) throw ConfigError("model: text_dim and node_dim must be positive");
  if (channels != 4) throw ConfigError("model: channels is fixed at 4");
  if (hash_buckets == 0) throw ConfigError("model: hash_buckets must be positive");
  if (token_limit == 0) throw ConfigError("model: token_limit must be positive");
  if (!(score_bound > 0.0)) throw ConfigError("model: score_bound must be positive");
  if (!(fusion_shift > 0.0)) throw ConfigError("model: fusion_shift must be positive");
  if (relation_count == 0) throw ConfigError("model: relation_count must be positive");
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "text_dim=" << text_dim << "\nnode_dim=" << node_dim << "\nchannels=" << channels
     << "\npooling=" << to_string(pooling) << "\nhash_buckets=" << hash_buckets << "\ntoken_limit=" << token_limit
     << "\nleaky_slope=" << leaky_slope << "\nscore_bound=" << score_bound << "\nfusion_shift=" << fusion_shift
     << "\nrelation_count=" << relation_count << "\nseed=" << seed << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// FeatureStore

void FeatureStore::add(std::string key, kg::EntityKind kind, std::string payload) {
  Feature f;
  f.kind = kind;
  for (const auto& tok : tokenize_whitespace(payload, kMaxCachedTokens)) f.token_hashes.push_back(fnv1a(tok));
  f.payload = std::move(payload);
  features_[std::move(key)] = std::move(f);
}

const FeatureStore::Feature& FeatureStore::at(std::string_view key) const {
  auto it = features_.find(key);
  if (it == features_.end()) throw MissingFeature("no feature for node '" + std::string(key) + "'");
  return it->second;
}

FeatureStore FeatureStore::from_graph(const kg::KnowledgeGraph& graph) {
  FeatureStore store;
  for (const auto& e : graph.entities()) store.add(e.key, e.kind, e.payload.value_or(""));
  return store;
}

void FeatureStore::write_tsv(std::ostream& out) const {
  out << "feature_ref\tkind\tpayload\n";
  for (const auto& [key, f] : features_) {
    out << kg::escape_tsv(key) << "\t" << kg::to_string(f.kind) << "\t" << kg::escape_tsv(f.payload) << "\n";
  }
}

FeatureStore FeatureStore::read_tsv(std::istream& in) {
  FeatureStore store;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != 3) throw FormatError("features: expected 3 columns in '" + line + "'");
    store.add(kg::unescape_tsv(cells[0]), kg::parse_kind(cells[1]), kg::unescape_tsv(cells[2]));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Batches

EdgeView EdgeView::build(std::size_t node_count, std::vector<std::size_t> src, std::vector<std::size_t> dst,
                         std::vector<std::size_t> type) {
  const std::size_t e = src.size();
  std::vector<std::size_t> order(e);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dst[a] != dst[b]) return dst[a] < dst[b];
    if (src[a] != src[b]) return src[a] < src[b];
    if (type[a] != type[b]) return type[a] < type[b];
    return a < b;
  });
  EdgeView view;
  view.src.reserve(e);
  view.dst.reserve(e);
  view.type.reserve(e);
  for (std::size_t i : order) {
    view.src.push_back(src[i]);
    view.dst.push_back(dst[i]);
    view.type.push_back(type[i]);
  }
  view.stored_index = std::move(order);
  view.by_dst = ad::Segments::from_sorted_keys(view.dst);
  view.segment_count = view.by_dst.count();
  view.node_segment.assign(node_count, view.segment_count);
  for (std::size_t s = 0; s < view.segment_count; ++s) view.node_segment[view.dst[view.by_dst.begin(s)]] = s;
  return view;
}

GraphBatch GraphBatch::build(std::span<const sampler::PairSubGraph* const> subs) {
  GraphBatch b;
  std::vector<std::size_t> src, dst, type;
  std::vector<bool> forward_stored;
  b.node_offset.push_back(0);
  b.edge_offset.push_back(0);
  std::vector<std::size_t> offsets{0};
  for (const auto* sub : subs) {
    const std::size_t off = b.node_count;
    for (std::size_t i = 0; i < sub->nodes.size(); ++i) {
      if (sub->nodes[i].local_id != i) throw Error("GraphBatch: subgraph node ids are not dense; relabel first");
      b.kinds.push_back(sub->nodes[i].kind);
      b.feature_refs.push_back(sub->nodes[i].feature_ref);
    }
    if (sub->main_candidate >= sub->nodes.size() || sub->main_vacancy >= sub->nodes.size()) {
      throw Error("GraphBatch: anchor outside subgraph");
    }
    b.main_candidate.push_back(off + sub->main_candidate);
    b.main_vacancy.push_back(off + sub->main_vacancy);
    const bool cand_is_stored = sub->direction == sampler::Direction::CandidateToVacancy;
    for (const auto& e : sub->edges) {
      if (e.src >= sub->nodes.size() || e.dst >= sub->nodes.size()) throw Error("GraphBatch: dangling edge");
      src.push_back(off + e.src);
      dst.push_back(off + e.dst);
      type.push_back(e.relation);
      forward_stored.push_back(cand_is_stored);
    }
    b.node_count += sub->nodes.size();
    b.node_offset.push_back(b.node_count);
    b.edge_offset.push_back(src.size());
    offsets.push_back(b.node_count);
  }
  b.graphs = ad::Segments(offsets.size() > 1 ? offsets : std::vector<std::size_t>{});

  std::vector<std::size_t> csrc, cdst, psrc, pdst;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (forward_stored[i]) {
      csrc.push_back(src[i]), cdst.push_back(dst[i]);
      psrc.push_back(dst[i]), pdst.push_back(src[i]);
    } else {
      csrc.push_back(dst[i]), cdst.push_back(src[i]);
      psrc.push_back(src[i]), pdst.push_back(dst[i]);
    }
  }
  b.candidate_view = EdgeView::build(b.node_count, std::move(csrc), std::move(cdst), type);
  b.company_view = EdgeView::build(b.node_count, std::move(psrc), std::move(pdst), type);
  b.stored = EdgeView::build(b.node_count, std::move(src), std::move(dst), std::move(type));
  return b;
}

GraphBatch GraphBatch::build(std::span<const sampler::PairSubGraph> subs) {
  std::vector<const sampler::PairSubGraph*> ptrs;
  ptrs.reserve(subs.size());
  for (const auto& s : subs) ptrs.push_back(&s);
  return build(std::span<const sampler::PairSubGraph* const>(ptrs));
}

// ---------------------------------------------------------------------------
// ParamSet

Tensor ParamSet::add(std::string name, ad::Shape shape, double stddev, std::uint64_t seed) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  std::mt19937_64 rng(derive_seed(seed, {name}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : t.data()) v = stddev * normal(rng);
  entries_.emplace_back(std::move(name), t);
  return t;
}

Tensor ParamSet::add_constant(std::string name, ad::Shape shape, double value) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  std::fill(t.data().begin(), t.data().end(), value);
  entries_.emplace_back(std::move(name), t);
  return t;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [name, t] : entries_) const_cast<Tensor&>(t).zero_grad();
}

std::vector<double> ParamSet::snapshot() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& [name, t] : entries_) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

void ParamSet::restore(std::span<const double> values) {
  if (values.size() != scalar_count()) {
    throw ShapeMismatch("restore: expected " + std::to_string(scalar_count()) + " values, got " +
                        std::to_string(values.size()));
  }
  std::size_t at = 0;
  for (auto& [name, t] : entries_) {
    auto dst = const_cast<Tensor&>(t).data();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
    at += dst.size();
  }
}

// ---------------------------------------------------------------------------
// helpers

namespace {

Tensor broadcast_rows(Tape& tape, const Tensor& row, std::size_t n) {
  return tape.matmul(Tensor::filled({n, 1}, 1.0), row);
}

/// Scatters per-segment rows back to per-node rows; nodes without a segment
/// get zeros.
Tensor scatter_segments(Tape& tape, const Tensor& per_segment, const EdgeView& view, std::size_t cols) {
  Tensor padded = tape.concat({per_segment, Tensor::zeros({1, cols})}, 0);
  return tape.gather_rows(padded, view.node_segment);
}

ad::Reduce reduce_mode(Pooling p) {
  switch (p) {
    case Pooling::Mean:
      return ad::Reduce::Mean;
    case Pooling::Max:
      return ad::Reduce::Max;
    case Pooling::Sum:
      return ad::Reduce::Sum;
  }
  return ad::Reduce::Mean;
}

}  // namespace

// ---------------------------------------------------------------------------
// NodeEncoder

struct NodeEncoder::OffsetCache {
  std::mutex mu;
  std::map<std::string, std::vector<double>, std::less<>> rows;
};

NodeEncoder::NodeEncoder(ParamSet& params, const ModelConfig& config)
    : config_(&config), offsets_(std::make_shared<OffsetCache>()) {
  const std::size_t t = config.text_dim, m = config.node_dim;
  text_proj_ = params.add("encoder.text_proj", {config.hash_buckets, t},
                          1.0 / std::sqrt(static_cast<double>(config.token_limit)), config.seed);
  text_bias_ = params.add_constant("encoder.text_bias", {1, t}, 0.0);
  text_out_ = params.add("encoder.text_out", {t, m}, 1.0 / std::sqrt(static_cast<double>(t)), config.seed);
  text_out_bias_ = params.add_constant("encoder.text_out_bias", {1, m}, 0.0);
  kind_embedding_ = params.add("encoder.kind_embedding", {kg::kEntityKindCount, m}, 1.0, config.seed);
  role_embedding_ = params.add("encoder.role_embedding", {3, m}, 1.0, config.seed);
}

std::vector<double> NodeEncoder::node_offset(std::string_view feature_ref) const {
  {
    std::lock_guard lock(offsets_->mu);
    auto it = offsets_->rows.find(feature_ref);
    if (it != offsets_->rows.end()) return it->second;
  }
  std::mt19937_64 rng(derive_seed(config_->seed, {"node-offset", feature_ref}));
  std::normal_distribution<double> normal(0.0, 0.05);
  std::vector<double> out(config_->node_dim);
  for (double& v : out) v = normal(rng);
  std::lock_guard lock(offsets_->mu);
  offsets_->rows.emplace(std::string(feature_ref), out);
  return out;
}

Tensor NodeEncoder::project_tokens(Tape& tape, const std::vector<std::vector<std::size_t>>& buckets) const {
  const std::size_t n = buckets.size(), t = config_->text_dim;
  std::vector<std::size_t> flat, offsets{0}, row_of;
  for (std::size_t i = 0; i < n; ++i) {
    if (buckets[i].empty()) continue;
    flat.insert(flat.end(), buckets[i].begin(), buckets[i].end());
    offsets.push_back(flat.size());
  }
  // Nodes with no tokens map to the zero row appended after the per-node sums.
  const std::size_t non_empty = offsets.size() - 1;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) row_of.push_back(buckets[i].empty() ? non_empty : next++);
  Tensor summed;
  if (non_empty > 0) {
    Tensor rows = tape.gather_rows(text_proj_, flat);
    summed = tape.concat(
        {tape.segment_reduce(rows, ad::Segments(offsets), ad::Reduce::Sum, false), Tensor::zeros({1, t})}, 0);
  } else {
    summed = Tensor::zeros({1, t});
  }
  Tensor counts_times_proj = tape.gather_rows(summed, row_of);
  return tape.add(counts_times_proj, broadcast_rows(tape, text_bias_, n));
}

Tensor NodeEncoder::text_projection(Tape& tape, std::span<const std::string> payloads) const {
  std::vector<std::vector<std::size_t>> buckets;
  for (const auto& p : payloads) {
    std::vector<std::size_t> b;
    for (const auto& tok : tokenize_whitespace(p, config_->token_limit))
      b.push_back(fnv1a(tok) % config_->hash_buckets);
    buckets.push_back(std::move(b));
  }
  return project_tokens(tape, buckets);
}

Tensor NodeEncoder::forward(Tape& tape, const GraphBatch& batch, const FeatureStore& features) const {
  const std::size_t m = config_->node_dim;
  std::vector<std::size_t> text_nodes, other_nodes, other_kinds;
  std::vector<std::vector<std::size_t>> buckets;
  std::vector<double> offsets;
  for (std::size_t i = 0; i < batch.node_count; ++i) {
    const auto& f = features.at(batch.feature_refs[i]);
    if (batch.kinds[i] == kg::EntityKind::TextDoc) {
      text_nodes.push_back(i);
      std::vector<std::size_t> b;
      const std::size_t n_tok = std::min(config_->token_limit, f.token_hashes.size());
      for (std::size_t k = 0; k < n_tok; ++k) b.push_back(f.token_hashes[k] % config_->hash_buckets);
      buckets.push_back(std::move(b));
    } else {
      other_nodes.push_back(i);
      other_kinds.push_back(static_cast<std::size_t>(batch.kinds[i]));
      auto off = node_offset(batch.feature_refs[i]);
      offsets.insert(offsets.end(), off.begin(), off.end());
    }
  }
  std::vector<Tensor> parts;
  if (!text_nodes.empty()) {
    Tensor proj = project_tokens(tape, buckets);
    Tensor mapped = tape.matmul(proj, text_out_);
    parts.push_back(tape.add(mapped, broadcast_rows(tape, text_out_bias_, text_nodes.size())));
  }
  if (!other_nodes.empty()) {
    Tensor kinds = tape.gather_rows(kind_embedding_, other_kinds);
    parts.push_back(tape.add(kinds, Tensor::from({other_nodes.size(), m}, std::move(offsets))));
  }
  if (parts.empty()) return Tensor::zeros({0, m});
  // Rows are [text..., other...]; permute back to batch order.
  std::vector<std::size_t> position(batch.node_count);
  for (std::size_t i = 0; i < text_nodes.size(); ++i) position[text_nodes[i]] = i;
  for (std::size_t i = 0; i < other_nodes.size(); ++i) position[other_nodes[i]] = text_nodes.size() + i;
  Tensor stacked = parts.size() == 1 ? parts.front() : tape.concat(parts, 0);
  std::vector<std::size_t> role(batch.node_count, 0);
  for (std::size_t i : batch.main_candidate) role[i] = 1;
  for (std::size_t i : batch.main_vacancy) role[i] = 2;
  return tape.add(tape.gather_rows(stacked, position), tape.gather_rows(role_embedding_, role));
}

// ---------------------------------------------------------------------------
// GraphTransformerLayer

GraphTransformerLayer::GraphTransformerLayer(ParamSet& params, const std::string& prefix, std::size_t dim,
                                             std::size_t relations, double slope, std::uint64_t seed)
    : dim_(dim), slope_(slope) {
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  query = params.add(prefix + ".query", {dim, dim}, s, seed);
  key = params.add(prefix + ".key", {dim, dim}, s, seed);
  value = params.add(prefix + ".value", {dim, dim}, s, seed);
  skip = params.add(prefix + ".skip", {dim, dim}, s, seed);
  skip_bias = params.add_constant(prefix + ".skip_bias", {1, dim}, 0.0);
  edge_type = params.add(prefix + ".edge_type", {relations, dim}, s, seed);
}

Tensor GraphTransformerLayer::forward(Tape& tape, const Tensor& h, const EdgeView& edges) const {
  const std::size_t n = h.rows();
  Tensor root = tape.add(tape.matmul(h, skip), broadcast_rows(tape, skip_bias, n));
  if (edges.size() == 0) return tape.leaky_relu(root, slope_);

  Tensor q = tape.matmul(h, query);
  Tensor k = tape.matmul(h, key);
  Tensor v = tape.matmul(h, value);
  Tensor et = tape.gather_rows(edge_type, edges.type);
  Tensor k_j = tape.add(tape.gather_rows(k, edges.src), et);
  Tensor v_j = tape.add(tape.gather_rows(v, edges.src), et);
  Tensor q_i = tape.gather_rows(q, edges.dst);
  Tensor logits = tape.matmul(tape.mul(q_i, k_j), Tensor::filled({dim_, 1}, 1.0));
  logits = tape.affine(logits, 1.0 / std::sqrt(static_cast<double>(dim_)), 0.0);
  Tensor alpha = tape.segment_softmax(logits, edges.by_dst);
  Tensor messages = tape.mul(v_j, tape.matmul(alpha, Tensor::filled({1, dim_}, 1.0)));
  Tensor aggregated = tape.segment_reduce(messages, edges.by_dst, ad::Reduce::Sum);
  return tape.leaky_relu(tape.add(root, scatter_segments(tape, aggregated, edges, dim_)), slope_);
}

// ---------------------------------------------------------------------------
// StakeholderChannels

StakeholderChannels::StakeholderChannels(ParamSet& params, const std::string& prefix, const ModelConfig& config)
    : config_(&config) {
  const std::size_t m = config.node_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t c = 0; c < config.channels; ++c) {
    const std::string p = prefix + ".channel" + std::to_string(c);
    channels.push_back({params.add(p + ".left", {m, m}, s, config.seed),
                        params.add(p + ".right", {m, m}, s, config.seed),
                        params.add(p + ".attn", {m, 1}, s, config.seed)});
  }
}

SideOutput StakeholderChannels::forward(Tape& tape, const Tensor& h, const EdgeView& edges,
                                        const GraphBatch& batch) const {
  const std::size_t n = h.rows(), m = config_->node_dim;
  SideOutput out;
  std::vector<Tensor> parts;
  for (const auto& ch : channels) {
    Tensor node_logit;
    if (edges.size() > 0) {
      Tensor left = tape.matmul(h, ch.left);
      Tensor right = tape.matmul(h, ch.right);
      Tensor z = tape.leaky_relu(tape.add(tape.gather_rows(left, edges.dst), tape.gather_rows(right, edges.src)),
                                 config_->leaky_slope);
      Tensor e = tape.matmul(z, ch.attn);
      Tensor alpha = tape.segment_softmax(e, edges.by_dst);
      Tensor received = tape.segment_reduce(tape.mul(alpha, e), edges.by_dst, ad::Reduce::Sum);
      node_logit = scatter_segments(tape, received, edges, 1);
      out.edge_importance.push_back(alpha);
    } else {
      node_logit = Tensor::zeros({n, 1});
      out.edge_importance.push_back(Tensor::zeros({0, 1}));
    }
    Tensor rho = tape.segment_softmax(node_logit, batch.graphs);
    out.node_importance.push_back(rho);
    parts.push_back(tape.mul(h, tape.matmul(rho, Tensor::filled({1, m}, 1.0))));
  }
  out.embedding = tape.concat(parts, 1);
  return out;
}

// ---------------------------------------------------------------------------
// ScoreHead, pooling, fusion

ScoreHead::ScoreHead(ParamSet& params, const std::string& prefix, std::size_t in_dim, double bound, std::uint64_t seed)
    : bound_(bound) {
  weight = params.add(prefix + ".weight", {in_dim, 1}, 0.1 / std::sqrt(static_cast<double>(in_dim)), seed);
  bias = params.add_constant(prefix + ".bias", {1, 1}, 0.0);
}

Tensor ScoreHead::forward(Tape& tape, const Tensor& x) const {
  Tensor pre = tape.add(tape.matmul(x, weight), broadcast_rows(tape, bias, x.rows()));
  return tape.affine(tape.tanh(pre), bound_, 0.0);
}

Tensor pool_subgraph(Tape& tape, const Tensor& h, const GraphBatch& batch, Pooling pooling) {
  Tensor pooled = tape.segment_reduce(h, batch.graphs, reduce_mode(pooling));
  return tape.concat({pooled, tape.gather_rows(h, batch.main_candidate), tape.gather_rows(h, batch.main_vacancy)}, 1);
}

double fuse_harmonic(double s_cand, double s_comp, double bound, double shift) {
  const double a = s_cand + bound + shift;
  const double b = s_comp + bound + shift;
  return 2.0 * a * b / (a + b) - (bound + shift);
}

Tensor fuse_harmonic(Tape& tape, const Tensor& s_cand, const Tensor& s_comp, double bound, double shift) {
  Tensor a = tape.affine(s_cand, 1.0, bound + shift);
  Tensor b = tape.affine(s_comp, 1.0, bound + shift);
  // ab / (a + b) through exp/log keeps the op set closed; a, b > 0.
  Tensor log_ratio = tape.add(tape.add(tape.log(a), tape.log(b)), tape.affine(tape.log(tape.add(a, b)), -1.0, 0.0));
  return tape.affine(tape.exp(log_ratio), 2.0, -(bound + shift));
}

// ---------------------------------------------------------------------------
// OkraModel

namespace {
ModelConfig validated(ModelConfig c) {
  c.validate();
  return c;
}
}  // namespace

OkraModel::OkraModel(ModelConfig config)
    : config_(validated(config)),
      encoder_(params_, config_),
      layers_{GraphTransformerLayer(params_, "layer0", config_.node_dim, config_.relation_count, config_.leaky_slope,
                                    config_.seed),
              GraphTransformerLayer(params_, "layer1", config_.node_dim, config_.relation_count, config_.leaky_slope,
                                    config_.seed)},
      candidate_channels_(params_, "candidate", config_),
      company_channels_(params_, "company", config_),
      candidate_head_(params_, "candidate_head", 3 * config_.node_dim * config_.channels, config_.score_bound,
                      config_.seed),
      company_head_(params_, "company_head", 3 * config_.node_dim * config_.channels, config_.score_bound,
                    config_.seed) {}

ForwardOutput OkraModel::forward(Tape& tape, const GraphBatch& batch, const FeatureStore& features) const {
  if (batch.graph_count() == 0) throw Error("forward: empty batch");
  Tensor h = encoder_.forward(tape, batch, features);
  for (const auto& layer : layers_) h = layer.forward(tape, h, batch.stored);
  ForwardOutput out;
  out.candidate_side = candidate_channels_.forward(tape, h, batch.candidate_view, batch);
  out.company_side = company_channels_.forward(tape, h, batch.company_view, batch);
  out.candidate =
      candidate_head_.forward(tape, pool_subgraph(tape, out.candidate_side.embedding, batch, config_.pooling));
  out.company = company_head_.forward(tape, pool_subgraph(tape, out.company_side.embedding, batch, config_.pooling));
  out.fused = fuse_harmonic(tape, out.candidate, out.company, config_.score_bound, config_.fusion_shift);
  return out;
}

Tensor OkraModel::score(Tape& tape, const GraphBatch& batch, const FeatureStore& features) const {
  return forward(tape, batch, features).fused;
}

std::vector<ExplanationReport> OkraModel::explain(std::span<const sampler::PairSubGraph> subs,
                                                  const FeatureStore& features) const {
  std::vector<ExplanationReport> reports;
  for (const auto& sub : subs) {
    Tape tape;
    GraphBatch batch = GraphBatch::build(std::span<const sampler::PairSubGraph>(&sub, 1));
    ForwardOutput fw = forward(tape, batch, features);
    ExplanationReport r;
    r.candidate_key = sub.candidate_key;
    r.vacancy_key = sub.vacancy_key;
    r.candidate_score = fw.candidate.item();
    r.company_score = fw.company.item();
    r.fused_score = fw.fused.item();
    const std::array<std::pair<const SideOutput*, const EdgeView*>, 2> sides = {
        std::pair{&fw.candidate_side, &batch.candidate_view}, std::pair{&fw.company_side, &batch.company_view}};
    for (std::size_t s = 0; s < 2; ++s) {
      for (std::size_t polarity = 0; polarity < 2; ++polarity) {
        ChannelReport& ch = r.channels[2 * s + polarity];
        ch.side = s == 0 ? "candidate" : "company";
        ch.polarity = polarity == 0 ? "positive" : "negative";
        auto rho = sides[s].first->node_importance[polarity].data();
        ch.node_importances.assign(rho.begin(), rho.end());
        auto alpha = sides[s].first->edge_importance[polarity].data();
        ch.edge_importances.assign(sub.edges.size(), 0.0);
        for (std::size_t e = 0; e < alpha.size(); ++e) ch.edge_importances[sides[s].second->stored_index[e]] = alpha[e];
      }
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<std::size_t> ExplanationReport::top_nodes(std::size_t channel, std::size_t k) const {
  const auto& imp = channels.at(channel).node_importances;
  std::vector<std::size_t> idx(imp.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::vector<double> score_subgraphs(const GraphRanker& ranker, std::span<const sampler::PairSubGraph* const> subs,
                                    const FeatureStore& features) {
  constexpr std::size_t kChunk = 16;
  std::vector<double> scores(subs.size());
  const std::size_t chunks = (subs.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(subs.size(), lo + kChunk);
    Tape tape;
    GraphBatch batch = GraphBatch::build(subs.subspan(lo, hi - lo));
    Tensor s = ranker.score(tape, batch, features);
    for (std::size_t i = lo; i < hi; ++i) scores[i] = s.data()[i - lo];
  });
  return scores;
}

void write_explanation_json(const ExplanationReport& report, std::ostream& out) {
  nlohmann::json j;
  j["candidate"] = report.candidate_key;
  j["vacancy"] = report.vacancy_key;
  j["scores"] = {
      {"candidate", report.candidate_score}, {"company", report.company_score}, {"fused", report.fused_score}};
  j["channels"] = nlohmann::json::array();
  for (const auto& ch : report.channels) {
    j["channels"].push_back({{"side", ch.side},
                             {"polarity", ch.polarity},
                             {"node_importances", ch.node_importances},
                             {"edge_importances", ch.edge_importances}});
  }
  out << j.dump() << "\n";
}

}  // namespace okra::model
