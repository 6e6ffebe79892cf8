#include "okra/train.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "okra/metrics.hpp"

namespace okra::train {

using model::GraphBatch;
using model::ParamSet;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train: betas must be in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
  if (!(sigma > 0.0)) throw ConfigError("train: sigma must be > 0");
  if (ndcg_cutoff < 1) throw ConfigError("train: ndcg_cutoff must be >= 1");
}

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "learning_rate=" << learning_rate << "\nepochs=" << epochs << "\nbeta1=" << beta1 << "\nbeta2=" << beta2
     << "\nepsilon=" << epsilon << "\nsigma=" << sigma << "\nndcg_cutoff=" << ndcg_cutoff
     << "\ncompany_groups=" << (company_groups ? 1 : 0) << "\nseed=" << seed << "\n";
  return os.str();
}

std::vector<int> Group::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto* s : items) out.push_back(s->label);
  return out;
}

std::vector<Group> make_groups(std::span<const sampler::PairSubGraph> corpus, bool by_vacancy) {
  std::map<std::string, Group> groups;
  for (const auto& sub : corpus) {
    const std::string& key = by_vacancy ? sub.vacancy_key : sub.candidate_key;
    auto& g = groups[key];
    g.key = key;
    g.items.push_back(&sub);
  }
  std::vector<Group> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

namespace {

struct PairTerm {
  std::size_t hi, lo;
  double delta;
};

/// Pairs (better, worse) with their |dNDCG@cutoff| under the current ranking.
std::vector<PairTerm> swap_deltas(std::span<const double> scores, std::span<const int> labels, std::size_t cutoff) {
  if (scores.size() != labels.size()) throw ShapeMismatch("lambdarank: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<int> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = metrics::dcg_at_k(ideal, cutoff);
  std::vector<PairTerm> out;
  if (idcg <= 0.0) return out;
  auto order = metrics::rank_order(scores);
  std::vector<double> inv_disc(n);
  for (std::size_t p = 0; p < n; ++p) inv_disc[order[p]] = p < cutoff ? 1.0 / metrics::discount(p + 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[i] <= labels[j]) continue;
      const double d =
          std::abs((metrics::gain(labels[i]) - metrics::gain(labels[j])) * (inv_disc[i] - inv_disc[j])) / idcg;
      out.push_back({i, j, d});
    }
  }
  return out;
}

}  // namespace

std::vector<double> lambdarank_grads(std::span<const double> scores, std::span<const int> labels, double sigma,
                                     std::size_t cutoff) {
  std::vector<double> grads(scores.size(), 0.0);
  for (const auto& t : swap_deltas(scores, labels, cutoff)) {
    const double lambda = -sigma * t.delta / (1.0 + std::exp(sigma * (scores[t.hi] - scores[t.lo])));
    grads[t.hi] += lambda;
    grads[t.lo] -= lambda;
  }
  return grads;
}

double lambdarank_loss(std::span<const double> scores, std::span<const int> labels, double sigma, std::size_t cutoff) {
  double loss = 0.0;
  for (const auto& t : swap_deltas(scores, labels, cutoff)) {
    const double z = -sigma * (scores[t.hi] - scores[t.lo]);
    // log(1 + e^z) without overflow
    loss += t.delta * (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
  }
  return loss;
}

void adam_step(ParamSet& params, AdamState& state, const TrainConfig& config) {
  auto entries = params.entries();
  for (const auto& [name, t] : entries) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NonFiniteGradient("non-finite gradient in parameter '" + name + "'");
    }
  }
  if (state.m.size() != entries.size()) {
    state.m.assign(entries.size(), {});
    state.v.assign(entries.size(), {});
    for (std::size_t p = 0; p < entries.size(); ++p) {
      state.m[p].assign(entries[p].second.size(), 0.0);
      state.v[p].assign(entries[p].second.size(), 0.0);
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < entries.size(); ++p) {
    ad::Tensor t = entries[p].second;
    auto g = t.grad();
    auto w = t.data();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      w[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
    }
  }
}

namespace {

bool comparable(const Group& g) {
  if (g.items.size() < 2) return false;
  for (const auto* s : g.items) {
    if (s->label != g.items.front()->label) return true;
  }
  return false;
}

double group_ndcg(std::span<const double> scores, const std::vector<int>& labels, std::size_t k) {
  std::vector<int> ordered;
  for (std::size_t i : metrics::rank_order(scores)) ordered.push_back(labels[i]);
  return metrics::ndcg_at_k(ordered, labels, k);
}

}  // namespace

double mean_ndcg(const model::GraphRanker& ranker, std::span<const Group> groups, const model::FeatureStore& features,
                 std::size_t k) {
  if (groups.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : groups) {
    auto scores = model::score_subgraphs(ranker, g.items, features);
    total += group_ndcg(scores, g.labels(), k);
  }
  return total / static_cast<double>(groups.size());
}

TrainResult train(model::GraphRanker& ranker, const model::FeatureStore& features,
                  std::span<const sampler::PairSubGraph> train_set,
                  std::span<const sampler::PairSubGraph> validation_set, const TrainConfig& config) {
  config.validate();
  std::vector<Group> train_groups;
  for (auto& g : make_groups(train_set, config.company_groups)) {
    if (comparable(g)) train_groups.push_back(std::move(g));
  }
  if (train_groups.empty()) throw EmptyCorpus("train: no group with two distinct labels");
  const auto validation_groups = make_groups(validation_set, config.company_groups);
  const bool has_validation = !validation_groups.empty();

  using Clock = std::chrono::steady_clock;
  TrainResult result;
  ParamSet& params = ranker.params();
  auto t0 = Clock::now();
  auto seconds_since = [](Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); };

  const double train0 = mean_ndcg(ranker, train_groups, features);
  double select = train0;
  if (has_validation) {
    select = mean_ndcg(ranker, validation_groups, features);
    result.history.push_back({0, "train", train0, 0.0, seconds_since(t0)});
    result.history.push_back({0, "validation", select, 0.0, seconds_since(t0)});
  } else {
    result.history.push_back({0, "train", train0, 0.0, seconds_since(t0)});
  }
  result.best_validation = select;
  std::vector<double> best = params.snapshot();

  AdamState adam;
  std::vector<std::size_t> order(train_groups.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto te = Clock::now();
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(config.seed, {"epoch", std::to_string(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0, running_ndcg = 0.0;
    for (std::size_t gi : order) {
      const Group& g = train_groups[gi];
      const auto labels = g.labels();
      ad::Tape tape;
      GraphBatch batch = GraphBatch::build(std::span<const sampler::PairSubGraph* const>(g.items));
      ad::Tensor s = ranker.score(tape, batch, features);
      const auto scores = std::vector<double>(s.data().begin(), s.data().end());
      loss += lambdarank_loss(scores, labels, config.sigma, config.ndcg_cutoff);
      running_ndcg += group_ndcg(scores, labels, 10);
      auto lambdas = lambdarank_grads(scores, labels, config.sigma, config.ndcg_cutoff);
      params.zero_grad();
      ad::Tensor surrogate = tape.sum(tape.mul(s, ad::Tensor::from({lambdas.size(), 1}, lambdas)));
      tape.backward(surrogate);
      adam_step(params, adam, config);
    }
    params.zero_grad();
    const double n = static_cast<double>(train_groups.size());
    result.history.push_back({epoch, "train", running_ndcg / n, loss / n, seconds_since(te)});
    if (has_validation) {
      select = mean_ndcg(ranker, validation_groups, features);
      result.history.push_back({epoch, "validation", select, 0.0, seconds_since(te)});
    } else {
      select = running_ndcg / n;
    }
    if (select > result.best_validation) {
      result.best_validation = select;
      result.best_epoch = epoch;
      best = params.snapshot();
    }
  }
  params.restore(best);
  return result;
}

void write_history_csv(std::span<const HistoryEntry> history, std::ostream& out) {
  out << "epoch,split,ndcg10,loss,seconds\n";
  out.precision(17);
  for (const auto& h : history) {
    out << h.epoch << "," << h.split << "," << h.ndcg10 << "," << h.loss << "," << h.seconds << "\n";
  }
}

namespace {

constexpr char kMagic[8] = {'O', 'K', 'R', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(const ParamSet& params, const std::string& digest, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, kVersion);
  put_u64(out, digest.size());
  out.write(digest.data(), static_cast<std::streamsize>(digest.size()));
  const auto values = params.snapshot();
  put_u64(out, values.size());
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::string read_checkpoint(ParamSet& params, std::istream& in, const std::optional<std::string>& expected_digest) {
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) throw FormatError("checkpoint: bad magic");
  if (get_u64(in) != kVersion) throw FormatError("checkpoint: unsupported version");
  const std::uint64_t dlen = get_u64(in);
  if (dlen > 4096) throw FormatError("checkpoint: bad digest length");
  std::string digest(dlen, '\0');
  if (!in.read(digest.data(), static_cast<std::streamsize>(dlen))) throw FormatError("checkpoint: truncated");
  if (expected_digest && *expected_digest != digest) {
    throw DigestMismatch("checkpoint digest " + digest + " does not match config digest " + *expected_digest);
  }
  const std::uint64_t count = get_u64(in);
  if (count != params.scalar_count()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " values, model expects " +
                      std::to_string(params.scalar_count()));
  }
  std::vector<double> values(count);
  for (auto& v : values) v = std::bit_cast<double>(get_u64(in));
  params.restore(values);
  return digest;
}

SearchResult random_search(const model::ModelConfig& base_model, const TrainConfig& base_train, std::size_t trials,
                           std::uint64_t seed, const SearchObjective& objective) {
  if (trials < 1) throw ConfigError("random_search: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1), three(0, 2);
  std::uniform_real_distribution<double> log_lr(std::log(1e-5), std::log(1e-3));
  const model::Pooling poolings[] = {model::Pooling::Mean, model::Pooling::Max, model::Pooling::Sum};
  SearchResult result;
  for (std::size_t t = 0; t < trials; ++t) {
    SearchTrial trial{base_model, base_train, 0.0};
    trial.model.text_dim = coin(rng) ? 128 : 64;
    trial.model.node_dim = coin(rng) ? 32 : 16;
    trial.model.pooling = poolings[three(rng)];
    trial.train.learning_rate = std::exp(log_lr(rng));
    trial.validation_ndcg = objective(trial.model, trial.train);
    result.trials.push_back(trial);
    if (trial.validation_ndcg > result.trials[result.best].validation_ndcg) result.best = t;
  }
  return result;
}

}  // namespace okra::train
