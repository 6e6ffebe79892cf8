#include "okra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "okra/common.hpp"

namespace okra::metrics {

double gain(int label) { return std::exp2(static_cast<double>(std::max(label, 0))) - 1.0; }

double discount(std::size_t position) { return std::log2(static_cast<double>(position) + 1.0); }

double dcg_at_k(std::span<const int> labels_in_order, std::size_t k) {
  double dcg = 0.0;
  const std::size_t n = std::min(k, labels_in_order.size());
  for (std::size_t p = 0; p < n; ++p) dcg += gain(labels_in_order[p]) / discount(p + 1);
  return dcg;
}

double ndcg_at_k(std::span<const int> labels_in_order, std::span<const int> all_labels, std::size_t k) {
  if (k == 0) throw Error("ndcg_at_k: k must be >= 1");
  std::vector<int> ideal(all_labels.begin(), all_labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_at_k(ideal, k);
  if (idcg <= 0.0) return 0.0;
  return dcg_at_k(labels_in_order, k) / idcg;
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

RankedList RankedList::build(std::string candidate, std::string group, std::vector<std::string> vacancies,
                             std::vector<double> scores, std::vector<int> labels) {
  if (vacancies.size() != scores.size() || scores.size() != labels.size()) {
    throw ShapeMismatch("RankedList: vacancies, scores and labels differ in length");
  }
  RankedList out;
  out.candidate = std::move(candidate);
  out.group = std::move(group);
  for (std::size_t i : rank_order(scores)) {
    out.vacancies.push_back(vacancies[i]);
    out.scores.push_back(scores[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

namespace {
double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}
}  // namespace

double performance_disparity(std::span<const double> protected_scores, std::span<const double> unprotected_scores) {
  if (protected_scores.empty()) throw MissingGroup("performance disparity: protected group is empty");
  if (unprotected_scores.empty()) throw MissingGroup("performance disparity: unprotected group is empty");
  return mean(protected_scores) - mean(unprotected_scores);
}

double Visibility::recommended_fraction() const {
  return recommended == 0 ? 0.0 : static_cast<double>(recommended_protected) / static_cast<double>(recommended);
}

double Visibility::catalog_fraction() const {
  return catalog == 0 ? 0.0 : static_cast<double>(catalog_protected) / static_cast<double>(catalog);
}

Visibility disparate_visibility(std::span<const RankedList> lists, const std::map<std::string, std::string>& catalog,
                                const std::string& protected_value, std::size_t top) {
  Visibility v;
  v.catalog = catalog.size();
  for (const auto& [key, value] : catalog) v.catalog_protected += value == protected_value ? 1 : 0;
  for (const auto& list : lists) {
    const std::size_t n = std::min(top, list.vacancies.size());
    for (std::size_t i = 0; i < n; ++i) {
      auto it = catalog.find(list.vacancies[i]);
      if (it == catalog.end()) throw UnknownVacancy("vacancy '" + list.vacancies[i] + "' is not in the catalog");
      ++v.recommended;
      v.recommended_protected += it->second == protected_value ? 1 : 0;
    }
  }
  return v;
}

EvalReport evaluate(std::string model, std::span<const RankedList> lists,
                    const std::map<std::string, std::string>& catalog, const EvalOptions& options) {
  if (lists.empty()) throw EmptyTestSet("evaluate: no ranked lists");
  EvalReport r;
  r.model = std::move(model);
  r.ks = options.ks;
  r.protected_value = options.protected_value;
  r.unprotected_value = options.unprotected_value;

  std::map<std::string, std::map<std::size_t, std::vector<double>>> by_group;
  std::map<std::size_t, std::vector<double>> all;
  for (const auto& list : lists) {
    for (std::size_t k : options.ks) {
      const double v = list.ndcg(k);
      all[k].push_back(v);
      by_group[list.group][k].push_back(v);
    }
    r.candidate_groups.emplace_back(list.candidate, list.group);
    r.candidate_ndcg10.push_back(list.ndcg(10));
  }
  for (std::size_t k : options.ks) r.overall["ndcg@" + std::to_string(k)] = mean(all[k]);
  for (const auto& [group, per_k] : by_group) {
    for (const auto& [k, values] : per_k) r.per_group[group]["ndcg@" + std::to_string(k)] = mean(values);
    r.counts[group] = per_k.begin()->second.size();
  }

  std::vector<double> prot, unprot;
  for (std::size_t i = 0; i < r.candidate_groups.size(); ++i) {
    if (r.candidate_groups[i].second == options.protected_value) prot.push_back(r.candidate_ndcg10[i]);
    if (r.candidate_groups[i].second == options.unprotected_value) unprot.push_back(r.candidate_ndcg10[i]);
  }
  r.delta_p =
      (prot.empty() || unprot.empty()) ? std::numeric_limits<double>::quiet_NaN() : performance_disparity(prot, unprot);
  r.visibility = disparate_visibility(lists, catalog, options.protected_value, options.visibility_top);
  r.delta_v = r.visibility.delta();
  return r;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["config_digest"] = config_digest;
  j["ks"] = ks;
  j["overall"] = overall;
  j["per_group"] = per_group;
  j["counts"] = counts;
  j["protected"] = protected_value;
  j["unprotected"] = unprotected_value;
  if (std::isnan(delta_p)) {
    j["delta_p"] = nullptr;
  } else {
    j["delta_p"] = delta_p;
  }
  j["delta_v"] = delta_v;
  j["visibility"] = {{"recommended", visibility.recommended},
                     {"recommended_protected", visibility.recommended_protected},
                     {"catalog", visibility.catalog},
                     {"catalog_protected", visibility.catalog_protected},
                     {"catalog_fraction", visibility.catalog_fraction()}};
  auto& cands = j["candidates"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < candidate_groups.size(); ++i) {
    cands.push_back({{"candidate", candidate_groups[i].first},
                     {"group", candidate_groups[i].second},
                     {"ndcg@10", candidate_ndcg10[i]}});
  }
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.ks = j.at("ks").get<std::vector<std::size_t>>();
    r.overall = j.at("overall").get<std::map<std::string, double>>();
    r.per_group = j.at("per_group").get<std::map<std::string, std::map<std::string, double>>>();
    r.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
    r.protected_value = j.at("protected").get<std::string>();
    r.unprotected_value = j.at("unprotected").get<std::string>();
    r.delta_p = j.at("delta_p").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("delta_p").get<double>();
    r.delta_v = j.at("delta_v").get<double>();
    const auto& v = j.at("visibility");
    r.visibility.recommended = v.at("recommended").get<std::size_t>();
    r.visibility.recommended_protected = v.at("recommended_protected").get<std::size_t>();
    r.visibility.catalog = v.at("catalog").get<std::size_t>();
    r.visibility.catalog_protected = v.at("catalog_protected").get<std::size_t>();
    for (const auto& c : j.at("candidates")) {
      r.candidate_groups.emplace_back(c.at("candidate").get<std::string>(), c.at("group").get<std::string>());
      r.candidate_ndcg10.push_back(c.at("ndcg@10").get<double>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

void write_plotdata(std::span<const EvalReport> reports, std::ostream& out, bool header) {
  if (header) out << "model,metric,value\n";
  out.precision(17);
  for (const auto& r : reports) {
    for (const auto& [metric, value] : r.overall) out << r.model << "," << metric << "," << value << "\n";
    for (const auto& [group, metrics] : r.per_group) {
      for (const auto& [metric, value] : metrics)
        out << r.model << "," << metric << "[" << group << "]," << value << "\n";
    }
    if (!std::isnan(r.delta_p)) out << r.model << ",delta_p," << r.delta_p << "\n";
    out << r.model << ",delta_v," << r.delta_v << "\n";
  }
}

}  // namespace okra::metrics
