#pragma once

#include <cstddef>
#include <iosfwd>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace okra::metrics {

/// 2^max(label,0) - 1: both rejection labels carry zero gain.
double gain(int label);
/// log2(position + 1) for 1-based positions.
double discount(std::size_t position);

double dcg_at_k(std::span<const int> labels_in_order, std::size_t k);
/// nDCG of a predicted ordering against the ideal ordering of all_labels;
/// 0 when the ideal DCG is 0.
double ndcg_at_k(std::span<const int> labels_in_order, std::span<const int> all_labels, std::size_t k);

/// Indices sorted by descending score; equal scores keep input order.
std::vector<std::size_t> rank_order(std::span<const double> scores);

/// One candidate's ranking, best first.
struct RankedList {
  std::string candidate;
  std::string group;  // candidate's value of the protected attribute
  std::vector<std::string> vacancies;
  std::vector<double> scores;
  std::vector<int> labels;

  /// Sorts the given items by score (stable).
  static RankedList build(std::string candidate, std::string group, std::vector<std::string> vacancies,
                          std::vector<double> scores, std::vector<int> labels);
  double ndcg(std::size_t k) const { return ndcg_at_k(labels, labels, k); }
};

/// Mean over protected lists minus mean over unprotected; throws MissingGroup
/// when either side is empty.
double performance_disparity(std::span<const double> protected_scores, std::span<const double> unprotected_scores);

struct Visibility {
  std::size_t recommended = 0;
  std::size_t recommended_protected = 0;
  std::size_t catalog = 0;
  std::size_t catalog_protected = 0;
  double recommended_fraction() const;
  double catalog_fraction() const;
  double delta() const { return recommended_fraction() - catalog_fraction(); }
};

/// Protected share of all top-`top` recommendations minus its share of the
/// catalog (vacancy key -> attribute value). Throws UnknownVacancy.
Visibility disparate_visibility(std::span<const RankedList> lists, const std::map<std::string, std::string>& catalog,
                                const std::string& protected_value = "rural", std::size_t top = 10);

struct EvalOptions {
  std::vector<std::size_t> ks{10, 5, 3};
  std::string protected_value = "rural";
  std::string unprotected_value = "urban";
  std::size_t visibility_top = 10;
};

struct EvalReport {
  std::string model;
  std::string config_digest;
  std::vector<std::size_t> ks;
  std::map<std::string, double> overall;                           // "ndcg@10" -> value
  std::map<std::string, std::map<std::string, double>> per_group;  // group -> metric -> value
  std::map<std::string, std::size_t> counts;                       // group -> candidates
  double delta_p = 0.0;
  Visibility visibility;
  double delta_v = 0.0;
  std::string protected_value;
  std::string unprotected_value;
  /// Raw per-candidate nDCG@10 and group, in candidate order.
  std::vector<std::pair<std::string, std::string>> candidate_groups;
  std::vector<double> candidate_ndcg10;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Throws EmptyTestSet when `lists` is empty; MissingGroup when a fairness
/// group has no candidates.
EvalReport evaluate(std::string model, std::span<const RankedList> lists,
                    const std::map<std::string, std::string>& catalog, const EvalOptions& options = {});

/// Rows (model, metric, value) for external charting.
void write_plotdata(std::span<const EvalReport> reports, std::ostream& out, bool header = true);

}  // namespace okra::metrics
