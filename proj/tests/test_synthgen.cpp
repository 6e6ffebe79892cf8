#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "okra/metrics.hpp"
#include "okra/synthgen.hpp"

using namespace okra;
using namespace okra::synth;

namespace {

SynthConfig small() {
  SynthConfig c;
  c.n_candidates = 30;
  c.n_vacancies = 50;
  c.seed = 3;
  return c;
}

std::string dump(const SynthWorld& w) {
  std::ostringstream out;
  for (const auto& t : world_to_tables(w)) write_table_tsv(t, out);
  write_labels_tsv(w.labels, out);
  return out.str();
}

}  // namespace

TEST(Synth, RuralVacancyCount) {
  SynthConfig c;
  c.n_candidates = 100;
  c.n_vacancies = 200;
  c.labeled_per_candidate = 4;
  const auto w = generate(c);
  const auto rural = std::count_if(w.vacancies.begin(), w.vacancies.end(), [](auto& v) { return v.region == "rural"; });
  EXPECT_TRUE(rural == 131 || rural == 132) << rural;
}

TEST(Synth, ConfigValidation) {
  auto c = small();
  c.rural_vacancy_fraction = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small();
  c.latent_dim = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small();
  c.stakeholder_divergence = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small();
  c.n_candidates = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Synth, SkillsCorrelateWithAffinity) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto c = small();
    c.seed = seed;
    EXPECT_GE(generate(c).skill_affinity_correlation, 0.5);
  }
}

TEST(Synth, SameSeedSameBytes) {
  EXPECT_EQ(dump(generate(small())), dump(generate(small())));
  auto c = small();
  c.seed = 4;
  EXPECT_NE(dump(generate(small())), dump(generate(c)));
}

TEST(Synth, NoDivergenceMeansSidesAgree) {
  auto c = small();
  c.stakeholder_divergence = 0.0;
  const auto w = generate(c);
  for (std::size_t ci = 0; ci < w.candidates.size(); ++ci) {
    std::vector<std::size_t> a(w.vacancies.size()), b;
    for (std::size_t v = 0; v < a.size(); ++v) a[v] = v;
    b = a;
    std::stable_sort(a.begin(), a.end(),
                     [&](auto x, auto y) { return w.candidate_affinity(ci, x) > w.candidate_affinity(ci, y); });
    std::stable_sort(b.begin(), b.end(),
                     [&](auto x, auto y) { return w.company_affinity(ci, x) > w.company_affinity(ci, y); });
    EXPECT_EQ(a, b);
  }
}

TEST(Synth, DivergenceSeparatesSides) {
  auto c = small();
  c.stakeholder_divergence = 1.0;
  const auto w = generate(c);
  double diff = 0.0;
  for (std::size_t v = 0; v < w.vacancies.size(); ++v)
    diff += std::abs(w.candidate_affinity(0, v) - w.company_affinity(0, v));
  EXPECT_GT(diff, 0.1);
}

TEST(Synth, EntityCountAudit) {
  const auto w = generate(small());
  const auto tables = world_to_tables(w);
  const auto g = kg::build_graph(tables, relation_naming());
  const std::vector<double> edges{2, 5, 10};
  auto bucket = [&](int years) { return std::upper_bound(edges.begin(), edges.end(), years) - edges.begin(); };
  std::set<long> cand_buckets, vac_buckets;
  for (const auto& cand : w.candidates) cand_buckets.insert(bucket(cand.experience_years));
  for (const auto& v : w.vacancies) vac_buckets.insert(bucket(v.min_experience_years));
  const std::size_t expected = w.skill_keys.size() + w.language_keys.size() + w.license_keys.size() +
                               w.education_keys.size() + w.location_keys.size() + 2 + w.job_types.size() +
                               2 * w.candidates.size() + 2 * w.vacancies.size() + cand_buckets.size() +
                               vac_buckets.size();
  EXPECT_EQ(g.entity_count(), expected);
  EXPECT_EQ(w.job_types.size(), 4u + 4 * 2 + 4 * 2 * 2);
}

TEST(Synth, NoLicencesNoRelation) {
  auto c = small();
  c.n_licenses = 0;
  const auto w = generate(c);
  const auto g = kg::build_graph(world_to_tables(w), relation_naming());
  EXPECT_FALSE(g.find_relation("holds_license").has_value());
  EXPECT_FALSE(g.find_relation("requires_license").has_value());
  const auto g2 = kg::build_graph(world_to_tables(generate(small())), relation_naming());
  EXPECT_TRUE(g2.find_relation("holds_license").has_value());
}

TEST(Synth, LabelCounts) {
  const auto c = small();
  const auto w = generate(c);
  EXPECT_EQ(w.labeled_count, c.n_candidates * c.labeled_per_candidate);
  EXPECT_EQ(w.labels.size(), c.n_candidates * (c.labeled_per_candidate + c.negative_per_candidate));
  std::ostringstream out;
  write_labels_tsv(w.labels, out);
  const auto text = out.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), w.labels.size() + 1);
  std::istringstream in(text);
  const auto back = read_labels_tsv(in);
  ASSERT_EQ(back.size(), w.labels.size());
  EXPECT_EQ(back.back().label, w.labels.back().label);
}

TEST(Synth, LabelsFollowPlantedAffinity) {
  const auto w = generate(small());
  for (std::size_t i = 0; i < w.labeled_count; ++i) {
    const auto& l = w.labels[i];
    EXPECT_EQ(l.label, w.label_for(w.combined_affinity(w.candidate_index(l.candidate), w.vacancy_index(l.vacancy))));
  }
  for (std::size_t i = w.labeled_count; i < w.labels.size(); ++i) EXPECT_EQ(w.labels[i].label, -1);
}

TEST(Synth, ZhaopinScheme) {
  auto c = small();
  c.label_scheme = sampler::LabelScheme::Zhaopin;
  const auto w = generate(c);
  for (const auto& l : w.labels) {
    EXPECT_GE(l.label, 0);
    EXPECT_LE(l.label, 3);
  }
}

TEST(Synth, PlantedOracleIsPerfect) {
  const auto w = generate(small());
  std::map<std::string, std::vector<const sampler::LabeledPair*>> by_cand;
  for (const auto& l : w.labels) by_cand[l.candidate].push_back(&l);
  std::map<std::string, std::string> catalog;
  for (const auto& v : w.vacancies) catalog[v.key] = v.region;
  std::vector<metrics::RankedList> lists;
  for (const auto& [cand, pairs] : by_cand) {
    std::vector<std::string> keys;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto* p : pairs) {
      keys.push_back(p->vacancy);
      scores.push_back(w.combined_affinity(w.candidate_index(cand), w.vacancy_index(p->vacancy)));
      labels.push_back(p->label);
    }
    lists.push_back(
        metrics::RankedList::build(cand, w.candidates[w.candidate_index(cand)].region, keys, scores, labels));
  }
  const auto r = metrics::evaluate("oracle", lists, catalog);
  EXPECT_DOUBLE_EQ(r.overall.at("ndcg@10"), 1.0);
}

TEST(Synth, TableTsvRoundTrip) {
  const auto w = generate(small());
  const auto schemas = table_schemas();
  const auto tables = world_to_tables(w);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    std::stringstream buf;
    write_table_tsv(tables[i], buf);
    const auto back = read_table_tsv(schemas[i], buf);
    EXPECT_EQ(back.rows, tables[i].rows) << tables[i].name;
  }
  std::istringstream bad("wrong\theader\n");
  EXPECT_THROW(read_table_tsv(schemas[0], bad), FormatError);
}
