#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "okra/kg.hpp"
#include "okra/sampler.hpp"

namespace okra::synth {

struct SynthConfig {
  std::size_t n_candidates = 120;
  std::size_t n_vacancies = 160;
  std::size_t n_skills = 40;
  std::size_t n_locations = 12;
  std::size_t n_languages = 5;
  std::size_t n_licenses = 3;
  /// Job-type hierarchy: majors x minors_per_major x units_per_minor leaves.
  std::size_t n_major_job_types = 4;
  std::size_t minors_per_major = 2;
  std::size_t units_per_minor = 2;
  std::size_t skills_per_entity = 6;
  std::size_t experience_per_candidate = 2;
  double rural_vacancy_fraction = 0.6582;
  double rural_candidate_fraction = 0.6;
  std::size_t latent_dim = 4;
  /// Sharpness of latent-driven feature choice.
  double feature_sharpness = 10.0;
  sampler::LabelScheme label_scheme = sampler::LabelScheme::Proprietary;
  /// Rotation between the two sides' affinities, in quarter turns.
  double stakeholder_divergence = 0.6;
  /// Shift applied to both affinities before their harmonic mean; smaller
  /// values let the weaker side dominate the label.
  double affinity_shift = 0.3;
  /// Added to the combined affinity of urban vacancies before labelling.
  double fairness_bias = 0.0;
  std::size_t labeled_per_candidate = 16;
  std::size_t negative_per_candidate = 4;
  /// Preference for high-affinity vacancies when picking labelled pairs.
  double labeled_sharpness = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::string canonical() const;
};

struct SynthCandidate {
  std::string key;
  std::string region;
  std::size_t location = 0;
  std::vector<double> latent;
  std::vector<std::size_t> skills;
  std::vector<std::size_t> languages;
  std::vector<std::size_t> licenses;
  std::vector<std::size_t> experience;  // unit job types
  int experience_years = 0;
  std::size_t education = 0;
  std::string cv;
};

struct SynthVacancy {
  std::string key;
  std::string region;
  std::size_t location = 0;
  std::vector<double> latent;
  std::vector<std::size_t> skills;
  std::vector<std::size_t> languages;
  std::vector<std::size_t> licenses;
  std::size_t job_type = 0;  // unit job type
  int min_experience_years = 0;
  std::size_t education = 0;
  std::string text;
};

struct JobType {
  std::string key;
  std::string parent;          // empty for majors
  std::vector<double> latent;  // units only
};

struct SynthWorld {
  SynthConfig config;
  std::vector<SynthCandidate> candidates;
  std::vector<SynthVacancy> vacancies;
  std::vector<std::string> skill_keys;
  std::vector<std::vector<double>> skill_latents;
  std::vector<std::string> location_keys;
  std::vector<std::string> location_regions;
  std::vector<std::string> language_keys;
  std::vector<std::string> license_keys;
  std::vector<std::string> education_keys;
  std::vector<JobType> job_types;
  std::vector<std::size_t> unit_job_types;  // indices into job_types
  /// Labelled pairs followed by the sampled negatives.
  std::vector<sampler::LabeledPair> labels;
  std::size_t labeled_count = 0;
  /// Combined-affinity thresholds, highest label first.
  std::vector<double> label_thresholds;
  /// Pearson correlation of shared-skill count with candidate-side affinity
  /// over all pairs.
  double skill_affinity_correlation = 0.0;

  double candidate_affinity(std::size_t c, std::size_t v) const;
  double company_affinity(std::size_t c, std::size_t v) const;
  /// Harmonic combination of the two affinities plus the urban boost.
  double combined_affinity(std::size_t c, std::size_t v) const;
  int label_for(double combined) const;
  std::size_t candidate_index(const std::string& key) const;
  std::size_t vacancy_index(const std::string& key) const;
};

SynthWorld generate(const SynthConfig& config);

/// Tables in kg_core form plus the relation naming they rely on.
std::vector<kg::Table> world_to_tables(const SynthWorld& world);
kg::RelationNaming relation_naming();
/// The inference rules the pipeline applies; registers their relations.
std::vector<kg::InferenceRule> default_rules(kg::KnowledgeGraph& graph);

/// Column layout of every generated table, by name, with no rows.
std::vector<kg::Table> table_schemas();

/// TSV with a header of column names; reading checks the header against the
/// schema and throws FormatError on mismatch.
void write_table_tsv(const kg::Table& table, std::ostream& out);
kg::Table read_table_tsv(const kg::Table& schema, std::istream& in);

void write_labels_tsv(const std::vector<sampler::LabeledPair>& labels, std::ostream& out);
std::vector<sampler::LabeledPair> read_labels_tsv(std::istream& in);

}  // namespace okra::synth
