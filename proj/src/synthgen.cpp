#include "okra/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "okra/model.hpp"

namespace okra::synth {

using kg::Column;
using kg::ColumnRole;
using kg::EntityKind;
using kg::Table;

void SynthConfig::validate() const {
  if (n_candidates < 1 || n_vacancies < 1) throw ConfigError("synth: counts must be >= 1");
  if (n_skills < 1 || n_locations < 2) throw ConfigError("synth: need >= 1 skill and >= 2 locations");
  if (n_major_job_types < 1 || minors_per_major < 1 || units_per_minor < 1) {
    throw ConfigError("synth: job-type hierarchy sizes must be >= 1");
  }
  if (skills_per_entity < 1 || skills_per_entity > n_skills) throw ConfigError("synth: skills_per_entity out of range");
  const std::size_t units = n_major_job_types * minors_per_major * units_per_minor;
  if (experience_per_candidate < 1 || experience_per_candidate > units) {
    throw ConfigError("synth: experience_per_candidate out of range");
  }
  auto frac = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!frac(rural_vacancy_fraction) || !frac(rural_candidate_fraction))
    throw ConfigError("synth: fractions must be in [0,1]");
  if (latent_dim < 2) throw ConfigError("synth: latent_dim must be >= 2");
  if (!(stakeholder_divergence >= 0.0 && stakeholder_divergence <= 1.0)) {
    throw ConfigError("synth: stakeholder_divergence must be in [0,1]");
  }
  if (!(affinity_shift > 0.0)) throw ConfigError("synth: affinity_shift must be > 0");
  if (n_languages < 1) throw ConfigError("synth: need >= 1 language");
  if (labeled_per_candidate < 1 || labeled_per_candidate > n_vacancies) {
    throw ConfigError("synth: labeled_per_candidate out of range");
  }
}

std::string SynthConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "n_candidates=" << n_candidates << "\nn_vacancies=" << n_vacancies << "\nn_skills=" << n_skills
     << "\nn_locations=" << n_locations << "\nn_languages=" << n_languages << "\nn_licenses=" << n_licenses
     << "\nn_major_job_types=" << n_major_job_types << "\nminors_per_major=" << minors_per_major
     << "\nunits_per_minor=" << units_per_minor << "\nskills_per_entity=" << skills_per_entity
     << "\nexperience_per_candidate=" << experience_per_candidate
     << "\nrural_vacancy_fraction=" << rural_vacancy_fraction
     << "\nrural_candidate_fraction=" << rural_candidate_fraction << "\nlatent_dim=" << latent_dim
     << "\nfeature_sharpness=" << feature_sharpness
     << "\nlabel_scheme=" << (label_scheme == sampler::LabelScheme::Proprietary ? "proprietary" : "zhaopin")
     << "\nstakeholder_divergence=" << stakeholder_divergence << "\naffinity_shift=" << affinity_shift
     << "\nfairness_bias=" << fairness_bias << "\nlabeled_per_candidate=" << labeled_per_candidate
     << "\nnegative_per_candidate=" << negative_per_candidate << "\nlabeled_sharpness=" << labeled_sharpness
     << "\nseed=" << seed << "\n";
  return os.str();
}

namespace {

using Rng = std::mt19937_64;

Rng stream(std::uint64_t seed, std::string_view name) { return Rng(derive_seed(seed, {"synth", name})); }

std::vector<double> unit_vector(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Rotation by angle theta in the coordinate planes (0,1), (2,3), ...
std::vector<double> rotate(const std::vector<double>& v, double theta) {
  std::vector<double> out = v;
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
    out[i] = c * v[i] - s * v[i + 1];
    out[i + 1] = s * v[i] + c * v[i + 1];
  }
  return out;
}

/// k distinct indices, drawn without replacement with weights exp(logit)
/// (Gumbel top-k), returned sorted.
std::vector<std::size_t> weighted_pick(Rng& rng, const std::vector<double>& logits, std::size_t k) {
  std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < logits.size(); ++i) keyed.emplace_back(logits[i] - std::log(-std::log(u(rng))), i);
  std::partial_sort(
      keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(),
      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(keyed[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

/// Exactly round(fraction * n) entries are "rural", in shuffled positions.
std::vector<std::string> assign_regions(Rng& rng, std::size_t n, double fraction) {
  const auto rural = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::string> out(n, "urban");
  for (std::size_t i = 0; i < rural && i < n; ++i) out[i] = "rural";
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::string numbered(std::string_view prefix, std::size_t i, std::size_t width = 3) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*zu", static_cast<int>(width), i);
  return std::string(prefix) + buf;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "team",     "motivated", "flexible", "reliable", "growth",    "hours",    "contract", "permanent",
      "training", "customer",  "quality",  "shift",    "dynamic",   "friendly", "support",  "planning",
      "office",   "field",     "manager",  "junior",   "senior",    "weekend",  "travel",   "remote",
      "safety",   "service",   "tools",    "project",  "colleague", "salary",   "benefits", "career",
  };
  return words;
}

std::string make_text(Rng& rng, std::string_view opener, const std::vector<std::string>& skill_names,
                      const std::string& location) {
  std::bernoulli_distribution mention(0.8);
  std::uniform_int_distribution<std::size_t> filler(0, filler_words().size() - 1);
  std::uniform_int_distribution<int> filler_count(6, 14);
  std::vector<std::string> tokens{std::string(opener)};
  for (const auto& s : skill_names) {
    if (mention(rng)) tokens.push_back(s);
  }
  tokens.push_back("in");
  tokens.push_back(location);
  const int n = filler_count(rng);
  for (int i = 0; i < n; ++i) tokens.push_back(filler_words()[filler(rng)]);
  std::shuffle(tokens.begin() + 1, tokens.end(), rng);
  return join(tokens, " ");
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return (sxx == 0.0 || syy == 0.0) ? 0.0 : sxy / std::sqrt(sxx * syy);
}

/// Label mass per positive label, best first (the remainder is rejection).
std::vector<std::pair<int, double>> label_quantiles(sampler::LabelScheme scheme) {
  if (scheme == sampler::LabelScheme::Proprietary) return {{5, 0.02}, {4, 0.04}, {3, 0.06}, {2, 0.08}, {1, 0.10}};
  return {{3, 0.03}, {2, 0.07}, {1, 0.10}};
}

}  // namespace

double SynthWorld::candidate_affinity(std::size_t c, std::size_t v) const {
  return dot(candidates[c].latent, vacancies[v].latent);
}

double SynthWorld::company_affinity(std::size_t c, std::size_t v) const {
  const double theta = config.stakeholder_divergence * std::acos(-1.0) / 2.0;
  return dot(candidates[c].latent, rotate(vacancies[v].latent, theta));
}

double SynthWorld::combined_affinity(std::size_t c, std::size_t v) const {
  double f = model::fuse_harmonic(candidate_affinity(c, v), company_affinity(c, v), 1.0, config.affinity_shift);
  if (vacancies[v].region == "urban") f += config.fairness_bias;
  return f;
}

int SynthWorld::label_for(double combined) const {
  const auto q = label_quantiles(config.label_scheme);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (combined >= label_thresholds[i]) return q[i].first;
  }
  return 0;
}

std::size_t SynthWorld::candidate_index(const std::string& key) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].key == key) return i;
  }
  throw Error("unknown candidate '" + key + "'");
}

std::size_t SynthWorld::vacancy_index(const std::string& key) const {
  for (std::size_t i = 0; i < vacancies.size(); ++i) {
    if (vacancies[i].key == key) return i;
  }
  throw Error("unknown vacancy '" + key + "'");
}

SynthWorld generate(const SynthConfig& config) {
  config.validate();
  SynthWorld w;
  w.config = config;
  const std::size_t d = config.latent_dim;
  const double kappa = config.feature_sharpness;
  const double theta = config.stakeholder_divergence * std::acos(-1.0) / 2.0;

  // Vocabularies.
  {
    Rng rng = stream(config.seed, "skills");
    for (std::size_t s = 0; s < config.n_skills; ++s) {
      w.skill_keys.push_back(numbered("skill", s));
      w.skill_latents.push_back(unit_vector(rng, d));
    }
  }
  {
    const std::size_t urban_locations = std::max<std::size_t>(1, config.n_locations * 2 / 5);
    for (std::size_t l = 0; l < config.n_locations; ++l) {
      w.location_keys.push_back(numbered("loc", l));
      w.location_regions.push_back(l < urban_locations ? "urban" : "rural");
    }
  }
  for (std::size_t i = 0; i < config.n_languages; ++i) w.language_keys.push_back(numbered("lang", i, 2));
  for (std::size_t i = 0; i < config.n_licenses; ++i) w.license_keys.push_back(numbered("license", i, 2));
  std::vector<std::vector<double>> language_latents, license_latents;
  {
    Rng rng = stream(config.seed, "credentials");
    for (std::size_t i = 0; i < config.n_languages; ++i) language_latents.push_back(unit_vector(rng, d));
    for (std::size_t i = 0; i < config.n_licenses; ++i) license_latents.push_back(unit_vector(rng, d));
  }
  auto logits_over = [&](const std::vector<std::vector<double>>& pool, const std::vector<double>& x) {
    std::vector<double> out;
    for (const auto& p : pool) out.push_back(kappa * dot(x, p));
    return out;
  };
  for (const char* e : {"edu:secondary", "edu:vocational", "edu:bachelor", "edu:master"}) w.education_keys.push_back(e);
  {
    Rng rng = stream(config.seed, "job-types");
    for (std::size_t a = 0; a < config.n_major_job_types; ++a) {
      const std::string major = "isco:" + std::to_string(a + 1);
      w.job_types.push_back({major, "", {}});
      for (std::size_t b = 0; b < config.minors_per_major; ++b) {
        const std::string minor = major + std::to_string(b + 1);
        w.job_types.push_back({minor, major, {}});
        for (std::size_t c = 0; c < config.units_per_minor; ++c) {
          w.unit_job_types.push_back(w.job_types.size());
          w.job_types.push_back({minor + std::to_string(c + 1), minor, unit_vector(rng, d)});
        }
      }
    }
  }
  auto locations_in = [&](const std::string& region) {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < w.location_keys.size(); ++l) {
      if (w.location_regions[l] == region) out.push_back(l);
    }
    return out;
  };
  const auto urban_locs = locations_in("urban"), rural_locs = locations_in("rural");
  auto pick_location = [&](Rng& rng, const std::string& region) {
    const auto& pool = region == "urban" ? urban_locs : rural_locs;
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };
  auto skill_logits = [&](const std::vector<double>& x) {
    std::vector<double> out;
    for (const auto& s : w.skill_latents) out.push_back(kappa * dot(x, s));
    return out;
  };
  auto type_logits = [&](const std::vector<double>& x) {
    std::vector<double> out;
    for (std::size_t t : w.unit_job_types) out.push_back(kappa * dot(x, w.job_types[t].latent));
    return out;
  };
  auto skill_names = [&](const std::vector<std::size_t>& skills) {
    std::vector<std::string> out;
    for (std::size_t s : skills) out.push_back(w.skill_keys[s]);
    return out;
  };

  // Candidates.
  {
    Rng rng = stream(config.seed, "candidates");
    auto regions = assign_regions(rng, config.n_candidates, config.rural_candidate_fraction);
    std::uniform_int_distribution<int> years(0, 20);
    std::uniform_int_distribution<std::size_t> edu(0, w.education_keys.size() - 1);
    std::bernoulli_distribution second_language(0.4), holds_license(0.5);
    for (std::size_t i = 0; i < config.n_candidates; ++i) {
      SynthCandidate c;
      c.key = numbered("cand", i);
      c.region = regions[i];
      c.location = pick_location(rng, c.region);
      c.latent = unit_vector(rng, d);
      c.skills = weighted_pick(rng, skill_logits(c.latent), config.skills_per_entity);
      // Experience follows the employer-side view of the candidate.
      const auto seen_by_employers = rotate(c.latent, -theta);
      for (std::size_t k : weighted_pick(rng, type_logits(seen_by_employers), config.experience_per_candidate)) {
        c.experience.push_back(w.unit_job_types[k]);
      }
      c.languages = weighted_pick(rng, logits_over(language_latents, seen_by_employers),
                                  std::min<std::size_t>(config.n_languages, second_language(rng) ? 2 : 1));
      if (config.n_licenses > 0 && holds_license(rng)) {
        c.licenses = weighted_pick(rng, logits_over(license_latents, seen_by_employers), 1);
      }
      c.experience_years = years(rng);
      c.education = edu(rng);
      c.cv = make_text(rng, "candidate", skill_names(c.skills), w.location_keys[c.location]);
      w.candidates.push_back(std::move(c));
    }
  }

  // Vacancies.
  {
    Rng rng = stream(config.seed, "vacancies");
    auto regions = assign_regions(rng, config.n_vacancies, config.rural_vacancy_fraction);
    std::uniform_int_distribution<int> years(0, 10);
    std::uniform_int_distribution<std::size_t> edu(0, w.education_keys.size() - 1);
    std::bernoulli_distribution needs_license(0.3);
    for (std::size_t i = 0; i < config.n_vacancies; ++i) {
      SynthVacancy v;
      v.key = numbered("vac", i);
      v.region = regions[i];
      v.location = pick_location(rng, v.region);
      v.latent = unit_vector(rng, d);
      v.skills = weighted_pick(rng, skill_logits(v.latent), config.skills_per_entity);
      v.job_type = w.unit_job_types[weighted_pick(rng, type_logits(v.latent), 1).front()];
      v.languages = weighted_pick(rng, logits_over(language_latents, v.latent), 1);
      if (config.n_licenses > 0 && needs_license(rng))
        v.licenses = weighted_pick(rng, logits_over(license_latents, v.latent), 1);
      v.min_experience_years = years(rng);
      v.education = edu(rng);
      v.text = make_text(rng, "vacancy", skill_names(v.skills), w.location_keys[v.location]);
      w.vacancies.push_back(std::move(v));
    }
  }

  // Global label thresholds over every pair.
  const std::size_t nc = config.n_candidates, nv = config.n_vacancies;
  std::vector<double> combined(nc * nv);
  std::vector<double> shared, affinity;
  shared.reserve(nc * nv);
  affinity.reserve(nc * nv);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t v = 0; v < nv; ++v) {
      combined[c * nv + v] = w.combined_affinity(c, v);
      std::vector<std::size_t> common;
      std::set_intersection(w.candidates[c].skills.begin(), w.candidates[c].skills.end(), w.vacancies[v].skills.begin(),
                            w.vacancies[v].skills.end(), std::back_inserter(common));
      shared.push_back(static_cast<double>(common.size()));
      affinity.push_back(w.candidate_affinity(c, v));
    }
  }
  w.skill_affinity_correlation = pearson(shared, affinity);
  {
    std::vector<double> sorted = combined;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double mass = 0.0;
    for (const auto& [label, share] : label_quantiles(config.label_scheme)) {
      mass += share;
      const auto idx = std::min(sorted.size() - 1,
                                static_cast<std::size_t>(std::ceil(mass * static_cast<double>(sorted.size()))) - 1);
      w.label_thresholds.push_back(sorted[idx]);
    }
  }

  // Labelled pairs lean towards high affinity; negatives come from the
  // rejection region of pairs not already labelled.
  Rng rng = stream(config.seed, "labels");
  std::vector<double> mean_sd(2, 0.0);
  {
    double s = 0.0, ss = 0.0;
    for (double f : combined) s += f, ss += f * f;
    const double n = static_cast<double>(combined.size());
    mean_sd[0] = s / n;
    mean_sd[1] = std::sqrt(std::max(1e-12, ss / n - mean_sd[0] * mean_sd[0]));
  }
  std::vector<std::string> vacancy_keys;
  for (const auto& v : w.vacancies) vacancy_keys.push_back(v.key);
  std::vector<sampler::LabeledPair> negatives;
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> logits(nv);
    for (std::size_t v = 0; v < nv; ++v) {
      logits[v] = config.labeled_sharpness * (combined[c * nv + v] - mean_sd[0]) / mean_sd[1];
    }
    std::set<sampler::KeyPair> taken;
    for (std::size_t v : weighted_pick(rng, logits, config.labeled_per_candidate)) {
      w.labels.push_back({w.candidates[c].key, w.vacancies[v].key, w.label_for(combined[c * nv + v])});
      taken.insert({w.candidates[c].key, w.vacancies[v].key});
    }
    std::vector<std::string> rejections;
    for (std::size_t v = 0; v < nv; ++v) {
      if (w.label_for(combined[c * nv + v]) == 0) rejections.push_back(vacancy_keys[v]);
    }
    const std::vector<std::string> one{w.candidates[c].key};
    std::size_t available = 0;
    for (const auto& r : rejections) available += taken.count({one.front(), r}) ? 0 : 1;
    const std::size_t count = std::min(config.negative_per_candidate, available);
    auto neg = sampler::negative_sample(one, rejections, taken, count, config.label_scheme,
                                        derive_seed(config.seed, {"negatives", one.front()}));
    negatives.insert(negatives.end(), neg.begin(), neg.end());
  }
  w.labeled_count = w.labels.size();
  w.labels.insert(w.labels.end(), negatives.begin(), negatives.end());
  return w;
}

// ---------------------------------------------------------------------------
// Tables

std::vector<Table> table_schemas() {
  auto key = [](std::string name, EntityKind kind) { return Column{std::move(name), ColumnRole::Key, kind, {}}; };
  auto ref = [](std::string name, EntityKind kind) { return Column{std::move(name), ColumnRole::Ref, kind, {}}; };
  auto attr = [](std::string name) { return Column{std::move(name), ColumnRole::Attr, EntityKind::Skill, {}}; };
  auto text = [](std::string name) { return Column{std::move(name), ColumnRole::Text, EntityKind::TextDoc, {}}; };
  auto literal = [](std::string name, EntityKind kind, std::vector<double> bins) {
    return Column{std::move(name), ColumnRole::Literal, kind, std::move(bins)};
  };
  return {
      {"skills", {key("skill", EntityKind::Skill), attr("name")}, {}},
      {"languages", {key("language", EntityKind::Language)}, {}},
      {"licenses", {key("license", EntityKind::License)}, {}},
      {"education_levels", {key("education", EntityKind::EducationLevel)}, {}},
      {"locations", {key("location", EntityKind::Location), attr("region"), ref("part_of", EntityKind::Location)}, {}},
      {"job_types", {key("job_type", EntityKind::JobType), ref("parent", EntityKind::JobType)}, {}},
      {"candidates",
       {key("candidate", EntityKind::Candidate), attr("region"), ref("location", EntityKind::Location),
        literal("experience_years", EntityKind::WorkExperience, {2, 5, 10}),
        ref("education", EntityKind::EducationLevel), text("cv")},
       {}},
      {"vacancies",
       {key("vacancy", EntityKind::Vacancy), attr("region"), ref("vacancy_location", EntityKind::Location),
        ref("job_type", EntityKind::JobType), literal("required_experience", EntityKind::WorkExperience, {2, 5, 10}),
        ref("required_education", EntityKind::EducationLevel), text("description")},
       {}},
      {"candidate_skills", {ref("candidate", EntityKind::Candidate), ref("skill", EntityKind::Skill)}, {}},
      {"vacancy_skills", {ref("vacancy", EntityKind::Vacancy), ref("skill", EntityKind::Skill)}, {}},
      {"candidate_languages", {ref("candidate", EntityKind::Candidate), ref("language", EntityKind::Language)}, {}},
      {"vacancy_languages", {ref("vacancy", EntityKind::Vacancy), ref("language", EntityKind::Language)}, {}},
      {"candidate_licenses", {ref("candidate", EntityKind::Candidate), ref("license", EntityKind::License)}, {}},
      {"vacancy_licenses", {ref("vacancy", EntityKind::Vacancy), ref("license", EntityKind::License)}, {}},
      {"candidate_experience", {ref("candidate", EntityKind::Candidate), ref("job_type", EntityKind::JobType)}, {}},
  };
}

kg::RelationNaming relation_naming() {
  return {
      {"part_of", "part_of"},
      {"parent", "subclass_of"},
      {"location", "located_in"},
      {"vacancy_location", "located_in"},
      {"experience_years", "has_experience_years"},
      {"education", "has_education"},
      {"cv", "has_text"},
      {"job_type", "has_job_type"},
      {"required_experience", "requires_experience_years"},
      {"required_education", "requires_education"},
      {"description", "has_text"},
      {"candidate_skills", "has_skill"},
      {"vacancy_skills", "requires_skill"},
      {"candidate_languages", "speaks"},
      {"vacancy_languages", "requires_language"},
      {"candidate_licenses", "holds_license"},
      {"vacancy_licenses", "requires_license"},
      {"candidate_experience", "has_experience"},
  };
}

std::vector<kg::InferenceRule> default_rules(kg::KnowledgeGraph& graph) {
  using kg::InferenceRule;
  std::vector<InferenceRule> rules;
  auto has = [&](std::string_view name) { return graph.find_relation(name).has_value(); };
  auto id = [&](std::string_view name) { return graph.register_relation(name).id; };
  if (has("subclass_of")) {
    rules.push_back(InferenceRule::transitive(id("subclass_of")));
    for (const char* target : {"has_experience", "has_job_type"}) {
      if (has(target)) rules.push_back(InferenceRule::subclass_propagate(id("subclass_of"), id(target)));
    }
  }
  if (has("part_of")) {
    rules.push_back(InferenceRule::transitive(id("part_of")));
    if (has("located_in")) rules.push_back(InferenceRule::subclass_propagate(id("part_of"), id("located_in")));
  }
  const std::pair<const char*, const char*> inverses[] = {
      {"has_skill", "skill_of"},
      {"requires_skill", "required_by"},
      {"has_experience", "experience_of"},
      {"has_job_type", "job_type_of"},
  };
  for (const auto& [fwd, inv] : inverses) {
    if (has(fwd)) rules.push_back(InferenceRule::inverse_pair(id(fwd), id(inv)));
  }
  return rules;
}

std::vector<Table> world_to_tables(const SynthWorld& w) {
  auto tables = table_schemas();
  auto table = [&](std::string_view name) -> Table& {
    for (auto& t : tables) {
      if (t.name == name) return t;
    }
    throw Error("no table " + std::string(name));
  };
  for (std::size_t s = 0; s < w.skill_keys.size(); ++s)
    table("skills").rows.push_back({w.skill_keys[s], w.skill_keys[s]});
  for (const auto& l : w.language_keys) table("languages").rows.push_back({l});
  for (const auto& l : w.license_keys) table("licenses").rows.push_back({l});
  for (const auto& e : w.education_keys) table("education_levels").rows.push_back({e});
  for (const char* region : {"urban", "rural"}) {
    table("locations").rows.push_back({std::string("region:") + region, region, ""});
  }
  for (std::size_t l = 0; l < w.location_keys.size(); ++l) {
    table("locations").rows.push_back({w.location_keys[l], w.location_regions[l], "region:" + w.location_regions[l]});
  }
  for (const auto& jt : w.job_types) table("job_types").rows.push_back({jt.key, jt.parent});
  for (const auto& c : w.candidates) {
    table("candidates")
        .rows.push_back({c.key, c.region, w.location_keys[c.location], std::to_string(c.experience_years),
                         w.education_keys[c.education], c.cv});
    for (std::size_t s : c.skills) table("candidate_skills").rows.push_back({c.key, w.skill_keys[s]});
    for (std::size_t l : c.languages) table("candidate_languages").rows.push_back({c.key, w.language_keys[l]});
    for (std::size_t l : c.licenses) table("candidate_licenses").rows.push_back({c.key, w.license_keys[l]});
    for (std::size_t t : c.experience) table("candidate_experience").rows.push_back({c.key, w.job_types[t].key});
  }
  for (const auto& v : w.vacancies) {
    table("vacancies")
        .rows.push_back({v.key, v.region, w.location_keys[v.location], w.job_types[v.job_type].key,
                         std::to_string(v.min_experience_years), w.education_keys[v.education], v.text});
    for (std::size_t s : v.skills) table("vacancy_skills").rows.push_back({v.key, w.skill_keys[s]});
    for (std::size_t l : v.languages) table("vacancy_languages").rows.push_back({v.key, w.language_keys[l]});
    for (std::size_t l : v.licenses) table("vacancy_licenses").rows.push_back({v.key, w.license_keys[l]});
  }
  return tables;
}

void write_table_tsv(const Table& table, std::ostream& out) {
  std::vector<std::string> names;
  for (const auto& c : table.columns) names.push_back(c.name);
  out << join(names, "\t") << "\n";
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (const auto& cell : row) cells.push_back(kg::escape_tsv(cell));
    out << join(cells, "\t") << "\n";
  }
}

Table read_table_tsv(const Table& schema, std::istream& in) {
  Table t = schema;
  t.rows.clear();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(schema.name + ": missing header");
  std::vector<std::string> expected;
  for (const auto& c : schema.columns) expected.push_back(c.name);
  if (split(line, '\t') != expected) throw FormatError(schema.name + ": header does not match the table schema");
  while (std::getline(in, line)) {
    if (line.empty() && schema.columns.size() > 1) continue;
    auto cells = split(line, '\t');
    if (cells.size() != schema.columns.size()) {
      throw FormatError(schema.name + ": expected " + std::to_string(schema.columns.size()) + " cells in '" + line +
                        "'");
    }
    for (auto& c : cells) c = kg::unescape_tsv(c);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_labels_tsv(const std::vector<sampler::LabeledPair>& labels, std::ostream& out) {
  out << "candidate_key\tvacancy_key\tlabel\n";
  for (const auto& l : labels) out << l.candidate << "\t" << l.vacancy << "\t" << l.label << "\n";
}

std::vector<sampler::LabeledPair> read_labels_tsv(std::istream& in) {
  std::vector<sampler::LabeledPair> out;
  std::string line;
  if (!std::getline(in, line) || line != "candidate_key\tvacancy_key\tlabel") throw FormatError("labels: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != 3) throw FormatError("labels: expected 3 columns in '" + line + "'");
    try {
      out.push_back({cells[0], cells[1], std::stoi(cells[2])});
    } catch (const std::exception&) {
      throw FormatError("labels: bad label in '" + line + "'");
    }
  }
  return out;
}

}  // namespace okra::synth
