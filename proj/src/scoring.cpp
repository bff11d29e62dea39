#include "psyprobe/scoring.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "psyprobe/errors.hpp"
#include "psyprobe/text.hpp"

namespace psyprobe {

namespace {

// Hypotheses for one trait: one for Approach1, positive then negative pole
// otherwise.
std::vector<std::string> hypotheses_for(Trait trait, const ScoringOptions& options) {
  if (options.approach == ScoringApproach::Approach1) {
    return {build_hypothesis(single_label(trait))};
  }
  const auto& pair = label_pair(trait, options.labels);
  return {build_hypothesis(pair.positive_label), build_hypothesis(pair.negative_label)};
}

TraitScore combine(Trait trait, std::span<const NliResult> results, const ScoringOptions& options,
                   ScoringDiagnostics* diagnostics) {
  for (const auto& r : results) r.validate();
  switch (options.approach) {
    case ScoringApproach::Approach1: {
      const auto score = interpolate_unit_to_scale(single_label_probability(results[0]));
      return trait == Trait::EmotionalStability ? score.reflected() : score;
    }
    case ScoringApproach::Approach2: {
      const double p_pos = single_label_probability(results[0]);
      const double p_neg = single_label_probability(results[1]);
      return interpolate_unit_to_scale(two_way_softmax(p_pos, p_neg));
    }
    case ScoringApproach::Approach3: {
      const double pos = pole_entailment_score(results[0], options.pole_source, diagnostics);
      const double neg = pole_entailment_score(results[1], options.pole_source, diagnostics);
      return interpolate_unit_to_scale(two_way_softmax(pos, neg));
    }
  }
  throw std::invalid_argument("unknown scoring approach");
}

std::string_view prepare_premise(std::string_view premise, const NliBackend& backend,
                                 ScoringDiagnostics* diagnostics) {
  if (trim(premise).empty()) throw std::invalid_argument("premise is empty");
  const std::size_t limit = backend.max_premise_bytes();
  if (limit > 0 && premise.size() > limit) {
    if (diagnostics) ++diagnostics->truncated_premises;
    return truncate_utf8(premise, limit);
  }
  return premise;
}

std::string context(std::string_view premise, std::string_view what) {
  std::string head(truncate_utf8(premise, 60));
  if (head.size() < premise.size()) head += "...";
  return "scoring premise \"" + head + "\" failed: " + std::string(what);
}

}  // namespace

std::optional<ScoringApproach> parse_approach(std::string_view text) {
  if (text == "1" || text == "approach1") return ScoringApproach::Approach1;
  if (text == "2" || text == "approach2") return ScoringApproach::Approach2;
  if (text == "3" || text == "approach3") return ScoringApproach::Approach3;
  return std::nullopt;
}

std::string build_hypothesis(std::string_view label) {
  if (trim(label).empty()) throw std::invalid_argument("hypothesis label is empty");
  std::string out = "This response is characterized by ";
  out += label;
  out += '.';
  return out;
}

double single_label_probability(const NliResult& r) {
  const double mass = r.entailment + r.contradiction;
  return mass > 0.0 ? r.entailment / mass : 0.5;
}

double pole_entailment_score(const NliResult& r, PoleScoreSource source, ScoringDiagnostics* diagnostics) {
  if (source == PoleScoreSource::EntailmentLogits && r.entailment_logit) return *r.entailment_logit;
  if (source == PoleScoreSource::EntailmentLogits && diagnostics) ++diagnostics->logit_fallbacks;
  return std::log(r.entailment);
}

double two_way_softmax(double first, double second) noexcept {
  if (first == second) return 0.5;  // covers equal infinities
  const double d = first - second;
  if (std::isnan(d)) return 0.5;
  return d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
}

TraitScore score_trait(std::string_view premise, Trait trait, const NliBackend& backend,
                       const ScoringOptions& options, ScoringDiagnostics* diagnostics) {
  const auto text = prepare_premise(premise, backend, diagnostics);
  std::vector<NliPair> pairs;
  for (auto& h : hypotheses_for(trait, options)) pairs.push_back({std::string(text), std::move(h)});
  try {
    const auto results = backend.classify_many(pairs);
    if (results.size() != pairs.size()) throw BackendError("backend returned wrong number of results");
    return combine(trait, results, options, diagnostics);
  } catch (const BackendUnreachable&) {
    throw;
  } catch (const std::exception& e) {
    throw ScoringError(context(premise, std::string(trait_key(trait)) + ": " + e.what()));
  }
}

TraitScore score_approach1(std::string_view premise, Trait trait, const NliBackend& backend,
                           const ScoringOptions& options, ScoringDiagnostics* diagnostics) {
  auto o = options;
  o.approach = ScoringApproach::Approach1;
  return score_trait(premise, trait, backend, o, diagnostics);
}

TraitScore score_approach2(std::string_view premise, Trait trait, const NliBackend& backend,
                           const ScoringOptions& options, ScoringDiagnostics* diagnostics) {
  auto o = options;
  o.approach = ScoringApproach::Approach2;
  return score_trait(premise, trait, backend, o, diagnostics);
}

TraitScore score_approach3(std::string_view premise, Trait trait, const NliBackend& backend,
                           const ScoringOptions& options, ScoringDiagnostics* diagnostics) {
  auto o = options;
  o.approach = ScoringApproach::Approach3;
  return score_trait(premise, trait, backend, o, diagnostics);
}

TraitMap<TraitScore> score_all_traits(std::string_view premise, const NliBackend& backend,
                                      const ScoringOptions& options, ScoringDiagnostics* diagnostics) {
  const auto text = prepare_premise(premise, backend, diagnostics);
  std::vector<NliPair> pairs;
  std::array<std::size_t, kTraitCount + 1> offsets{};
  for (Trait t : kAllTraits) {
    for (auto& h : hypotheses_for(t, options)) pairs.push_back({std::string(text), std::move(h)});
    offsets[index_of(t) + 1] = pairs.size();
  }
  try {
    const auto results = backend.classify_many(pairs);
    if (results.size() != pairs.size()) throw BackendError("backend returned wrong number of results");
    TraitMap<TraitScore> out(TraitScore{kScaleNeutral});
    for (Trait t : kAllTraits) {
      const auto i = index_of(t);
      out[t] = combine(t, std::span(results).subspan(offsets[i], offsets[i + 1] - offsets[i]), options,
                       diagnostics);
    }
    return out;
  } catch (const BackendUnreachable&) {
    throw;
  } catch (const std::exception& e) {
    throw ScoringError(context(premise, e.what()));
  }
}

}  // namespace psyprobe
