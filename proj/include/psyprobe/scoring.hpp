#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "psyprobe/nli.hpp"
#include "psyprobe/scale.hpp"
#include "psyprobe/traits.hpp"

namespace psyprobe {

// Approach1: one label per trait, entailment vs contradiction.
// Approach2: both poles scored independently, softmax over the two
//            single-label probabilities.
// Approach3: both poles scored dependently, softmax over the two entailment
//            scores. Default for every headline number.
enum class ScoringApproach { Approach1 = 1, Approach2 = 2, Approach3 = 3 };

// What Approach3 feeds into its two-way softmax.
enum class PoleScoreSource { EntailmentLogits, EntailmentLogProbabilities };

struct ScoringOptions {
  ScoringApproach approach = ScoringApproach::Approach3;
  LabelVariant labels = LabelVariant::Published;
  PoleScoreSource pole_source = PoleScoreSource::EntailmentLogits;
};

std::optional<ScoringApproach> parse_approach(std::string_view text);

/// Counters for events that do not fail a score but must be visible.
struct ScoringDiagnostics {
  std::atomic<std::size_t> logit_fallbacks{0};
  std::atomic<std::size_t> truncated_premises{0};
};

/// "This response is characterized by {label}." Throws
/// std::invalid_argument on an empty label.
std::string build_hypothesis(std::string_view label);

/// entailment / (entailment + contradiction); 0.5 when both are zero.
double single_label_probability(const NliResult& r);

/// Entailment score used by Approach3 for one pole. Falls back to the log
/// of the entailment probability when the backend gives no logit.
double pole_entailment_score(const NliResult& r, PoleScoreSource source,
                             ScoringDiagnostics* diagnostics = nullptr);

/// Two-way softmax probability of the first of two scores, computed as a
/// logistic of their difference.
double two_way_softmax(double first, double second) noexcept;

TraitScore score_approach1(std::string_view premise, Trait trait, const NliBackend& backend,
                           const ScoringOptions& options = {}, ScoringDiagnostics* diagnostics = nullptr);
TraitScore score_approach2(std::string_view premise, Trait trait, const NliBackend& backend,
                           const ScoringOptions& options = {}, ScoringDiagnostics* diagnostics = nullptr);
TraitScore score_approach3(std::string_view premise, Trait trait, const NliBackend& backend,
                           const ScoringOptions& options = {}, ScoringDiagnostics* diagnostics = nullptr);

/// Dispatches on options.approach.
TraitScore score_trait(std::string_view premise, Trait trait, const NliBackend& backend,
                       const ScoringOptions& options = {}, ScoringDiagnostics* diagnostics = nullptr);

/// Scores every trait independently; the pairs of all five traits go to
/// the backend in one batch. Any failure throws ScoringError for the
/// whole premise.
TraitMap<TraitScore> score_all_traits(std::string_view premise, const NliBackend& backend,
                                      const ScoringOptions& options = {},
                                      ScoringDiagnostics* diagnostics = nullptr);

/// Binds a backend and options so call sites only pass text.
class ZeroShotScorer {
 public:
  ZeroShotScorer(const NliBackend& backend, ScoringOptions options = {})
      : backend_(&backend), options_(options) {}

  TraitScore score(std::string_view premise, Trait trait) const {
    return score_trait(premise, trait, *backend_, options_, &diagnostics_);
  }
  TraitMap<TraitScore> score_all(std::string_view premise) const {
    return score_all_traits(premise, *backend_, options_, &diagnostics_);
  }

  const NliBackend& backend() const noexcept { return *backend_; }
  const ScoringOptions& options() const noexcept { return options_; }
  const ScoringDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  const NliBackend* backend_;
  ScoringOptions options_;
  mutable ScoringDiagnostics diagnostics_;
};

}  // namespace psyprobe
