#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psyprobe/distribution.hpp"
#include "psyprobe/generation.hpp"
#include "psyprobe/nli.hpp"
#include "psyprobe/questionnaire.hpp"
#include "psyprobe/scoring.hpp"

namespace psyprobe {

// How a multi-sentence response becomes one score.
enum class OutputMode {
  WholeResponse = 1,   // the full text is the premise
  FirstSentence = 2,   // only the first sentence
  SentenceMedian = 3,  // median of per-sentence scores
};

std::optional<OutputMode> parse_mode(std::string_view text);

struct ProbeConfig {
  int n_repetitions = 20;
  OutputMode mode = OutputMode::FirstSentence;
  ScoringOptions scoring;
  bool strip_prompt = true;
  std::uint64_t seed = 0;
  int max_retries = 3;  // extra attempts after an empty or failed generation
  int workers = 1;      // only used when both backends are thread-safe

  void validate() const;
};

struct CompletionRecord {
  int repetition = 0;
  std::uint64_t seed = 0;  // seed of the final attempt
  int attempts = 0;
  std::string text;  // response after prompt stripping
  std::optional<double> score;
  std::string hole_reason;  // set when score is empty

  bool operator==(const CompletionRecord&) const = default;
};

struct ItemRecord {
  int item_id = 0;
  Trait trait = Trait::Extraversion;
  std::string prompt;
  std::vector<CompletionRecord> completions;

  bool operator==(const ItemRecord&) const = default;
};

struct UnpromptedRecord {
  int index = 0;
  std::uint64_t seed = 0;
  int attempts = 0;
  std::string text;
  std::optional<TraitMap<double>> scores;
  std::string hole_reason;

  bool operator==(const UnpromptedRecord&) const = default;
};

/// Full record of one model evaluation.
struct ProbeRun {
  std::string run_id;
  std::string backend_name;
  bool backend_reproducible = true;
  std::string nli_name;
  ProbeConfig probe;
  GenerationConfig generation;
  std::vector<ItemRecord> items;  // sorted by item id
  std::vector<UnpromptedRecord> unprompted;
  TraitProfile profile;
  std::size_t logit_fallbacks = 0;
  std::size_t truncated_premises = 0;
  std::string started_at;
  std::string finished_at;
};

struct RunContext {
  std::string run_id;                 // generated from the config when empty
  std::function<std::string()> clock;  // UTC ISO-8601 wall clock when empty
};

std::string utc_timestamp();

/// Removes a leading copy of the prompt (ignoring leading whitespace) and
/// trims the rest.
std::string strip_prompt_prefix(std::string_view response, std::string_view prompt);

/// Score of one response for one trait, or nullopt (a hole) when the
/// response is blank. Scoring failures throw ScoringError.
std::optional<TraitScore> score_response(std::string_view response, Trait trait, OutputMode mode,
                                         const ZeroShotScorer& scorer);

/// All five traits at once, under the same mode rules.
std::optional<TraitMap<TraitScore>> score_response_all(std::string_view response, OutputMode mode,
                                                       const ZeroShotScorer& scorer);

/// Administers every questionnaire item N times and scores each completion
/// against the item's keyed trait. Per-completion seeds derive from
/// (run seed, item id, repetition), so item order never matters.
/// BackendUnreachable aborts the run; other generation failures are
/// retried, then recorded as holes.
ProbeRun probe_model(const GenerationBackend& backend, const ProbeConfig& probe, const GenerationConfig& gen,
                     const NliBackend& nli, const Questionnaire& questionnaire = load_questionnaire(),
                     const RunContext& context = {});

/// n_samples completions of an empty prompt, each scored on all five traits.
/// Throws std::invalid_argument when n_samples < 1 or the backend cannot
/// generate unprompted.
ProbeRun probe_unprompted(const GenerationBackend& backend, const ProbeConfig& probe, const GenerationConfig& gen,
                          const NliBackend& nli, int n_samples, const RunContext& context = {});

/// Valid scores of a run grouped by trait.
TraitDistribution distribution_of(const ProbeRun& run);

/// Per-trait median, spread and hole count over the run's valid scores.
TraitProfile aggregate_profile(const ProbeRun& run);

}  // namespace psyprobe
