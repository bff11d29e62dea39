#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "psyprobe/nli.hpp"
#include "psyprobe/traits.hpp"

namespace psyprobe {

struct PoleKeywords {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
};

using Lexicon = TraitMap<PoleKeywords>;

/// Small built-in lexicon whose keyword sets are disjoint across traits.
const Lexicon& default_lexicon();

/// Reads {"extraversion": {"positive": [...], "negative": [...]}, ...}.
/// Traits left out get empty keyword lists.
Lexicon load_lexicon(const std::filesystem::path& path);

/// Deterministic test oracle. The entailment logit for a pole hypothesis is
/// the number of that pole's keywords among the premise's word tokens
/// (case-insensitive, whole words); contradiction and neutral logits are 0.
/// Unrecognised hypotheses get all-zero logits.
class LexiconNli final : public NliBackend {
 public:
  explicit LexiconNli(Lexicon lexicon = default_lexicon());

  std::string name() const override { return "lexicon"; }
  NliResult classify(std::string_view premise, std::string_view hypothesis) const override;

  /// Keyword count for one pole; exposed so tests can build expectations.
  int pole_count(std::string_view premise, Trait trait, bool positive_pole) const;

 private:
  Lexicon lexicon_;
};

/// Every pair gets the same three class logits.
class ConstantNli final : public NliBackend {
 public:
  explicit ConstantNli(double entailment_logit = 0.0, double contradiction_logit = 0.0,
                       double neutral_logit = 0.0)
      : result_(NliResult::from_logits(entailment_logit, contradiction_logit, neutral_logit)) {}

  std::string name() const override { return "constant"; }
  NliResult classify(std::string_view, std::string_view) const override { return result_; }

 private:
  NliResult result_;
};

/// One row of a tabular NLI fixture. premise_pattern is an ECMAScript regex
/// searched in the premise; "*" matches anything.
struct NliFixtureRow {
  std::string premise_pattern;
  std::string hypothesis;
  std::optional<double> entailment_logit;
  double entailment = 0.0;
  double contradiction = 0.0;
  double neutral = 0.0;
};

/// Looks pairs up in a fixture table; the first matching row wins and a
/// miss throws BackendError.
class FixtureNli final : public NliBackend {
 public:
  explicit FixtureNli(std::vector<NliFixtureRow> rows);

  /// Tab-separated: premise_pattern, hypothesis, entailment_logit ("-" for
  /// none), entailment, contradiction, neutral. '#' lines and a header row
  /// starting with "premise_pattern" are skipped.
  static FixtureNli load(const std::filesystem::path& path);

  std::string name() const override { return "fixture"; }
  NliResult classify(std::string_view premise, std::string_view hypothesis) const override;

 private:
  struct Compiled {
    NliFixtureRow row;
    std::optional<std::regex> pattern;
  };
  std::vector<Compiled> rows_;
};

}  // namespace psyprobe
