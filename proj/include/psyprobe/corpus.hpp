#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psyprobe/distribution.hpp"
#include "psyprobe/nli.hpp"
#include "psyprobe/scoring.hpp"

namespace psyprobe {

enum class UnitKind { Sentence, Paragraph };

std::optional<UnitKind> parse_unit_kind(std::string_view text);
std::string_view unit_kind_name(UnitKind kind) noexcept;

struct SamplingPlan {
  double fraction = 1.0;  // per-document retention probability, (0, 1]
  std::uint64_t seed = 0;
  UnitKind unit = UnitKind::Sentence;
  std::size_t max_unit_chars = 500;

  void validate() const;
};

// Reference corpora and the share of each one that gets scored.
enum class CorpusPreset { Wikitext103, BookCorpus, EnglishWikipedia, WebTextTest };

std::optional<CorpusPreset> parse_preset(std::string_view text);
std::string_view preset_name(CorpusPreset preset) noexcept;
double preset_fraction(CorpusPreset preset) noexcept;

/// Sentence-level plan with the preset's fraction.
SamplingPlan preset_plan(CorpusPreset preset, std::uint64_t seed = 0);

struct Document {
  std::size_t index = 0;
  std::optional<std::string> text;  // empty when unreadable
  std::string origin;
};

/// Restartable, ordered stream of plain-text documents.
class CorpusSource {
 public:
  virtual ~CorpusSource() = default;
  virtual std::string name() const = 0;
  virtual void for_each(const std::function<void(const Document&)>& fn) const = 0;
};

class MemorySource final : public CorpusSource {
 public:
  MemorySource(std::string name, std::vector<std::string> documents)
      : name_(std::move(name)), documents_(std::move(documents)) {}

  std::string name() const override { return name_; }
  void for_each(const std::function<void(const Document&)>& fn) const override;

 private:
  std::string name_;
  std::vector<std::string> documents_;
};

/// A .txt file (one document), a .jsonl file (one document per line, read
/// from its "text" field), or a directory of those visited in sorted path
/// order. Invalid UTF-8 and unparsable lines are reported as unreadable.
class FileSource final : public CorpusSource {
 public:
  explicit FileSource(std::filesystem::path root);

  std::string name() const override;
  void for_each(const std::function<void(const Document&)>& fn) const override;

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
};

/// Deterministic Bernoulli draw for one document.
bool retain_document(std::uint64_t seed, std::size_t document_index, double fraction) noexcept;

/// Paragraph units split on blank lines (over-long paragraphs fall back to
/// sentences); sentence units come from split_sentences. Units shorter than
/// 3 characters are dropped.
std::vector<std::string> split_units(std::string_view document, const SamplingPlan& plan);

struct CorpusUnit {
  std::size_t document = 0;
  std::size_t unit = 0;
  std::string text;
};

struct SamplingStats {
  std::size_t documents_seen = 0;
  std::size_t documents_retained = 0;
  std::size_t documents_unreadable = 0;
  std::size_t units = 0;

  bool operator==(const SamplingStats&) const = default;
};

SamplingStats ingest_and_sample(const CorpusSource& source, const SamplingPlan& plan,
                                const std::function<void(CorpusUnit&&)>& sink);

/// Collects the sampled units; convenient for small corpora and tests.
std::vector<CorpusUnit> sample_units(const CorpusSource& source, const SamplingPlan& plan,
                                     SamplingStats* stats = nullptr);

struct UnitScores {
  std::size_t document = 0;
  std::size_t unit = 0;
  std::string text;
  TraitMap<double> scores;
};

struct CorpusEvaluation {
  std::string corpus_name;
  SamplingPlan plan;
  ScoringOptions scoring;
  std::string nli_name;
  SamplingStats sampling;
  std::size_t units_scored = 0;
  std::size_t units_failed = 0;
  std::vector<UnitScores> units;
  TraitDistribution distribution;
};

/// Scores every sampled unit on all five traits. Failed units are counted
/// and left out, so sampling.units == units_scored + units_failed.
CorpusEvaluation evaluate_corpus(const CorpusSource& source, const SamplingPlan& plan,
                                 const ScoringOptions& scoring, const NliBackend& nli, int workers = 1);

}  // namespace psyprobe
