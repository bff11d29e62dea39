#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psyprobe/generation.hpp"
#include "psyprobe/nli.hpp"
#include "psyprobe/probe.hpp"
#include "psyprobe/training.hpp"
#include "psyprobe/traits.hpp"

namespace psyprobe {

/// A free-text response with its five aggregate trait scores.
struct AnnotatedExample {
  std::string text;
  TraitMap<double> scores;
};

/// Header names understood by load_annotated_dataset. Aliases map a file's
/// header (case-insensitive) to a canonical name: "text", a trait key such
/// as "emotional_stability", or "neuroticism" (converted with 6 - x).
struct DatasetSchema {
  std::map<std::string, std::string> aliases;
};

struct AnnotatedDataset {
  std::vector<AnnotatedExample> examples;
  std::size_t rejected_missing = 0;       // blank or non-numeric score, or blank text
  std::size_t rejected_out_of_range = 0;  // a score outside [1, 5]
};

/// Thrown when required columns are absent; lists them.
class DatasetSchemaError : public std::runtime_error {
 public:
  DatasetSchemaError(const std::string& what, std::vector<std::string> missing)
      : std::runtime_error(what), missing_columns(std::move(missing)) {}
  std::vector<std::string> missing_columns;
};

/// Reads .csv (RFC 4180 quoting) or .jsonl. Rows with a missing score or a
/// score outside [1, 5] are dropped and counted.
AnnotatedDataset load_annotated_dataset(const std::filesystem::path& path, const DatasetSchema& schema = {});
AnnotatedDataset parse_annotated_csv(std::string_view content, const DatasetSchema& schema = {});
AnnotatedDataset parse_annotated_jsonl(std::string_view content, const DatasetSchema& schema = {});

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

enum class AlterationMethod { Method1 = 1, Method2 = 2 };

inline constexpr double kMethod1Threshold = 4.0;
inline constexpr std::array<double, 5> kMethod2Thresholds{2.5, 3.0, 3.5, 4.0, 4.5};

/// Texts whose score on the trait is strictly above the threshold. Throws
/// std::invalid_argument on an empty dataset and std::runtime_error when
/// nothing passes.
std::vector<std::string> filter_method1(const std::vector<AnnotatedExample>& data, Trait trait,
                                        double threshold = kMethod1Threshold);

struct LabelledText {
  std::string text;
  int label = 0;
};

/// Label 1 iff score > threshold. The threshold must be one of
/// kMethod2Thresholds; a result with a single class throws
/// std::runtime_error.
std::vector<LabelledText> binarize_method2(const std::vector<AnnotatedExample>& data, Trait trait, double threshold);

struct FinetuneRecipe {
  AlterationMethod method = AlterationMethod::Method1;
  Trait target = Trait::Extraversion;
  std::vector<double> thresholds{kMethod1Threshold};
  CausalHyperparameters causal;
  ClassifierHyperparameters classifier;
  std::filesystem::path dataset;
  DatasetSchema schema;
  std::string base_model;
  std::string backend = "mock";
  std::optional<std::filesystem::path> baseline_run;  // ProbeRun JSON reused as the before column
  ProbeConfig probe;
  GenerationConfig generation;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reads a JSON recipe. Relative dataset and baseline paths resolve against
/// the recipe's directory.
FinetuneRecipe load_recipe(const std::filesystem::path& path);

struct AlterationColumn {
  std::string label;                 // "after" or the threshold
  std::optional<double> threshold;
  std::string model_id;
  TrainingSummary training;
  std::size_t positives = 0;  // training texts (Method 1) or label-1 rows (Method 2)
  std::size_t negatives = 0;
  ProbeRun run;
};

struct AlterationReport {
  AlterationMethod method = AlterationMethod::Method1;
  Trait target = Trait::Extraversion;
  std::string backend_name;
  std::string baseline_run_id;
  TraitProfile before;
  std::vector<AlterationColumn> after;

  /// after[column].median - before.median per trait; nullopt when either
  /// side has no valid scores.
  TraitMap<std::optional<double>> median_delta(std::size_t column) const;
};

/// "3.41 (0.73)"; "n/a" for a trait without scores.
std::string format_cell(const TraitSummary& summary);

/// Rows are all five traits, columns are the before profile followed by one
/// column per finetuned model.
std::string render_table(const AlterationReport& report);

struct AlterationInputs {
  const NliBackend* nli = nullptr;
  ProbeConfig probe;
  GenerationConfig generation;
  const ProbeRun* baseline = nullptr;  // reused as the before column when set
  std::uint64_t seed = 0;              // root of the training seeds
};

/// Causal finetuning on the trait-filtered texts, then a before/after
/// probe. Training divergence propagates as TrainingDiverged.
AlterationReport run_method1(TrainableBackend& backend, const std::vector<AnnotatedExample>& data, Trait trait,
                             const AlterationInputs& inputs, const CausalHyperparameters& hp = {},
                             double threshold = kMethod1Threshold);

/// Classification finetuning once per threshold, each probed for generation
/// afterwards.
AlterationReport run_method2(TrainableBackend& backend, const std::vector<AnnotatedExample>& data, Trait trait,
                             const std::vector<double>& thresholds, const AlterationInputs& inputs,
                             const ClassifierHyperparameters& hp = {});

/// Offline TrainableBackend. Unless a replacement generator is supplied,
/// the "finetuned" model replays the texts it was trained on (the positive
/// class for classification), picked by seed.
class FixtureTrainableBackend final : public TrainableBackend {
 public:
  explicit FixtureTrainableBackend(std::shared_ptr<const GenerationBackend> base,
                                   std::shared_ptr<const GenerationBackend> replacement = nullptr);

  std::string name() const override { return base_->name(); }
  std::shared_ptr<const GenerationBackend> base_generator() const override { return base_; }

  ModelHandle finetune_causal(std::span<const std::string> texts, const CausalHyperparameters& hp,
                              std::uint64_t seed) override;
  ModelHandle finetune_classifier(std::span<const std::string> texts, std::span<const int> labels,
                                  const ClassifierHyperparameters& hp, std::uint64_t seed) override;
  std::shared_ptr<const GenerationBackend> as_generation_backend(const ModelHandle& handle) const override;

  /// Texts each handle was trained on, in order.
  const std::vector<std::string>& trained_on(const ModelHandle& handle) const;

 private:
  ModelHandle remember(std::string kind, std::vector<std::string> texts, std::size_t epochs);

  std::shared_ptr<const GenerationBackend> base_;
  std::shared_ptr<const GenerationBackend> replacement_;
  std::map<std::string, std::vector<std::string>> trained_;
};

}  // namespace psyprobe
