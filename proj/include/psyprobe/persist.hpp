#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psyprobe/alteration.hpp"
#include "psyprobe/corpus.hpp"
#include "psyprobe/distribution.hpp"
#include "psyprobe/probe.hpp"

namespace psyprobe {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.3.0";

using Json = nlohmann::ordered_json;

Json to_json(const GenerationConfig& config);
GenerationConfig generation_config_from_json(const nlohmann::json& j);

Json to_json(const ScoringOptions& options);
ScoringOptions scoring_options_from_json(const nlohmann::json& j);

Json to_json(const ProbeConfig& config);
/// Missing keys keep their defaults.
ProbeConfig probe_config_from_json(const nlohmann::json& j);

Json to_json(const TraitProfile& profile);
TraitProfile profile_from_json(const nlohmann::json& j);

Json to_json(const TrainingSummary& summary);

/// Full run record, including every completion.
Json to_json(const ProbeRun& run);
ProbeRun probe_run_from_json(const nlohmann::json& j);

/// Summary, sampling counters and raw per-trait scores.
Json to_json(const CorpusEvaluation& eval);

Json to_json(const AlterationReport& report);

/// item_id,repetition,trait,mode,score rows for questionnaire runs and
/// sample,trait,mode,score rows for unprompted runs. Holes leave score empty.
std::string probe_csv(const ProbeRun& run);

/// document,unit,<five trait keys> rows.
std::string corpus_csv(const CorpusEvaluation& eval);

/// trait,count,min,q1,median,q3,max,whisker_low,whisker_high,mean,stddev.
std::string box_summary_csv(const TraitDistribution& dist);

/// Five vertical box plots, y-axis fixed to [1, 5], dashed line at 3.0.
std::string box_plot_svg(const TraitDistribution& dist, const std::string& title);

/// Scores from a saved ProbeRun or corpus JSON, recognised by its "kind".
TraitDistribution load_distribution(const std::filesystem::path& path);

ProbeRun load_probe_run(const std::filesystem::path& path);

/// Writes the file; throws if it cannot.
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

/// One command invocation. Artifacts are paths relative to the output
/// directory.
struct RunManifest {
  std::string run_id;
  std::string command;
  std::vector<std::string> argv;
  Json config;
  Json backends;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> artifacts;
  int exit_code = 0;
};

Json to_json(const RunManifest& manifest);

/// Appends one line to <out>/manifests.jsonl. Throws if any artifact is
/// already listed by an earlier manifest.
void append_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

std::vector<nlohmann::json> read_manifests(const std::filesystem::path& out_dir);

}  // namespace psyprobe
