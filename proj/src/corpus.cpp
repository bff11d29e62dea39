#include "psyprobe/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "psyprobe/errors.hpp"
#include "psyprobe/parallel.hpp"
#include "psyprobe/seeding.hpp"
#include "psyprobe/text.hpp"

namespace psyprobe {

namespace {

std::size_t codepoints(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Paragraphs separated by lines that hold only whitespace.
std::vector<std::string> paragraphs(std::string_view document) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto p = normalize_whitespace(current);
    if (!p.empty()) out.push_back(std::move(p));
    current.clear();
  };
  std::size_t start = 0;
  while (start <= document.size()) {
    auto end = document.find('\n', start);
    if (end == std::string_view::npos) end = document.size();
    const auto line = document.substr(start, end - start);
    if (trim(line).empty()) {
      flush();
    } else {
      current.append(line);
      current.push_back('\n');
    }
    start = end + 1;
  }
  flush();
  return out;
}

constexpr std::uint64_t kSamplingStream = hash_text("corpus-sampling");

}  // namespace

std::optional<UnitKind> parse_unit_kind(std::string_view text) {
  if (text == "sentence") return UnitKind::Sentence;
  if (text == "paragraph") return UnitKind::Paragraph;
  return std::nullopt;
}

std::string_view unit_kind_name(UnitKind kind) noexcept {
  return kind == UnitKind::Sentence ? "sentence" : "paragraph";
}

void SamplingPlan::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  if (max_unit_chars == 0) throw std::invalid_argument("max_unit_chars must be positive");
}

std::optional<CorpusPreset> parse_preset(std::string_view text) {
  if (text == "wikitext103") return CorpusPreset::Wikitext103;
  if (text == "bookcorpus") return CorpusPreset::BookCorpus;
  if (text == "enwiki") return CorpusPreset::EnglishWikipedia;
  if (text == "webtext-test") return CorpusPreset::WebTextTest;
  return std::nullopt;
}

std::string_view preset_name(CorpusPreset preset) noexcept {
  switch (preset) {
    case CorpusPreset::Wikitext103: return "wikitext103";
    case CorpusPreset::BookCorpus: return "bookcorpus";
    case CorpusPreset::EnglishWikipedia: return "enwiki";
    case CorpusPreset::WebTextTest: return "webtext-test";
  }
  return "?";
}

double preset_fraction(CorpusPreset preset) noexcept {
  switch (preset) {
    case CorpusPreset::Wikitext103: return 1.00;
    case CorpusPreset::BookCorpus: return 0.10;
    case CorpusPreset::EnglishWikipedia: return 0.02;
    case CorpusPreset::WebTextTest: return 0.20;
  }
  return 1.0;
}

SamplingPlan preset_plan(CorpusPreset preset, std::uint64_t seed) {
  SamplingPlan plan;
  plan.fraction = preset_fraction(preset);
  plan.seed = seed;
  plan.unit = UnitKind::Sentence;
  return plan;
}

void MemorySource::for_each(const std::function<void(const Document&)>& fn) const {
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    Document d{i, std::nullopt, name_ + "#" + std::to_string(i)};
    if (is_valid_utf8(documents_[i])) d.text = documents_[i];
    fn(d);
  }
}

FileSource::FileSource(std::filesystem::path root) : root_(std::move(root)) {
  namespace fs = std::filesystem;
  if (!fs::exists(root_)) throw std::runtime_error("corpus path does not exist: " + root_.string());
  auto wanted = [](const fs::path& p) { return p.extension() == ".txt" || p.extension() == ".jsonl"; };
  if (fs::is_directory(root_)) {
    for (const auto& entry : fs::recursive_directory_iterator(root_)) {
      if (entry.is_regular_file() && wanted(entry.path())) files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
  } else {
    if (!wanted(root_)) throw std::runtime_error("corpus file must be .txt or .jsonl: " + root_.string());
    files_.push_back(root_);
  }
}

std::string FileSource::name() const {
  auto stem = root_.filename().string();
  if (stem.empty()) stem = root_.parent_path().filename().string();
  return stem;
}

void FileSource::for_each(const std::function<void(const Document&)>& fn) const {
  std::size_t index = 0;
  for (const auto& path : files_) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      fn(Document{index++, std::nullopt, path.string()});
      continue;
    }
    if (path.extension() == ".txt") {
      std::ostringstream buf;
      buf << in.rdbuf();
      Document d{index++, std::nullopt, path.string()};
      if (auto s = buf.str(); is_valid_utf8(s)) d.text = std::move(s);
      fn(d);
      continue;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      Document d{index++, std::nullopt, path.string() + ":" + std::to_string(line_no)};
      if (is_valid_utf8(line)) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("text") && j["text"].is_string()) {
          d.text = j["text"].get<std::string>();
        }
      }
      fn(d);
    }
  }
}

bool retain_document(std::uint64_t seed, std::size_t document_index, double fraction) noexcept {
  if (fraction >= 1.0) return true;
  return unit_interval(derive_seed(seed, {kSamplingStream, document_index})) < fraction;
}

std::vector<std::string> split_units(std::string_view document, const SamplingPlan& plan) {
  std::vector<std::string> units;
  for (auto& para : paragraphs(document)) {
    if (plan.unit == UnitKind::Paragraph && codepoints(para) <= plan.max_unit_chars) {
      units.push_back(std::move(para));
      continue;
    }
    for (auto& s : split_sentences(para)) units.push_back(std::move(s));
  }
  std::erase_if(units, [](const std::string& u) { return codepoints(u) < 3; });
  return units;
}

SamplingStats ingest_and_sample(const CorpusSource& source, const SamplingPlan& plan,
                                const std::function<void(CorpusUnit&&)>& sink) {
  plan.validate();
  SamplingStats stats;
  source.for_each([&](const Document& doc) {
    ++stats.documents_seen;
    if (!retain_document(plan.seed, doc.index, plan.fraction)) return;
    if (!doc.text) {
      ++stats.documents_unreadable;
      return;
    }
    ++stats.documents_retained;
    auto units = split_units(*doc.text, plan);
    for (std::size_t u = 0; u < units.size(); ++u) {
      ++stats.units;
      sink(CorpusUnit{doc.index, u, std::move(units[u])});
    }
  });
  return stats;
}

std::vector<CorpusUnit> sample_units(const CorpusSource& source, const SamplingPlan& plan, SamplingStats* stats) {
  std::vector<CorpusUnit> out;
  auto s = ingest_and_sample(source, plan, [&](CorpusUnit&& u) { out.push_back(std::move(u)); });
  if (stats) *stats = s;
  return out;
}

CorpusEvaluation evaluate_corpus(const CorpusSource& source, const SamplingPlan& plan,
                                 const ScoringOptions& scoring, const NliBackend& nli, int workers) {
  CorpusEvaluation eval;
  eval.corpus_name = source.name();
  eval.plan = plan;
  eval.scoring = scoring;
  eval.nli_name = nli.name();

  const ZeroShotScorer scorer(nli, scoring);
  const int threads = nli.thread_safe() ? workers : 1;
  constexpr std::size_t kChunk = 512;
  std::vector<CorpusUnit> chunk;

  auto flush = [&] {
    std::vector<std::optional<TraitMap<TraitScore>>> results(chunk.size());
    parallel_for(chunk.size(), threads, [&](std::size_t i) {
      try {
        results[i] = scorer.score_all(chunk[i].text);
      } catch (const ScoringError&) {
        // counted below
      }
    });
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (!results[i]) {
        ++eval.units_failed;
        continue;
      }
      UnitScores u{chunk[i].document, chunk[i].unit, std::move(chunk[i].text), {}};
      for (Trait t : kAllTraits) {
        u.scores[t] = (*results[i])[t].value();
        eval.distribution.add(t, u.scores[t]);
      }
      ++eval.units_scored;
      eval.units.push_back(std::move(u));
    }
    chunk.clear();
  };

  eval.sampling = ingest_and_sample(source, plan, [&](CorpusUnit&& unit) {
    chunk.push_back(std::move(unit));
    if (chunk.size() == kChunk) flush();
  });
  flush();
  return eval;
}

}  // namespace psyprobe
