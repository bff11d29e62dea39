#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "psyprobe/corpus.hpp"
#include "psyprobe/errors.hpp"
#include "psyprobe/mock_nli.hpp"

using namespace psyprobe;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("psyprobe-corpus-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Rejects premises that mention "broken".
class PickyNli final : public NliBackend {
 public:
  std::string name() const override { return "picky"; }
  NliResult classify(std::string_view premise, std::string_view hypothesis) const override {
    if (premise.find("broken") != std::string_view::npos) throw BackendError("cannot score");
    return inner_.classify(premise, hypothesis);
  }

 private:
  LexiconNli inner_;
};

}  // namespace

TEST_CASE("presets") {
  CHECK(preset_fraction(CorpusPreset::Wikitext103) == 1.00);
  CHECK(preset_fraction(CorpusPreset::BookCorpus) == 0.10);
  CHECK(preset_fraction(CorpusPreset::EnglishWikipedia) == 0.02);
  CHECK(preset_fraction(CorpusPreset::WebTextTest) == 0.20);
  for (auto p : {CorpusPreset::Wikitext103, CorpusPreset::BookCorpus, CorpusPreset::EnglishWikipedia,
                 CorpusPreset::WebTextTest}) {
    CHECK(parse_preset(preset_name(p)) == p);
    CHECK(preset_plan(p, 3).unit == UnitKind::Sentence);
    CHECK(preset_plan(p, 3).seed == 3);
  }
  CHECK_FALSE(parse_preset("c4").has_value());
}

TEST_CASE("sampling plan validation") {
  SamplingPlan plan;
  CHECK_NOTHROW(plan.validate());
  for (double bad : {0.0, -0.1, 1.5, std::nan("")}) {
    plan.fraction = bad;
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  }
  plan.fraction = 1.0;
  plan.max_unit_chars = 0;
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
}

TEST_CASE("unit splitting") {
  SamplingPlan plan;
  const std::string doc = "First one here. Second one here.\n\n  \nA new paragraph.\nIt wraps lines.\n\nok";
  auto s = split_units(doc, plan);
  REQUIRE(s.size() == 4);
  CHECK(s[0] == "First one here.");
  CHECK(s[2] == "A new paragraph.");
  CHECK(s[3] == "It wraps lines.");
  plan.unit = UnitKind::Paragraph;
  auto p = split_units(doc, plan);
  REQUIRE(p.size() == 2);
  CHECK(p[1] == "A new paragraph. It wraps lines.");
  plan.max_unit_chars = 20;
  CHECK(split_units(doc, plan).size() == 4);
}

TEST_CASE("retention is deterministic and independent of the scan") {
  for (std::size_t i = 0; i < 100; ++i) CHECK(retain_document(5, i, 0.3) == retain_document(5, i, 0.3));
  CHECK(retain_document(5, 1, 1.0));
  const MemorySource src("mem", std::vector<std::string>(200, "One sentence here."));
  SamplingPlan plan{0.25, 9};
  SamplingStats a, b;
  const auto ua = sample_units(src, plan, &a);
  const auto ub = sample_units(src, plan, &b);
  CHECK(a == b);
  REQUIRE(ua.size() == ub.size());
  for (std::size_t i = 0; i < ua.size(); ++i) CHECK(ua[i].document == ub[i].document);
  plan.seed = 10;
  const auto uc = sample_units(src, plan);
  bool differs = uc.size() != ua.size();
  for (std::size_t i = 0; !differs && i < ua.size(); ++i) differs = ua[i].document != uc[i].document;
  CHECK(differs);
}

TEST_CASE("retention rate stays within three standard deviations") {
  const std::size_t n = 10000;
  const std::vector<std::string> docs(n, "Some text.");
  const MemorySource src("mem", docs);
  for (double f : {0.02, 0.10, 0.20, 0.5}) {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL}) {
      SamplingStats stats;
      sample_units(src, SamplingPlan{f, seed}, &stats);
      CHECK(stats.documents_seen == n);
      const double expected = f * n;
      const double sd = std::sqrt(n * f * (1 - f));
      CHECK(std::abs(static_cast<double>(stats.documents_retained) - expected) <= 3 * sd);
    }
  }
}

TEST_CASE("file sources") {
  const auto dir = scratch_dir("files");
  write_file(dir / "a.txt", "Alpha sentence one. Alpha sentence two.");
  write_file(dir / "b.jsonl",
             "{\"text\": \"Beta line.\"}\n\n{\"id\": 3}\nnot json\n{\"text\": \"Gamma line.\"}\n");
  write_file(dir / "c.txt", std::string("bad \xC3\x28 bytes"));
  write_file(dir / "ignored.md", "Not read.");
  const FileSource src(dir);
  std::vector<Document> docs;
  src.for_each([&](const Document& d) { docs.push_back(d); });
  REQUIRE(docs.size() == 6);
  CHECK(docs[0].text == "Alpha sentence one. Alpha sentence two.");
  CHECK(docs[1].text == "Beta line.");
  CHECK_FALSE(docs[2].text.has_value());
  CHECK_FALSE(docs[3].text.has_value());
  CHECK(docs[4].text == "Gamma line.");
  CHECK_FALSE(docs[5].text.has_value());
  for (std::size_t i = 0; i < docs.size(); ++i) CHECK(docs[i].index == i);

  SamplingStats stats;
  const auto units = sample_units(src, SamplingPlan{}, &stats);
  CHECK(stats.documents_seen == 6);
  CHECK(stats.documents_retained == 3);
  CHECK(stats.documents_unreadable == 3);
  CHECK(stats.units == 4);
  CHECK(units.size() == 4);

  CHECK_THROWS(FileSource(dir / "missing"));
  CHECK_THROWS(FileSource(dir / "ignored.md"));
  fs::remove_all(dir);
}

TEST_CASE("corpus evaluation accounts for every unit") {
  const MemorySource src("mem", {"I love a party. This is broken text. I am calm.", "A quiet night alone.",
                                 "Another broken one."});
  const PickyNli nli;
  const auto eval = evaluate_corpus(src, SamplingPlan{}, {}, nli, 2);
  CHECK(eval.sampling.units == 5);
  CHECK(eval.units_failed == 2);
  CHECK(eval.units_scored == 3);
  CHECK(eval.units_scored + eval.units_failed == eval.sampling.units);
  CHECK(eval.units.size() == 3);
  for (Trait t : kAllTraits) CHECK(eval.distribution.count(t) == 3);
  CHECK(eval.units[0].scores[Trait::Extraversion] > 3.0);
  CHECK(eval.units[2].scores[Trait::Extraversion] < 3.0);
  CHECK(eval.corpus_name == "mem");
  CHECK(eval.nli_name == "picky");

  const auto serial = evaluate_corpus(src, SamplingPlan{}, {}, nli, 1);
  for (Trait t : kAllTraits) CHECK(serial.distribution.scores[t] == eval.distribution.scores[t]);
}

TEST_CASE("unreachable NLI aborts corpus evaluation") {
  class Down final : public NliBackend {
   public:
    std::string name() const override { return "down"; }
    NliResult classify(std::string_view, std::string_view) const override {
      throw BackendUnreachable("no route");
    }
  };
  const MemorySource src("mem", {"Hello there friend."});
  CHECK_THROWS_AS(evaluate_corpus(src, SamplingPlan{}, {}, Down{}), BackendUnreachable);
}
