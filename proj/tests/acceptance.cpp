// Acceptance suite: one line per criterion. Criteria 8-10 need a real
// generator and NLI model behind the HTTP protocol and print SKIP unless
// PSYPROBE_GEN_URL and PSYPROBE_NLI_URL (and PSYPROBE_CORPUS for 9 and 10)
// are set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psyprobe/alteration.hpp"
#include "psyprobe/corpus.hpp"
#include "psyprobe/http_backends.hpp"
#include "psyprobe/mock_nli.hpp"
#include "psyprobe/persist.hpp"
#include "psyprobe/probe.hpp"
#include "psyprobe/scale.hpp"
#include "psyprobe/scoring.hpp"
#include "psyprobe/stats.hpp"
#include "psyprobe/text.hpp"

using namespace psyprobe;

namespace {

#include "frozen_items.inc"

const std::string kFixtures = PSYPROBE_FIXTURES;

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::Skip, std::move(d)}; }

std::string num(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

// Answers each pole hypothesis with a fixed result.
class PoleNli final : public NliBackend {
 public:
  PoleNli(NliResult pos, NliResult neg) : pos_(pos), neg_(neg) {}
  std::string name() const override { return "pole"; }
  NliResult classify(std::string_view, std::string_view hypothesis) const override {
    for (Trait t : kAllTraits) {
      if (hypothesis == build_hypothesis(label_pair(t, LabelVariant::Published).negative_label)) return neg_;
    }
    return pos_;
  }

 private:
  NliResult pos_, neg_;
};

Outcome score_map_exactness() {
  double worst = 0.0;
  worst = std::max(worst, std::abs(interpolate_unit_to_scale(0.0).value() - 1.0));
  worst = std::max(worst, std::abs(interpolate_unit_to_scale(0.5).value() - 3.0));
  worst = std::max(worst, std::abs(interpolate_unit_to_scale(1.0).value() - 5.0));
  if (worst > 1e-12) return fail("endpoint error " + std::to_string(worst));

  double sym = 0.0, anti = 0.0;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> logit(-8.0, 8.0);
  for (int i = 0; i < 200; ++i) {
    const double a = logit(rng), b = logit(rng);
    const auto ra = NliResult::from_logits(a, 0.0, 0.0);
    const auto rb = NliResult::from_logits(b, 0.0, 0.0);
    for (Trait t : kAllTraits) {
      sym = std::max(sym, std::abs(score_approach3("x", t, PoleNli(ra, ra)).value() - 3.0));
      const double s = score_approach3("x", t, PoleNli(ra, rb)).value();
      const double swapped = score_approach3("x", t, PoleNli(rb, ra)).value();
      anti = std::max(anti, std::abs(s - (6.0 - swapped)));
    }
  }
  if (sym > 1e-9 || anti > 1e-9) return fail("symmetry " + std::to_string(sym) + ", antisymmetry " + std::to_string(anti));
  return pass("endpoints exact; max symmetry error " + sci(sym) + ", antisymmetry " + sci(anti));
}

Outcome oracle_equivalence() {
  const auto nli = FixtureNli::load(kFixtures + "/scoring_oracle_nli.tsv");
  std::ifstream in(kFixtures + "/scoring_oracle_expected.tsv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  double worst = 0.0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string premise, trait, a[3];
    std::getline(ss, premise, '\t');
    std::getline(ss, trait, '\t');
    for (auto& x : a) std::getline(ss, x, '\t');
    ++rows;
    for (int k = 0; k < 3; ++k) {
      ScoringOptions o;
      o.approach = static_cast<ScoringApproach>(k + 1);
      const double got = score_trait(premise, *parse_trait(trait), nli, o).value();
      worst = std::max(worst, std::abs(got - std::stod(a[k])));
    }
  }
  if (rows != 30) return fail("expected 30 oracle rows, found " + std::to_string(rows));
  if (worst > 1e-9) return fail("max deviation " + std::to_string(worst));
  return pass("30 rows x 3 approaches, max deviation " + sci(worst));
}

Outcome mode_collapse() {
  // Single-sentence responses assembled from lexicon words and fillers.
  const std::vector<std::string> words{"party", "quiet",   "kind",  "rude", "tidy",  "messy", "calm", "anxious",
                                       "ideas", "routine", "table", "blue", "green", "the",   "and",  "people"};
  std::vector<std::string> responses;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    std::string s = "I";
    const int n = 3 + static_cast<int>(rng() % 6);
    for (int k = 0; k < n; ++k) s += " " + words[rng() % words.size()];
    responses.push_back(s + ".");
  }
  const FixtureGenerator gen({{"*", responses}}, FixtureGenerator::Selection::RoundRobin);
  const LexiconNli nli;
  const ZeroShotScorer scorer(nli);
  int compared = 0;
  for (int i = 0; i < 100; ++i) {
    const auto text = gen.generate("prompt", {}, std::nullopt);
    if (split_sentences(text).size() != 1) return fail("response is not a single sentence: " + text);
    const auto m1 = score_response_all(text, OutputMode::WholeResponse, scorer);
    const auto m2 = score_response_all(text, OutputMode::FirstSentence, scorer);
    const auto m3 = score_response_all(text, OutputMode::SentenceMedian, scorer);
    for (Trait t : kAllTraits) {
      if (!((*m1)[t].value() == (*m2)[t].value() && (*m2)[t].value() == (*m3)[t].value())) {
        return fail("modes differ on: " + text);
      }
      ++compared;
    }
  }
  return pass("100 responses, " + std::to_string(compared) + " trait scores identical in all three modes");
}

Outcome questionnaire_integrity() {
  const auto& q = load_questionnaire();
  if (q.size() != 50) return fail("questionnaire has " + std::to_string(q.size()) + " items");
  std::map<Trait, int> per_trait;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i].id != kItems[i].id || q[i].text != kItems[i].text || q[i].keyed_trait != *parse_trait(kItems[i].trait)) {
      return fail("item " + std::to_string(kItems[i].id) + " differs from the frozen text");
    }
    ++per_trait[q[i].keyed_trait];
  }
  for (Trait t : kAllTraits) {
    if (per_trait[t] != 10) return fail(std::string(trait_name(t)) + " has " + std::to_string(per_trait[t]) + " items");
  }
  const auto gen = make_demo_generator();
  const LexiconNli nli;
  ProbeConfig p;
  p.n_repetitions = 3;
  p.seed = 99;
  const RunContext ctx{"", [] { return std::string("fixed"); }};
  const auto reference = to_json(probe_model(gen, p, {}, nli, q, ctx)).dump();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 3; ++k) {
    auto shuffled = q;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (to_json(probe_model(gen, p, {}, nli, shuffled, ctx)).dump() != reference) {
      return fail("permuted item order changed the run");
    }
  }
  return pass("50 items, 10 per trait, verbatim; 3 permutations byte-identical");
}

Outcome filtering_and_binarization() {
  const auto data = load_annotated_dataset(kFixtures + "/annotated_50.csv").examples;
  if (data.size() != 50) return fail("fixture has " + std::to_string(data.size()) + " rows");
  for (Trait t : kAllTraits) {
    std::vector<std::string> positives;
    for (const auto& l : binarize_method2(data, t, 4.0)) {
      if (l.label) positives.push_back(l.text);
    }
    if (filter_method1(data, t) != positives) return fail("method 1 and method 2 differ on " + std::string(trait_name(t)));
  }
  std::ifstream in(kFixtures + "/annotated_50_counts.tsv");
  std::string line;
  std::getline(in, line);
  int sweeps = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    double threshold;
    std::size_t pos, neg;
    ss >> key >> threshold >> pos >> neg;
    const auto labelled = binarize_method2(data, *parse_trait(key), threshold);
    std::size_t p = 0;
    for (const auto& l : labelled) p += static_cast<std::size_t>(l.label);
    if (p != pos || labelled.size() - p != neg) return fail(key + " at " + num(threshold, 1) + " has wrong counts");
    ++sweeps;
  }
  if (sweeps != 25) return fail("expected 25 sweep rows, found " + std::to_string(sweeps));
  return pass("method 1 subset equals method 2 positives for all traits; 25 sweep counts match");
}

Outcome sampling() {
  const std::size_t n = 10000;
  const MemorySource src("synthetic", std::vector<std::string>(n, "A document."));
  std::string worst;
  double worst_z = 0.0;
  for (auto preset : {CorpusPreset::Wikitext103, CorpusPreset::BookCorpus, CorpusPreset::EnglishWikipedia,
                      CorpusPreset::WebTextTest}) {
    const auto plan = preset_plan(preset, 31337);
    SamplingStats a, b;
    const auto ua = sample_units(src, plan, &a);
    const auto ub = sample_units(src, plan, &b);
    if (!(a == b) || ua.size() != ub.size()) return fail("retained set not reproducible");
    for (std::size_t i = 0; i < ua.size(); ++i) {
      if (ua[i].document != ub[i].document) return fail("retained set not reproducible");
    }
    const double f = plan.fraction;
    const double sd = std::sqrt(n * f * (1 - f));
    const double dev = std::abs(static_cast<double>(a.documents_retained) - n * f);
    const double z = sd > 0 ? dev / sd : dev;
    if (z > worst_z) {
      worst_z = z;
      worst = std::string(preset_name(preset));
    }
    if (dev > 3 * sd) return fail(std::string(preset_name(preset)) + " retained " + std::to_string(a.documents_retained));
  }
  return pass("4 presets reproducible; largest deviation " + num(worst_z, 2) + " sigma" +
              (worst.empty() ? "" : " (" + worst + ")"));
}

Outcome directional_alteration() {
  const auto neutral = std::make_shared<FixtureGenerator>(FixtureGenerator::constant("The train left the station at noon."));
  const auto outgoing = std::make_shared<FixtureGenerator>(FixtureGenerator::constant(
      "I love parties and talk to people at every party with my friends."));
  FixtureTrainableBackend backend(neutral, outgoing);
  const LexiconNli nli;
  AlterationInputs in;
  in.nli = &nli;
  in.probe.n_repetitions = 5;
  in.probe.seed = 8;
  const auto data = load_annotated_dataset(kFixtures + "/annotated_50.csv").examples;
  const auto report = run_method1(backend, data, Trait::Extraversion, in);
  const auto delta = report.median_delta(0);
  if (!delta[Trait::Extraversion] || *delta[Trait::Extraversion] < 0.5) return fail("extraversion did not rise by 0.5");
  for (Trait t : kAllTraits) {
    if (t == Trait::Extraversion) continue;
    const auto& after = report.after[0].run.profile[t];
    if (!after.median || *after.median != 3.0 || !report.before[t].median || *report.before[t].median != 3.0) {
      return fail(std::string(trait_name(t)) + " moved away from 3.0");
    }
  }
  return pass("extraversion median " + num(*report.before[Trait::Extraversion].median, 2) + " -> " +
              num(*report.after[0].run.profile[Trait::Extraversion].median, 2) + ", other traits at 3.00");
}

struct RealBackends {
  std::unique_ptr<HttpGenerationBackend> gen;
  std::unique_ptr<HttpNliBackend> nli;
};

std::optional<RealBackends> real_backends() {
  const auto gen_url = env("PSYPROBE_GEN_URL");
  const auto nli_url = env("PSYPROBE_NLI_URL");
  if (!gen_url || !nli_url) return std::nullopt;
  RealBackends b;
  b.gen = std::make_unique<HttpGenerationBackend>(
      HttpEndpoint{*gen_url, env("PSYPROBE_GEN_MODEL").value_or("gpt2"), "PSYPROBE_GEN_API_KEY"});
  b.nli = std::make_unique<HttpNliBackend>(
      HttpEndpoint{*nli_url, env("PSYPROBE_NLI_MODEL").value_or("valhalla/distilbart-mnli-12-1"), "PSYPROBE_NLI_API_KEY"},
      4096);
  return b;
}

ProbeConfig real_probe_config() {
  ProbeConfig p;
  p.n_repetitions = std::stoi(env("PSYPROBE_N").value_or("20"));
  p.mode = OutputMode::FirstSentence;
  p.seed = 20;
  p.workers = 4;
  return p;
}

Outcome table4_proximity(const std::optional<RealBackends>& real) {
  if (!real) return skip("set PSYPROBE_GEN_URL and PSYPROBE_NLI_URL to run against real models");
  const TraitMap<double> expected = [] {
    TraitMap<double> m(0.0);
    m[Trait::Agreeableness] = 3.41;
    m[Trait::Conscientiousness] = 3.18;
    m[Trait::Extraversion] = 3.07;
    m[Trait::EmotionalStability] = 3.15;
    m[Trait::Openness] = 2.97;
    return m;
  }();
  const auto run = probe_model(*real->gen, real_probe_config(), {}, *real->nli);
  std::string detail;
  bool ok = true;
  for (Trait t : kAllTraits) {
    const auto& s = run.profile[t];
    if (!s.median) return fail(std::string(trait_name(t)) + " has no valid scores");
    const double d = *s.median - expected[t];
    ok = ok && std::abs(d) <= 0.6;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(trait_key(t)) + " " + num(*s.median, 2);
  }
  return ok ? pass(detail) : fail(detail + " (tolerance 0.6)");
}

std::vector<std::string> corpus_units(std::size_t* total) {
  std::vector<std::string> units;
  SamplingPlan plan;
  plan.seed = 5;
  for (auto& u : sample_units(FileSource(*env("PSYPROBE_CORPUS")), plan)) units.push_back(std::move(u.text));
  *total = units.size();
  return units;
}

Outcome corpus_skew(const std::optional<RealBackends>& real) {
  if (!real || !env("PSYPROBE_CORPUS")) return skip("set PSYPROBE_NLI_URL, PSYPROBE_GEN_URL and PSYPROBE_CORPUS");
  std::size_t total = 0;
  auto units = corpus_units(&total);
  if (total < 5000) return fail("corpus has " + std::to_string(total) + " units; at least 5000 are needed");
  const MemorySource src("corpus", units);
  const auto eval = evaluate_corpus(src, SamplingPlan{}, {}, *real->nli, 4);
  const auto prof = profile_of(eval.distribution);
  std::string detail;
  bool ok = true;
  for (Trait t : kAllTraits) {
    if (!prof[t].median) return fail(std::string(trait_name(t)) + " has no scores");
    ok = ok && *prof[t].median > 3.0;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(trait_key(t)) + " " + num(*prof[t].median, 2);
  }
  return ok ? pass(detail) : fail(detail);
}

Outcome unprompted_similarity(const std::optional<RealBackends>& real) {
  if (!real || !env("PSYPROBE_CORPUS")) return skip("set PSYPROBE_NLI_URL, PSYPROBE_GEN_URL and PSYPROBE_CORPUS");
  const int n = std::stoi(env("PSYPROBE_UNPROMPTED_N").value_or("1000"));
  if (n < 1000) return fail("needs at least 1000 unprompted samples");
  auto probe = real_probe_config();
  const auto unprompted = probe_unprompted(*real->gen, probe, {}, *real->nli, n);
  const auto prompted = probe_model(*real->gen, probe, {}, *real->nli);

  std::size_t total = 0;
  auto units = corpus_units(&total);
  if (total < static_cast<std::size_t>(n)) return fail("corpus has fewer units than samples");
  std::mt19937_64 rng(11);
  std::shuffle(units.begin(), units.end(), rng);
  units.resize(static_cast<std::size_t>(n));
  const MemorySource src("corpus", units);
  const auto corpus = evaluate_corpus(src, SamplingPlan{}, {}, *real->nli, 4).distribution;

  const auto ku = compare_distributions(distribution_of(unprompted), corpus);
  const auto kp = compare_distributions(distribution_of(prompted), corpus);
  double mu = 0.0, mp = 0.0;
  std::string detail;
  for (Trait t : kAllTraits) {
    mu += ku[t].ks / kTraitCount;
    mp += kp[t].ks / kTraitCount;
    detail += std::string(trait_key(t)) + " KS unprompted " + num(ku[t].ks) + " prompted " + num(kp[t].ks) + "; ";
  }
  detail += "mean " + num(mu) + " vs " + num(mp);
  return mp > mu ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  const auto real = real_backends();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"score-map exactness", score_map_exactness},
      {"oracle equivalence", oracle_equivalence},
      {"mode collapse", mode_collapse},
      {"questionnaire integrity", questionnaire_integrity},
      {"filtering and binarization", filtering_and_binarization},
      {"sampling determinism and unbiasedness", sampling},
      {"directional alteration with mocks", directional_alteration},
      {"real-model questionnaire medians", [&] { return table4_proximity(real); }},
      {"corpus skew above neutral", [&] { return corpus_skew(real); }},
      {"unprompted vs prompted corpus similarity", [&] { return unprompted_similarity(real); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    if (o.verdict == Verdict::Fail) ++failures;
    std::cout << tag << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failures ? 1 : 0;
}
