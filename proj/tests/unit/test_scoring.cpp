#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "psyprobe/errors.hpp"
#include "psyprobe/mock_nli.hpp"
#include "psyprobe/scoring.hpp"

using namespace psyprobe;

namespace {

const std::string kFixtures = PSYPROBE_FIXTURES;

struct OracleRow {
  std::string premise;
  Trait trait;
  double approach[3];
  std::size_t fallbacks;
};

std::vector<OracleRow> load_oracle() {
  std::ifstream in(kFixtures + "/scoring_oracle_expected.tsv");
  std::string line;
  std::getline(in, line);
  std::vector<OracleRow> rows;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    OracleRow r;
    std::string trait, a1, a2, a3, fb;
    std::getline(ss, r.premise, '\t');
    std::getline(ss, trait, '\t');
    std::getline(ss, a1, '\t');
    std::getline(ss, a2, '\t');
    std::getline(ss, a3, '\t');
    std::getline(ss, fb, '\t');
    r.trait = *parse_trait(trait);
    r.approach[0] = std::stod(a1);
    r.approach[1] = std::stod(a2);
    r.approach[2] = std::stod(a3);
    r.fallbacks = std::stoul(fb);
    rows.push_back(r);
  }
  return rows;
}

// NLI that answers every hypothesis with the result for its pole.
class PoleNli final : public NliBackend {
 public:
  PoleNli(NliResult pos, NliResult neg) : pos_(pos), neg_(neg) {}
  std::string name() const override { return "pole"; }
  NliResult classify(std::string_view, std::string_view hypothesis) const override {
    for (Trait t : kAllTraits) {
      for (auto v : {LabelVariant::Published, LabelVariant::Corrected}) {
        if (hypothesis == build_hypothesis(label_pair(t, v).negative_label)) return neg_;
      }
    }
    return pos_;
  }

 private:
  NliResult pos_, neg_;
};

NliResult probs(double e, double c, double n) { return NliResult{e, c, n, std::nullopt}; }

}  // namespace

TEST_CASE("hypothesis template") {
  CHECK(build_hypothesis("extraversion") == "This response is characterized by extraversion.");
  CHECK_THROWS_AS(build_hypothesis(""), std::invalid_argument);
  CHECK_THROWS_AS(build_hypothesis("  "), std::invalid_argument);
}

TEST_CASE("NLI results from logits") {
  const auto r = NliResult::from_logits(2.0, 0.0, 0.0);
  CHECK(r.entailment == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 2.0)));
  CHECK(r.entailment_logit == 2.0);
  CHECK_NOTHROW(r.validate());
  CHECK_THROWS_AS(probs(0.5, 0.6, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(probs(-0.1, 0.6, 0.5).validate(), std::invalid_argument);
}

TEST_CASE("approach 1 uses one label and reflects neuroticism") {
  const PoleNli nli(probs(0.9, 0.1, 0.0), probs(0.9, 0.1, 0.0));
  ScoringOptions o;
  o.approach = ScoringApproach::Approach1;
  CHECK(score_trait("x", Trait::Extraversion, nli, o).value() == doctest::Approx(4.6));
  // p(neuroticism) = 0.9 -> 4.6, reflected to 1.4
  CHECK(score_trait("x", Trait::EmotionalStability, nli, o).value() == doctest::Approx(1.4));
  const PoleNli zero(probs(0.0, 0.0, 1.0), probs(0.0, 0.0, 1.0));
  CHECK(score_trait("x", Trait::Openness, zero, o).value() == doctest::Approx(3.0));
}

TEST_CASE("approach 2 softmaxes the two single-label probabilities") {
  ScoringOptions o;
  o.approach = ScoringApproach::Approach2;
  const PoleNli nli(probs(1.0, 0.0, 0.0), probs(0.0, 1.0, 0.0));
  const double expected = 1.0 + 4.0 * std::exp(1.0) / (std::exp(1.0) + 1.0);
  CHECK(score_trait("x", Trait::Agreeableness, nli, o).value() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(3.9242343145));
  const PoleNli swapped(probs(0.0, 1.0, 0.0), probs(1.0, 0.0, 0.0));
  CHECK(score_trait("x", Trait::Agreeableness, swapped, o).value() == doctest::Approx(6.0 - expected));
}

TEST_CASE("approach 3 softmaxes entailment logits") {
  const PoleNli nli(NliResult::from_logits(2.0, 0.0, 0.0), NliResult::from_logits(0.0, 0.0, 0.0));
  const double s = score_trait("x", Trait::Extraversion, nli).value();
  CHECK(s == doctest::Approx(4.5231883119115293).epsilon(1e-14));
  const PoleNli swapped(NliResult::from_logits(0.0, 0.0, 0.0), NliResult::from_logits(2.0, 0.0, 0.0));
  CHECK(score_trait("x", Trait::Extraversion, swapped).value() == doctest::Approx(1.4768116880884707).epsilon(1e-14));
  const PoleNli equal(NliResult::from_logits(1.3, 0.2, 0.0), NliResult::from_logits(1.3, -4.0, 2.0));
  CHECK(score_trait("x", Trait::Openness, equal).value() == 3.0);
}

TEST_CASE("approach 3 falls back to log probabilities and counts it") {
  const PoleNli nli(probs(0.6, 0.2, 0.2), probs(0.2, 0.4, 0.4));
  ScoringDiagnostics d;
  const double s = score_trait("x", Trait::Extraversion, nli, {}, &d).value();
  CHECK(s == doctest::Approx(1.0 + 4.0 * 0.6 / 0.8));
  CHECK(d.logit_fallbacks == 2);

  ScoringOptions lp;
  lp.pole_source = PoleScoreSource::EntailmentLogProbabilities;
  const PoleNli with_logits(NliResult::from_logits(2.0, 0.0, 0.0), NliResult::from_logits(0.0, 0.0, 0.0));
  ScoringDiagnostics d2;
  const auto pe = with_logits.classify("x", "a").entailment;
  const auto ne = with_logits.classify("x", build_hypothesis("introversion")).entailment;
  CHECK(score_trait("x", Trait::Extraversion, with_logits, lp, &d2).value() ==
        doctest::Approx(1.0 + 4.0 * pe / (pe + ne)));
  CHECK(d2.logit_fallbacks == 0);
}

TEST_CASE("two-way softmax is stable and symmetric") {
  CHECK(two_way_softmax(1000.0, 0.0) == 1.0);
  CHECK(two_way_softmax(0.0, 1000.0) == 0.0);
  CHECK(two_way_softmax(INFINITY, INFINITY) == 0.5);
  CHECK(two_way_softmax(NAN, 1.0) == 0.5);
  for (double d : {-7.0, -0.3, 0.0, 0.01, 5.5}) {
    CHECK(two_way_softmax(d, 0.0) + two_way_softmax(0.0, d) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("frozen oracle: all approaches to 1e-9") {
  const auto nli = FixtureNli::load(kFixtures + "/scoring_oracle_nli.tsv");
  const auto rows = load_oracle();
  REQUIRE(rows.size() == 30);
  for (const auto& r : rows) {
    for (int a = 1; a <= 3; ++a) {
      ScoringOptions o;
      o.approach = static_cast<ScoringApproach>(a);
      ScoringDiagnostics d;
      const double got = score_trait(r.premise, r.trait, nli, o, &d).value();
      INFO(r.premise << " approach " << a);
      CHECK(std::abs(got - r.approach[a - 1]) <= 1e-9);
      if (a == 3) CHECK(d.logit_fallbacks == r.fallbacks);
    }
  }
}

TEST_CASE("score_all_traits batches and agrees with per-trait scoring") {
  const LexiconNli nli;
  const std::string premise = "I love a party with people but I worry and feel anxious.";
  for (int a = 1; a <= 3; ++a) {
    ScoringOptions o;
    o.approach = static_cast<ScoringApproach>(a);
    const auto all = score_all_traits(premise, nli, o);
    for (Trait t : kAllTraits) CHECK(all[t].value() == score_trait(premise, t, nli, o).value());
  }
  const auto all = score_all_traits(premise, nli);
  CHECK(all[Trait::Extraversion].value() > 3.0);
  CHECK(all[Trait::EmotionalStability].value() < 3.0);
  CHECK(all[Trait::Openness].value() == 3.0);
}

TEST_CASE("scoring errors") {
  const LexiconNli nli;
  CHECK_THROWS_AS(score_trait("", Trait::Openness, nli), std::invalid_argument);
  CHECK_THROWS_AS(score_trait(" \n", Trait::Openness, nli), std::invalid_argument);
  const FixtureNli empty({});
  CHECK_THROWS_AS(score_trait("text", Trait::Openness, empty), ScoringError);
  try {
    score_trait("some premise", Trait::Openness, empty);
  } catch (const ScoringError& e) {
    CHECK(std::string(e.what()).find("some premise") != std::string::npos);
  }

  class Down final : public NliBackend {
   public:
    std::string name() const override { return "down"; }
    NliResult classify(std::string_view, std::string_view) const override { throw BackendUnreachable("refused"); }
  };
  CHECK_THROWS_AS(score_trait("text", Trait::Openness, Down{}), BackendUnreachable);
}

TEST_CASE("long premises are truncated and counted") {
  class Limited final : public NliBackend {
   public:
    std::string name() const override { return "limited"; }
    NliResult classify(std::string_view premise, std::string_view) const override {
      if (premise.size() > 8) throw BackendError("too long");
      return NliResult::from_logits(0, 0, 0);
    }
    std::size_t max_premise_bytes() const override { return 8; }
  };
  ScoringDiagnostics d;
  CHECK(score_trait("a premise well over eight bytes", Trait::Openness, Limited{}, {}, &d).value() == 3.0);
  CHECK(d.truncated_premises == 1);
}

TEST_CASE("lexicon NLI counts whole-word keywords") {
  const LexiconNli nli;
  CHECK(nli.pole_count("Parties, PEOPLE and a party!", Trait::Extraversion, true) == 3);
  CHECK(nli.pole_count("partying partygoers", Trait::Extraversion, true) == 0);
  CHECK(nli.pole_count("quiet and alone", Trait::Extraversion, false) == 2);
  const auto r = nli.classify("party people", build_hypothesis("extraversion"));
  CHECK(r.entailment_logit == 2.0);
  CHECK(nli.classify("party", "Something else.").entailment_logit == 0.0);
  // Both spellings of the agreeableness negative pole are recognised.
  CHECK(nli.classify("rude", build_hypothesis("antoganism")).entailment_logit == 1.0);
  CHECK(nli.classify("rude", build_hypothesis("antagonism")).entailment_logit == 1.0);
}

TEST_CASE("scorer is safe to share across threads") {
  const LexiconNli nli;
  const ZeroShotScorer scorer(nli);
  std::vector<double> out(64);
  std::vector<std::jthread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      for (int i = w; i < 64; i += 4) out[i] = scorer.score("I talk to everyone at parties", Trait::Extraversion).value();
    });
  }
  threads.clear();
  for (double v : out) CHECK(v == out[0]);
}
