#include "psyprobe/mock_nli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psyprobe/errors.hpp"
#include "psyprobe/text.hpp"

namespace psyprobe {

const Lexicon& default_lexicon() {
  static const Lexicon lexicon = [] {
    Lexicon l;
    l[Trait::Agreeableness] = {
        {"kind", "kindness", "sympathize", "sympathy", "helpful", "caring", "warm", "trust", "considerate",
         "gentle", "generous", "compassion"},
        {"insult", "rude", "cruel", "selfish", "harsh", "hostile", "mean", "spiteful"}};
    l[Trait::Conscientiousness] = {
        {"order", "organized", "schedule", "prepared", "plan", "planned", "detail", "details", "tidy",
         "diligent", "duty", "duties", "chores"},
        {"mess", "messy", "careless", "forget", "lazy", "sloppy", "shirk", "late"}};
    l[Trait::Extraversion] = {
        {"party", "parties", "people", "talk", "meeting", "everyone", "social", "outgoing", "friends",
         "conversations", "crowd", "attention"},
        {"quiet", "alone", "shy", "reserved", "background", "silent", "solitude", "withdrawn"}};
    l[Trait::EmotionalStability] = {
        {"calm", "relaxed", "steady", "composed", "peaceful", "content", "secure"},
        {"stressed", "worry", "worried", "anxious", "upset", "irritated", "moody", "blue", "nervous"}};
    l[Trait::Openness] = {
        {"ideas", "imagination", "creative", "curious", "abstract", "art", "reflect", "reflecting",
         "inspiration", "vocabulary"},
        {"conventional", "routine", "dull", "unimaginative", "narrow", "traditional"}};
    return l;
  }();
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon " + path.string());
  const auto doc = nlohmann::json::parse(in);
  Lexicon lexicon;
  for (const auto& [key, poles] : doc.items()) {
    auto trait = parse_trait(key);
    if (!trait) throw std::runtime_error("lexicon: unknown trait '" + key + "'");
    lexicon[*trait].positive = poles.value("positive", std::vector<std::string>{});
    lexicon[*trait].negative = poles.value("negative", std::vector<std::string>{});
    for (auto* list : {&lexicon[*trait].positive, &lexicon[*trait].negative}) {
      for (auto& w : *list) w = to_lower_ascii(w);
    }
  }
  return lexicon;
}

LexiconNli::LexiconNli(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

int LexiconNli::pole_count(std::string_view premise, Trait trait, bool positive_pole) const {
  const auto& words = positive_pole ? lexicon_[trait].positive : lexicon_[trait].negative;
  int count = 0;
  for (const auto& token : word_tokens(premise)) {
    if (std::find(words.begin(), words.end(), token) != words.end()) ++count;
  }
  return count;
}

NliResult LexiconNli::classify(std::string_view premise, std::string_view hypothesis) const {
  constexpr std::string_view prefix = "This response is characterized by ";
  std::string_view label = hypothesis;
  if (label.starts_with(prefix)) label.remove_prefix(prefix.size());
  if (label.ends_with('.')) label.remove_suffix(1);

  for (Trait t : kAllTraits) {
    for (auto variant : {LabelVariant::Published, LabelVariant::Corrected}) {
      const auto& pair = label_pair(t, variant);
      if (label == pair.positive_label) {
        return NliResult::from_logits(pole_count(premise, t, true), 0.0, 0.0);
      }
      if (label == pair.negative_label) {
        return NliResult::from_logits(pole_count(premise, t, false), 0.0, 0.0);
      }
    }
  }
  return NliResult::from_logits(0.0, 0.0, 0.0);
}

FixtureNli::FixtureNli(std::vector<NliFixtureRow> rows) {
  rows_.reserve(rows.size());
  for (auto& row : rows) {
    Compiled c{std::move(row), std::nullopt};
    if (c.row.premise_pattern != "*") c.pattern.emplace(c.row.premise_pattern);
    rows_.push_back(std::move(c));
  }
}

FixtureNli FixtureNli::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open NLI fixture " + path.string());
  std::vector<NliFixtureRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#' || line.starts_with("premise_pattern")) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 6) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 6 columns");
    }
    NliFixtureRow row;
    row.premise_pattern = cols[0];
    row.hypothesis = cols[1];
    if (cols[2] != "-") row.entailment_logit = std::stod(cols[2]);
    row.entailment = std::stod(cols[3]);
    row.contradiction = std::stod(cols[4]);
    row.neutral = std::stod(cols[5]);
    rows.push_back(std::move(row));
  }
  return FixtureNli(std::move(rows));
}

NliResult FixtureNli::classify(std::string_view premise, std::string_view hypothesis) const {
  for (const auto& c : rows_) {
    if (c.row.hypothesis != hypothesis) continue;
    if (c.pattern && !std::regex_search(premise.begin(), premise.end(), *c.pattern)) continue;
    return NliResult{c.row.entailment, c.row.contradiction, c.row.neutral, c.row.entailment_logit};
  }
  throw BackendError("fixture has no row for hypothesis \"" + std::string(hypothesis) + "\"");
}

}  // namespace psyprobe
