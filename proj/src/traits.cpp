#include "psyprobe/traits.hpp"

#include <cctype>

namespace psyprobe {

std::string_view trait_name(Trait t) noexcept {
  switch (t) {
    case Trait::Agreeableness: return "Agreeableness";
    case Trait::Conscientiousness: return "Conscientiousness";
    case Trait::Extraversion: return "Extraversion";
    case Trait::EmotionalStability: return "Emotional stability";
    case Trait::Openness: return "Openness";
  }
  return "?";
}

std::string_view trait_key(Trait t) noexcept {
  switch (t) {
    case Trait::Agreeableness: return "agreeableness";
    case Trait::Conscientiousness: return "conscientiousness";
    case Trait::Extraversion: return "extraversion";
    case Trait::EmotionalStability: return "emotional_stability";
    case Trait::Openness: return "openness";
  }
  return "?";
}

std::optional<Trait> parse_trait(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '-') c = '_';
    norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (Trait t : kAllTraits) {
    if (norm == trait_key(t)) return t;
  }
  if (norm == "a") return Trait::Agreeableness;
  if (norm == "c") return Trait::Conscientiousness;
  if (norm == "e") return Trait::Extraversion;
  if (norm == "es" || norm == "emotionalstability") return Trait::EmotionalStability;
  if (norm == "o") return Trait::Openness;
  return std::nullopt;
}

const TraitLabelPair& label_pair(Trait t, LabelVariant variant) {
  static const std::array<TraitLabelPair, kTraitCount> published{{
      {Trait::Agreeableness, "agreeableness", "antoganism"},
      {Trait::Conscientiousness, "conscientiousness", "disinhibition"},
      {Trait::Extraversion, "extraversion", "introversion"},
      {Trait::EmotionalStability, "emotional stability", "neuroticism"},
      {Trait::Openness, "openness", "closeness"},
  }};
  static const TraitLabelPair corrected_agreeableness{Trait::Agreeableness, "agreeableness",
                                                      "antagonism"};
  if (variant == LabelVariant::Corrected && t == Trait::Agreeableness) {
    return corrected_agreeableness;
  }
  return published[index_of(t)];
}

std::string_view single_label(Trait t) noexcept {
  switch (t) {
    case Trait::Agreeableness: return "agreeableness";
    case Trait::Conscientiousness: return "conscientiousness";
    case Trait::Extraversion: return "extraversion";
    case Trait::EmotionalStability: return "neuroticism";
    case Trait::Openness: return "openness";
  }
  return "?";
}

}  // namespace psyprobe
