#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace psyprobe {

// Big Five factors. Emotional stability is the reversed pole of neuroticism
// and takes its place everywhere.
enum class Trait { Agreeableness, Conscientiousness, Extraversion, EmotionalStability, Openness };

inline constexpr std::size_t kTraitCount = 5;

inline constexpr std::array<Trait, kTraitCount> kAllTraits{
    Trait::Agreeableness, Trait::Conscientiousness, Trait::Extraversion,
    Trait::EmotionalStability, Trait::Openness};

constexpr std::size_t index_of(Trait t) noexcept { return static_cast<std::size_t>(t); }

/// Human-readable name, e.g. "Emotional stability".
std::string_view trait_name(Trait t) noexcept;

/// Machine key used in files and flags, e.g. "emotional_stability".
std::string_view trait_key(Trait t) noexcept;

/// Accepts keys and display names, case-insensitive; spaces, dashes and
/// underscores are interchangeable.
std::optional<Trait> parse_trait(std::string_view text);

/// Fixed-size map with one slot per trait.
template <typename T>
class TraitMap {
 public:
  TraitMap() = default;
  explicit TraitMap(const T& fill) : values_{fill, fill, fill, fill, fill} {}
  static_assert(kTraitCount == 5);

  T& operator[](Trait t) { return values_[index_of(t)]; }
  const T& operator[](Trait t) const { return values_[index_of(t)]; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool operator==(const TraitMap&) const = default;

 private:
  std::array<T, kTraitCount> values_{};
};

struct TraitLabelPair {
  Trait trait;
  std::string positive_label;
  std::string negative_label;
};

// Published keeps the label "antoganism" verbatim; Corrected swaps in
// "antagonism". NLI outputs depend on surface form, so the default matters.
enum class LabelVariant { Published, Corrected };

const TraitLabelPair& label_pair(Trait t, LabelVariant variant = LabelVariant::Published);

/// Single label used by the one-hypothesis scoring approach. Emotional
/// stability is probed through "neuroticism" and reflected afterwards.
std::string_view single_label(Trait t) noexcept;

}  // namespace psyprobe
