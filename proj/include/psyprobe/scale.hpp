#pragma once

#include <string_view>

namespace psyprobe {

inline constexpr double kScaleMin = 1.0;
inline constexpr double kScaleMax = 5.0;
inline constexpr double kScaleNeutral = 3.0;

/// A Big Five score on the 1..5 questionnaire scale. Construction outside
/// the range throws std::out_of_range.
class TraitScore {
 public:
  explicit TraitScore(double value);

  double value() const noexcept { return value_; }

  /// Mirror image about the neutral point (s -> 6 - s).
  TraitScore reflected() const noexcept { return TraitScore{kScaleMin + kScaleMax - value_, 0}; }

  auto operator<=>(const TraitScore&) const = default;

 private:
  TraitScore(double value, int /*unchecked*/) noexcept : value_(value) {}
  double value_;
};

enum class LikertChoice {
  VeryInaccurate,
  ModeratelyInaccurate,
  NeitherInaccurateNorAccurate,
  ModeratelyAccurate,
  VeryAccurate,
};

TraitScore likert_to_score(LikertChoice choice) noexcept;

std::string_view likert_label(LikertChoice choice) noexcept;

/// Linear map of a probability onto the questionnaire scale: 1 + 4p.
/// Throws std::out_of_range unless 0 <= p <= 1.
TraitScore interpolate_unit_to_scale(double p);

}  // namespace psyprobe
