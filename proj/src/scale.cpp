#include "psyprobe/scale.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace psyprobe {

TraitScore::TraitScore(double value) : value_(value) {
  if (!(value >= kScaleMin && value <= kScaleMax)) {
    throw std::out_of_range("trait score " + std::to_string(value) + " outside [1, 5]");
  }
}

TraitScore likert_to_score(LikertChoice choice) noexcept {
  return TraitScore{static_cast<double>(static_cast<int>(choice) + 1)};
}

std::string_view likert_label(LikertChoice choice) noexcept {
  switch (choice) {
    case LikertChoice::VeryInaccurate: return "Very Inaccurate";
    case LikertChoice::ModeratelyInaccurate: return "Moderately Inaccurate";
    case LikertChoice::NeitherInaccurateNorAccurate: return "Neither Inaccurate nor Accurate";
    case LikertChoice::ModeratelyAccurate: return "Moderately Accurate";
    case LikertChoice::VeryAccurate: return "Very Accurate";
  }
  return "?";
}

TraitScore interpolate_unit_to_scale(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::out_of_range("probability " + std::to_string(p) + " outside [0, 1]");
  }
  return TraitScore{kScaleMin + (kScaleMax - kScaleMin) * p};
}

}  // namespace psyprobe
