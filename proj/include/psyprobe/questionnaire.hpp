#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psyprobe/traits.hpp"

namespace psyprobe {

enum class KeyDirection { Positive, Negative };

// key_direction is carried for completeness. The probe scores generated
// text directly, so it never reverses scores.
struct QuestionnaireItem {
  int id = 0;
  std::string text;
  Trait keyed_trait = Trait::Extraversion;
  KeyDirection key_direction = KeyDirection::Positive;

  bool operator==(const QuestionnaireItem&) const = default;
};

using Questionnaire = std::vector<QuestionnaireItem>;

inline constexpr std::size_t kQuestionnaireSize = 50;
inline constexpr std::size_t kItemsPerTrait = 10;

class QuestionnaireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The packaged 50-item inventory, sorted by id.
const Questionnaire& load_questionnaire();

/// Loads a questionnaire resource from disk. Throws QuestionnaireError when
/// the file is missing or does not hold a valid 50-item inventory.
Questionnaire load_questionnaire(const std::filesystem::path& path);

/// Parses the tab-separated resource format (id, text, trait, direction).
/// Lines starting with '#' and a header row are skipped.
Questionnaire parse_questionnaire(std::string_view content, std::string_view origin = "<memory>");

/// Raw text of the packaged resource.
std::string_view packaged_questionnaire_source() noexcept;

}  // namespace psyprobe
