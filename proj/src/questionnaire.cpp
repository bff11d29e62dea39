#include "psyprobe/questionnaire.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "psyprobe/text.hpp"

namespace psyprobe {

namespace detail {
extern const char* const kPackagedQuestionnaire;
}

std::string_view packaged_questionnaire_source() noexcept { return detail::kPackagedQuestionnaire; }

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view origin, std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << origin << ":" << line_no << ": " << what;
  throw QuestionnaireError(os.str());
}

}  // namespace

Questionnaire parse_questionnaire(std::string_view content, std::string_view origin) {
  Questionnaire items;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;

    auto cols = split_tabs(line);
    if (cols.size() != 4) fail(origin, line_no, "expected 4 tab-separated columns");
    if (cols[0] == "id") continue;

    QuestionnaireItem item;
    auto [ptr, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), item.id);
    if (ec != std::errc{} || ptr != cols[0].data() + cols[0].size()) {
      fail(origin, line_no, "bad item id '" + std::string(cols[0]) + "'");
    }
    item.text = std::string(trim(cols[1]));
    if (item.text.empty()) fail(origin, line_no, "empty item text");
    auto trait = parse_trait(cols[2]);
    if (!trait) fail(origin, line_no, "unknown trait '" + std::string(cols[2]) + "'");
    item.keyed_trait = *trait;
    if (cols[3] == "positive" || cols[3] == "+") {
      item.key_direction = KeyDirection::Positive;
    } else if (cols[3] == "negative" || cols[3] == "-") {
      item.key_direction = KeyDirection::Negative;
    } else {
      fail(origin, line_no, "bad key direction '" + std::string(cols[3]) + "'");
    }
    items.push_back(std::move(item));
  }

  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::ostringstream problems;
  if (items.size() != kQuestionnaireSize) {
    problems << "expected " << kQuestionnaireSize << " items, found " << items.size() << "; ";
  }
  std::set<int> ids;
  TraitMap<std::size_t> per_trait(0);
  for (const auto& item : items) {
    if (item.id < 1 || item.id > static_cast<int>(kQuestionnaireSize) || !ids.insert(item.id).second) {
      problems << "invalid or duplicate id " << item.id << "; ";
    }
    ++per_trait[item.keyed_trait];
  }
  for (Trait t : kAllTraits) {
    if (per_trait[t] != kItemsPerTrait) {
      problems << trait_key(t) << " has " << per_trait[t] << " items; ";
    }
  }
  if (auto msg = problems.str(); !msg.empty()) {
    throw QuestionnaireError(std::string(origin) + ": malformed questionnaire: " + msg);
  }
  return items;
}

const Questionnaire& load_questionnaire() {
  static const Questionnaire items = parse_questionnaire(packaged_questionnaire_source(), "<packaged>");
  return items;
}

Questionnaire load_questionnaire(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QuestionnaireError("questionnaire resource missing: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_questionnaire(buf.str(), path.string());
}

}  // namespace psyprobe
