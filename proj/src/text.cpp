#include "psyprobe/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>

namespace psyprobe {

namespace {

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_closer(char c) noexcept { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

// U+2019 and U+201D (closing single and double quotes)
std::size_t utf8_closer_len(std::string_view s, std::size_t i) noexcept {
  if (s.size() - i >= 3 && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      (static_cast<unsigned char>(s[i + 2]) == 0x99 || static_cast<unsigned char>(s[i + 2]) == 0x9D)) {
    return 3;
  }
  return 0;
}

// U+2026 horizontal ellipsis
bool is_utf8_ellipsis(std::string_view s, std::size_t i) noexcept {
  return s.size() - i >= 3 && static_cast<unsigned char>(s[i]) == 0xE2 &&
         static_cast<unsigned char>(s[i + 1]) == 0x80 && static_cast<unsigned char>(s[i + 2]) == 0xA6;
}

constexpr std::array<std::string_view, 38> kAbbreviations{
    "mr",   "mrs",  "ms",   "dr",  "prof", "sr",  "jr",  "st",  "vs",  "e.g",
    "i.e",  "inc",  "ltd",  "co",  "no",   "fig", "mt",  "u.s", "a.m", "p.m",
    "approx", "dept", "gen", "gov", "lt",  "col", "sgt", "capt", "rev", "jan",
    "feb",  "aug",  "sept", "sep", "oct",  "nov", "dec", "cf"};

bool is_abbreviation(std::string_view text, std::size_t period_pos) {
  std::size_t start = period_pos;
  while (start > 0 && !is_space(text[start - 1])) --start;
  std::string_view word = text.substr(start, period_pos - start);
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.remove_prefix(1);
  }
  if (word.empty()) return false;
  if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))) return true;
  const std::string lower = to_lower_ascii(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::size_t from, std::size_t to) {
    auto piece = trim(text.substr(from, to - from));
    if (!piece.empty()) out.emplace_back(piece);
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];

    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < text.size() && is_space(text[j]) && text[j] != '\n') ++j;
      if (j < text.size() && text[j] == '\n') {
        emit(start, i);
        while (j < text.size() && is_space(text[j])) ++j;
        start = i = j;
        continue;
      }
    }

    const bool ellipsis = is_utf8_ellipsis(text, i);
    if (c == '.' || c == '!' || c == '?' || ellipsis) {
      std::size_t j = i;
      std::size_t run = 0;
      while (j < text.size()) {
        if (text[j] == '.' || text[j] == '!' || text[j] == '?') {
          ++j;
        } else if (is_utf8_ellipsis(text, j)) {
          j += 3;
        } else {
          break;
        }
        ++run;
      }
      while (j < text.size()) {
        if (is_closer(text[j])) {
          ++j;
        } else if (auto n = utf8_closer_len(text, j)) {
          j += n;
        } else {
          break;
        }
      }
      const bool at_boundary = j == text.size() || is_space(text[j]);
      const bool abbreviation = c == '.' && run == 1 && is_abbreviation(text, i);
      if (at_boundary && !abbreviation) {
        emit(start, j);
        start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(start, text.size());
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && current.back() == '\'') current.pop_back();
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto uc = static_cast<unsigned char>(text[i]);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (text[i] == '\'' && !current.empty()) {
      current.push_back('\'');
    } else if (utf8_closer_len(text, i) == 3 && static_cast<unsigned char>(text[i + 2]) == 0x99 &&
               !current.empty()) {
      current.push_back('\'');
      i += 2;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool is_valid_utf8(std::string_view s) noexcept {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::string_view truncate_utf8(std::string_view s, std::size_t max_bytes) noexcept {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

}  // namespace psyprobe
