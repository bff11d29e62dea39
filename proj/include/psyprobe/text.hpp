#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace psyprobe {

std::string_view trim(std::string_view s) noexcept;

std::string to_lower_ascii(std::string_view s);

/// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

/// Deterministic sentence segmentation. Breaks after sentence-final
/// punctuation followed by whitespace (unless the preceding word is a known
/// abbreviation or a single-letter initial) and at blank lines. Segments are
/// trimmed and empty ones dropped; text with no break yields one segment.
std::vector<std::string> split_sentences(std::string_view text);

/// Lowercased word tokens: runs of letters and digits, with internal
/// apostrophes kept ("don't").
std::vector<std::string> word_tokens(std::string_view text);

bool is_valid_utf8(std::string_view s) noexcept;

/// Longest prefix of at most max_bytes that does not split a UTF-8 sequence.
std::string_view truncate_utf8(std::string_view s, std::size_t max_bytes) noexcept;

}  // namespace psyprobe
