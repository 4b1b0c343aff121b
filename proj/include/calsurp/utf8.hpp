#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 helpers. Offsets in the library are byte offsets into UTF-8
// strings; remote backends usually report code-point offsets instead.
namespace calsurp::utf8 {

inline bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

/// Length in bytes of the sequence introduced by lead byte `c` (1 for invalid leads).
inline std::size_t sequence_length(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  if ((c & 0xF8) == 0xF0) return 4;
  return 1;
}

/// Byte offset of every code point start, plus a final entry equal to s.size().
inline std::vector<std::size_t> codepoint_starts(std::string_view s) {
  std::vector<std::size_t> starts;
  starts.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size();) {
    starts.push_back(i);
    std::size_t len = sequence_length(static_cast<unsigned char>(s[i]));
    i += len;
    if (i > s.size()) i = s.size();
  }
  starts.push_back(s.size());
  return starts;
}

inline std::size_t codepoint_count(std::string_view s) { return codepoint_starts(s).size() - 1; }

/// Largest code-point boundary <= pos.
inline std::size_t floor_boundary(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return s.size();
  while (pos > 0 && is_continuation(static_cast<unsigned char>(s[pos]))) --pos;
  return pos;
}

inline std::optional<char32_t> decode_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return std::nullopt;
  auto c0 = static_cast<unsigned char>(s[pos]);
  std::size_t len = sequence_length(c0);
  if (pos + len > s.size()) return std::nullopt;
  char32_t cp = 0;
  switch (len) {
    case 1: cp = c0; break;
    case 2: cp = c0 & 0x1F; break;
    case 3: cp = c0 & 0x0F; break;
    default: cp = c0 & 0x07; break;
  }
  for (std::size_t k = 1; k < len; ++k) {
    auto c = static_cast<unsigned char>(s[pos + k]);
    if (!is_continuation(c)) return std::nullopt;
    cp = (cp << 6) | (c & 0x3F);
  }
  return cp;
}

inline std::optional<char32_t> first_codepoint(std::string_view s) { return decode_at(s, 0); }

inline std::optional<char32_t> last_codepoint(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return decode_at(s, floor_boundary(s, s.size() - 1));
}

}  // namespace calsurp::utf8
