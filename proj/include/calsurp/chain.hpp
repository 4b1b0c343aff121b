#pragma once

// Chain-rule decomposition of a passage's mutual information into additive
// per-segment contributions. Contributions are total bits (not bits/token),
// so they add up exactly to the passage total whatever the per-segment token
// counts of the two runs are.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calsurp/error.hpp"
#include "calsurp/estimator.hpp"
#include "calsurp/scored_text.hpp"
#include "calsurp/utf8.hpp"

namespace calsurp {

enum class SegmentMode { paragraph, sentence, fixed_tokens, explicit_offsets };

inline const char* to_string(SegmentMode m) {
  switch (m) {
    case SegmentMode::paragraph: return "paragraph";
    case SegmentMode::sentence: return "sentence";
    case SegmentMode::fixed_tokens: return "fixed_tokens";
    default: return "explicit";
  }
}

struct SegmentationSpec {
  SegmentMode mode = SegmentMode::paragraph;
  std::size_t tokens_per_segment = 0;  // fixed_tokens
  std::vector<std::size_t> offsets;    // explicit_offsets, UTF-8 byte offsets

  static SegmentationSpec paragraph() { return {SegmentMode::paragraph, 0, {}}; }
  static SegmentationSpec sentence() { return {SegmentMode::sentence, 0, {}}; }
  static SegmentationSpec fixed_tokens(std::size_t k) { return {SegmentMode::fixed_tokens, k, {}}; }
  static SegmentationSpec explicit_offsets(std::vector<std::size_t> o) {
    return {SegmentMode::explicit_offsets, 0, std::move(o)};
  }
};

/// Resolved segmentation: boundaries[0] = 0, boundaries.back() = text size,
/// strictly increasing. Segment i is [boundaries[i], boundaries[i+1]).
struct Segmentation {
  SegmentMode mode = SegmentMode::paragraph;
  std::vector<std::size_t> boundaries;

  std::size_t segment_count() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  std::size_t text_size() const { return boundaries.empty() ? 0 : boundaries.back(); }
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::size_t skip_spaces(std::string_view t, std::size_t i) {
  while (i < t.size() && is_space(t[i])) ++i;
  return i;
}

/// Paragraph starts: first non-space character after a blank line.
inline std::vector<std::size_t> paragraph_starts(std::string_view t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '\n') continue;
    std::size_t j = i + 1;
    while (j < t.size() && (t[j] == ' ' || t[j] == '\t' || t[j] == '\r')) ++j;
    if (j < t.size() && t[j] == '\n') {
      std::size_t next = skip_spaces(t, j);
      if (next < t.size() && next > 0) out.push_back(next);
      i = next == 0 ? i : next - 1;
    }
  }
  return out;
}

inline bool is_closer(char32_t c) {
  switch (c) {
    case U'"': case U'\'': case U')': case U']': case U'”': case U'’': case U'»':
    case U'」': case U'』': case U'）':
      return true;
    default:
      return false;
  }
}

/// Sentence starts. Latin terminals (. ! ?) need following whitespace; CJK
/// full stops (。！？) end a sentence on their own. Closing quotes and
/// brackets directly after the terminal stay with the sentence.
inline std::vector<std::size_t> sentence_starts(std::string_view t) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < t.size()) {
    auto cp = utf8::decode_at(t, i);
    std::size_t len = utf8::sequence_length(static_cast<unsigned char>(t[i]));
    if (!cp) {
      ++i;
      continue;
    }
    bool latin = *cp == U'.' || *cp == U'!' || *cp == U'?';
    bool cjk = *cp == U'。' || *cp == U'！' || *cp == U'？';
    if (latin || cjk) {
      std::size_t j = i + len;
      while (j < t.size()) {
        auto c2 = utf8::decode_at(t, j);
        if (!c2 || !is_closer(*c2)) break;
        j += utf8::sequence_length(static_cast<unsigned char>(t[j]));
      }
      bool space_follows = j < t.size() && is_space(t[j]);
      if (cjk || space_follows) {
        std::size_t next = skip_spaces(t, j);
        if (next < t.size() && (out.empty() || out.back() < next)) out.push_back(next);
        i = next;
        continue;
      }
      i = j;
      continue;
    }
    i += len;
  }
  return out;
}

}  // namespace detail

/// Resolve `spec` against `text`. Fixed-token mode needs the bare run of that
/// text for its token grid.
inline Segmentation resolve_segmentation(std::string_view text, const SegmentationSpec& spec,
                                         const ScoredText* bare_grid = nullptr) {
  if (text.empty()) throw SegmentationError("cannot segment empty text");
  Segmentation seg;
  seg.mode = spec.mode;
  std::vector<std::size_t> inner;
  switch (spec.mode) {
    case SegmentMode::paragraph: inner = detail::paragraph_starts(text); break;
    case SegmentMode::sentence: inner = detail::sentence_starts(text); break;
    case SegmentMode::fixed_tokens: {
      if (spec.tokens_per_segment < 1) throw SegmentationError("fixed token count must be >= 1");
      if (!bare_grid || bare_grid->condition != Condition::bare)
        throw SegmentationError("fixed-token segmentation needs the bare run's token grid");
      auto toks = bare_grid->target_tokens();
      for (std::size_t i = spec.tokens_per_segment; i < toks.size(); i += spec.tokens_per_segment)
        inner.push_back(toks[i].char_offset - bare_grid->target_char_offset);
      break;
    }
    case SegmentMode::explicit_offsets: {
      const auto& o = spec.offsets;
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (o[i] > text.size())
          throw SegmentationError("offset " + std::to_string(o[i]) + " is beyond the text (" +
                                  std::to_string(text.size()) + " bytes)");
        if (i > 0 && o[i] <= o[i - 1]) throw SegmentationError("explicit offsets must be strictly increasing");
        if (o[i] < text.size() && utf8::is_continuation(static_cast<unsigned char>(text[o[i]])))
          throw SegmentationError("offset " + std::to_string(o[i]) + " splits a UTF-8 character");
      }
      for (auto v : o)
        if (v > 0 && v < text.size()) inner.push_back(v);
      break;
    }
  }
  seg.boundaries.push_back(0);
  for (auto b : inner)
    if (b > seg.boundaries.back() && b < text.size()) seg.boundaries.push_back(b);
  seg.boundaries.push_back(text.size());
  return seg;
}

struct SegmentContribution {
  std::size_t index = 0;
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
  std::size_t token_count_bare = 0;
  std::size_t token_count_cond = 0;
  double bits_bare = 0.0;
  double bits_cond = 0.0;
  double mi_contribution_bits = 0.0;  // bits_bare - bits_cond
  std::optional<double> share;        // absent when the passage total is ~0
};

inline constexpr double kZeroTotalBits = 1e-9;

/// Total MI of the passage in bits: total bare bits minus total contextualized bits.
inline double total_mi_bits(const ScoredText& bare, const ScoredText& cond) {
  return entropy_bits(bare).total_bits - entropy_bits(cond).total_bits;
}

/// Assign every target token of each run to the segment holding its offset
/// and sum bits per segment.
inline std::vector<SegmentContribution> decompose(const ScoredText& bare, const ScoredText& cond,
                                                  const Segmentation& seg) {
  if (bare.condition != Condition::bare || cond.condition != Condition::contextualized)
    throw SegmentationError("decompose needs a bare and a contextualized run");
  if (bare.target_digest != cond.target_digest)
    throw SegmentationError("runs score different target texts (fingerprint mismatch)");
  if (seg.segment_count() == 0) throw SegmentationError("segmentation is empty");

  const std::size_t n = seg.segment_count();
  std::vector<CompensatedSum> bare_bits(n), cond_bits(n);
  std::vector<std::size_t> bare_count(n, 0), cond_count(n, 0);

  auto assign = [&](const ScoredText& run, std::vector<CompensatedSum>& bits, std::vector<std::size_t>& count) {
    for (const auto& t : run.target_tokens()) {
      std::size_t rel = t.char_offset - run.target_char_offset;
      if (rel >= seg.text_size())
        throw SegmentationError("token at offset " + std::to_string(rel) + " lies outside the segmented text");
      auto it = std::upper_bound(seg.boundaries.begin(), seg.boundaries.end(), rel);
      std::size_t idx = static_cast<std::size_t>(it - seg.boundaries.begin()) - 1;
      bits[idx].add(-t.logprob_nat / std::numbers::ln2);
      ++count[idx];
    }
  };
  assign(bare, bare_bits, bare_count);
  assign(cond, cond_bits, cond_count);

  const double total = total_mi_bits(bare, cond);
  std::vector<SegmentContribution> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = out[i];
    c.index = i;
    c.char_begin = seg.boundaries[i];
    c.char_end = seg.boundaries[i + 1];
    c.token_count_bare = bare_count[i];
    c.token_count_cond = cond_count[i];
    c.bits_bare = bare_bits[i].value();
    c.bits_cond = cond_bits[i].value();
    c.mi_contribution_bits = c.bits_bare - c.bits_cond;
    if (std::abs(total) > kZeroTotalBits) c.share = c.mi_contribution_bits / total;
  }
  return out;
}

}  // namespace calsurp
