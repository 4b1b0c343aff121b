#pragma once

// Scoring-backend interface. A provider turns text (optionally preceded by a
// context and separator) into token-level natural-log probabilities.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "calsurp/error.hpp"
#include "calsurp/hash.hpp"
#include "calsurp/scored_text.hpp"

namespace calsurp {

enum class OverflowPolicy { error, truncate_left };

inline const char* to_string(OverflowPolicy p) { return p == OverflowPolicy::error ? "error" : "truncate_left"; }

inline OverflowPolicy overflow_policy_from_string(const std::string& s) {
  if (s == "error") return OverflowPolicy::error;
  if (s == "truncate_left") return OverflowPolicy::truncate_left;
  throw ConfigError("overflow must be \"error\" or \"truncate_left\"");
}

class Provider {
 public:
  virtual ~Provider() = default;

  virtual std::string model_id() const = 0;
  /// Everything besides model/condition/text that can change the scores.
  virtual nlohmann::json parameters() const = 0;
  virtual std::string separator() const = 0;
  virtual std::size_t parallelism_cap() const { return 1; }

  virtual ScoredText score_bare(std::string_view text) const = 0;
  virtual ScoredText score_with_context(std::string_view context, std::string_view text) const = 0;
};

using ProviderPtr = std::shared_ptr<const Provider>;

/// Canonical request description; its digest is the fingerprint and the cache key.
inline nlohmann::json request_key(const std::string& model_id, Condition condition, std::string_view context,
                                  std::string_view separator, std::string_view text, const nlohmann::json& params) {
  return {
      {"model_id", model_id},
      {"condition", to_string(condition)},
      {"context", std::string(context)},
      {"separator", std::string(separator)},
      {"text", std::string(text)},
      {"params", params},
  };
}

inline std::string request_fingerprint(const nlohmann::json& key) { return sha256_hex(key.dump()); }

inline std::string request_fingerprint(const Provider& p, Condition condition, std::string_view context,
                                       std::string_view text) {
  return request_fingerprint(request_key(p.model_id(), condition, context, p.separator(), text, p.parameters()));
}

/// Index of the first token whose offset is at or after `target_start`.
/// Tokens straddling the context/target boundary start before it and stay out.
inline TokenSpan target_span_from_offset(const std::vector<TokenScore>& tokens, std::size_t target_start) {
  auto it = std::find_if(tokens.begin(), tokens.end(),
                         [&](const TokenScore& t) { return t.char_offset >= target_start; });
  return {static_cast<std::size_t>(it - tokens.begin()), tokens.size()};
}

inline void require_nonempty_text(std::string_view text) {
  if (text.empty()) throw ProviderError(ProviderError::Kind::empty_target, "text to score is empty");
}

}  // namespace calsurp
