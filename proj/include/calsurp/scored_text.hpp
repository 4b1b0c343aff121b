#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "calsurp/error.hpp"

namespace calsurp {

enum class Condition { bare, contextualized };

inline const char* to_string(Condition c) { return c == Condition::bare ? "bare" : "contextualized"; }

inline Condition condition_from_string(const std::string& s) {
  if (s == "bare") return Condition::bare;
  if (s == "contextualized") return Condition::contextualized;
  throw Error("unknown condition '" + s + "'");
}

struct TokenScore {
  std::string token_text;
  double logprob_nat = 0.0;   // natural log, <= 0
  std::size_t char_offset = 0;  // UTF-8 byte offset into the scored stream

  bool operator==(const TokenScore&) const = default;
};

/// Half-open token-index range.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool operator==(const TokenSpan&) const = default;
};

/// One scoring run: the whole scored stream plus the target passage's tokens.
struct ScoredText {
  std::vector<TokenScore> tokens;
  std::string model_id;
  Condition condition = Condition::bare;
  TokenSpan target_span;
  std::size_t target_char_offset = 0;  // where the target text starts in the stream
  std::string target_digest;           // sha256 of the target text
  std::string request_fingerprint;
  // Leading tokens the backend returned without a logprob (typically the first
  // token, which has nothing to condition on). They are not part of `tokens`.
  std::size_t unscored_prefix_tokens = 0;

  bool operator==(const ScoredText&) const = default;

  std::span<const TokenScore> target_tokens() const {
    return std::span<const TokenScore>(tokens).subspan(target_span.begin, target_span.size());
  }
};

/// Throws ProviderError when an invariant of ScoredText does not hold.
inline void check_invariants(const ScoredText& st) {
  if (st.target_span.empty() || st.target_span.end > st.tokens.size())
    throw ProviderError(ProviderError::Kind::empty_target, "target span is empty or out of bounds");
  if (st.condition == Condition::bare && (st.target_span.begin != 0 || st.target_span.end != st.tokens.size()))
    throw ProviderError(ProviderError::Kind::bad_response, "bare run must target every token");
  for (const auto& t : st.tokens) {
    if (!std::isfinite(t.logprob_nat))
      throw ProviderError(ProviderError::Kind::non_finite_logprob, "non-finite logprob for token '" + t.token_text + "'");
    if (t.logprob_nat > 0.0)
      throw ProviderError(ProviderError::Kind::bad_response, "positive logprob for token '" + t.token_text + "'");
  }
}

inline nlohmann::json to_json(const ScoredText& st) {
  nlohmann::json toks = nlohmann::json::array();
  for (const auto& t : st.tokens) toks.push_back({{"t", t.token_text}, {"lp", t.logprob_nat}, {"o", t.char_offset}});
  return {
      {"model_id", st.model_id},
      {"condition", to_string(st.condition)},
      {"target_span", {st.target_span.begin, st.target_span.end}},
      {"target_char_offset", st.target_char_offset},
      {"target_digest", st.target_digest},
      {"request_fingerprint", st.request_fingerprint},
      {"unscored_prefix_tokens", st.unscored_prefix_tokens},
      {"tokens", std::move(toks)},
  };
}

inline ScoredText scored_text_from_json(const nlohmann::json& j) {
  ScoredText st;
  st.model_id = j.at("model_id").get<std::string>();
  st.condition = condition_from_string(j.at("condition").get<std::string>());
  st.target_span = {j.at("target_span").at(0).get<std::size_t>(), j.at("target_span").at(1).get<std::size_t>()};
  st.target_char_offset = j.at("target_char_offset").get<std::size_t>();
  st.target_digest = j.at("target_digest").get<std::string>();
  st.request_fingerprint = j.at("request_fingerprint").get<std::string>();
  st.unscored_prefix_tokens = j.at("unscored_prefix_tokens").get<std::size_t>();
  for (const auto& t : j.at("tokens"))
    st.tokens.push_back({t.at("t").get<std::string>(), t.at("lp").get<double>(), t.at("o").get<std::size_t>()});
  return st;
}

/// Canonical serialization; doubles are written in shortest round-trip form.
inline std::string serialize(const ScoredText& st) { return to_json(st).dump(); }

inline ScoredText deserialize_scored_text(std::string_view s) { return scored_text_from_json(nlohmann::json::parse(s)); }

}  // namespace calsurp
