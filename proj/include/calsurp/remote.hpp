#pragma once

// Client for OpenAI-compatible `/completions` endpoints that echo the prompt
// with per-token logprobs (vLLM, SGLang, TGI, llama.cpp server, ...).

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>
#include <thread>

#include "calsurp/error.hpp"
#include "calsurp/hash.hpp"
#include "calsurp/log.hpp"
#include "calsurp/provider.hpp"
#include "calsurp/utf8.hpp"

namespace calsurp {

enum class OffsetUnit { codepoint, byte };

/// How prompt logprobs are obtained. `echo_only` sends max_tokens=0; some
/// servers reject that, so `echo_plus_one` generates one token and discards it.
enum class EchoMode { echo_only, echo_plus_one };

struct ProviderConfig {
  std::string endpoint;  // e.g. "http://localhost:8000/v1"
  std::string model_id;
  std::string api_key_env = "CALSURP_API_KEY";
  std::string api_key;  // used only when the environment variable is unset
  double timeout_s = 120.0;
  int max_retries = 3;
  std::size_t parallelism_cap = 4;
  std::string separator = "\n\n";
  std::optional<std::size_t> context_window_tokens;
  OverflowPolicy overflow = OverflowPolicy::error;
  OffsetUnit offset_unit = OffsetUnit::codepoint;
  EchoMode echo_mode = EchoMode::echo_only;
  double backoff_initial_s = 0.5;

  void validate() const {
    if (endpoint.empty()) throw ConfigError("provider endpoint is empty");
    if (model_id.empty()) throw ConfigError("provider model_id is empty");
    if (!(timeout_s > 0.0)) throw ConfigError("timeout must be > 0");
    if (parallelism_cap < 1) throw ConfigError("parallelism_cap must be >= 1");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  }
};

namespace detail {

struct ParsedEndpoint {
  std::string scheme_host_port;
  std::string base_path;  // no trailing slash
};

inline ParsedEndpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("endpoint must be an http(s) URL: " + url);
  std::string path = m[2].matched ? m[2].str() : std::string{};
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

inline bool retryable_status(int status) { return status == 429 || status == 408 || status >= 500; }

}  // namespace detail

class RemoteProvider : public Provider {
 public:
  explicit RemoteProvider(ProviderConfig cfg)
      : cfg_(std::move(cfg)), slots_(static_cast<std::ptrdiff_t>(cfg_.parallelism_cap)) {
    cfg_.validate();
    endpoint_ = detail::parse_endpoint(cfg_.endpoint);
  }

  const ProviderConfig& config() const { return cfg_; }
  std::string model_id() const override { return cfg_.model_id; }
  std::string separator() const override { return cfg_.separator; }
  std::size_t parallelism_cap() const override { return cfg_.parallelism_cap; }

  nlohmann::json parameters() const override {
    return {
        {"backend", "openai-completions"},
        {"endpoint", cfg_.endpoint},
        {"temperature", 0},
        {"top_p", 1.0},
        {"echo_mode", cfg_.echo_mode == EchoMode::echo_only ? "echo_only" : "echo_plus_one"},
        {"context_window_tokens",
         cfg_.context_window_tokens ? nlohmann::json(*cfg_.context_window_tokens) : nlohmann::json(nullptr)},
        {"overflow", to_string(cfg_.overflow)},
    };
  }

  /// Requests issued so far, retries included.
  std::size_t request_count() const { return requests_.load(); }

  ScoredText score_bare(std::string_view text) const override {
    require_nonempty_text(text);
    ScoredText st = score_prompt(std::string(text), 0, Condition::bare);
    finish(st, Condition::bare, "", text);
    return st;
  }

  ScoredText score_with_context(std::string_view context, std::string_view text) const override {
    require_nonempty_text(text);
    std::string ctx(context);
    for (int attempt = 0;; ++attempt) {
      std::string prompt = ctx + cfg_.separator + std::string(text);
      std::size_t target_start = ctx.size() + cfg_.separator.size();
      ScoredText st = score_prompt(prompt, target_start, Condition::contextualized);
      std::size_t total = st.tokens.size() + st.unscored_prefix_tokens;
      if (!cfg_.context_window_tokens || total <= *cfg_.context_window_tokens) {
        finish(st, Condition::contextualized, context, text);
        return st;
      }
      const std::size_t cap = *cfg_.context_window_tokens;
      const std::size_t context_tokens = total - st.target_span.size();
      if (cfg_.overflow == OverflowPolicy::error || st.target_span.size() >= cap || attempt >= 4 || ctx.empty())
        throw ProviderError(ProviderError::Kind::context_overflow,
                            "prompt has " + std::to_string(total) + " tokens, window is " + std::to_string(cap));
      // Keep the fraction of context characters expected to fit, with 5% slack.
      double keep = 0.95 * static_cast<double>(cap - st.target_span.size()) / static_cast<double>(context_tokens);
      std::size_t keep_bytes = static_cast<std::size_t>(keep * static_cast<double>(ctx.size()));
      std::size_t cut = utf8::floor_boundary(ctx, ctx.size() - std::min(keep_bytes, ctx.size()));
      log::warn("context left-truncated to " + std::to_string(ctx.size() - cut) + " bytes to fit a " +
                std::to_string(cap) + "-token window");
      ctx.erase(0, cut);
    }
  }

  /// Build the request body for `prompt` (exposed for documentation and tests).
  nlohmann::json request_body(const std::string& prompt) const {
    return {
        {"model", cfg_.model_id},
        {"prompt", prompt},
        {"max_tokens", cfg_.echo_mode == EchoMode::echo_only ? 0 : 1},
        {"echo", true},
        {"logprobs", 1},
        {"temperature", 0},
        {"top_p", 1.0},
    };
  }

  /// Turn a completions response into scored tokens for `prompt`.
  ScoredText parse_response(const nlohmann::json& resp, const std::string& prompt, std::size_t target_start,
                            Condition condition) const {
    const nlohmann::json* lp = nullptr;
    try {
      const auto& choice = resp.at("choices").at(0);
      if (choice.contains("logprobs") && choice["logprobs"].is_object()) lp = &choice["logprobs"];
    } catch (const nlohmann::json::exception&) {
      throw ProviderError(ProviderError::Kind::bad_response, "response has no choices[0]");
    }
    if (!lp || !lp->contains("tokens") || !lp->contains("token_logprobs"))
      throw unsupported("response carries no prompt logprobs");

    const auto& toks = (*lp)["tokens"];
    const auto& lps = (*lp)["token_logprobs"];
    if (!toks.is_array() || !lps.is_array() || toks.size() != lps.size())
      throw ProviderError(ProviderError::Kind::bad_response, "tokens and token_logprobs differ in length");

    std::vector<std::size_t> offsets;
    if (lp->contains("text_offset") && (*lp)["text_offset"].is_array()) {
      const auto& raw = (*lp)["text_offset"];
      if (raw.size() != toks.size())
        throw ProviderError(ProviderError::Kind::bad_response, "text_offset length mismatch");
      auto starts = utf8::codepoint_starts(prompt);
      for (const auto& o : raw) {
        auto v = o.get<std::size_t>();
        if (cfg_.offset_unit == OffsetUnit::codepoint) v = v < starts.size() ? starts[v] : prompt.size() + v;
        offsets.push_back(v);
      }
    } else {
      std::size_t pos = 0;  // reconstruct from token byte lengths
      for (const auto& t : toks) {
        offsets.push_back(pos);
        pos += t.get<std::string>().size();
      }
    }

    ScoredText st;
    st.model_id = cfg_.model_id;
    st.condition = condition;
    st.target_char_offset = target_start;
    std::size_t i = 0;
    for (; i < toks.size() && lps[i].is_null(); ++i) ++st.unscored_prefix_tokens;
    for (; i < toks.size(); ++i) {
      if (offsets[i] >= prompt.size()) break;  // generated continuation, not prompt
      if (!lps[i].is_number())
        throw ProviderError(ProviderError::Kind::non_finite_logprob,
                            "missing logprob at prompt token " + std::to_string(i));
      double v = lps[i].get<double>();
      if (!std::isfinite(v))
        throw ProviderError(ProviderError::Kind::non_finite_logprob,
                            "non-finite logprob at prompt token " + std::to_string(i));
      if (v > 0.0) {
        if (v > 1e-6)
          throw ProviderError(ProviderError::Kind::bad_response,
                              "positive logprob " + std::to_string(v) + " at token " + std::to_string(i));
        v = 0.0;  // float noise around certainty
      }
      st.tokens.push_back({toks[i].get<std::string>(), v, offsets[i]});
    }
    if (st.tokens.empty()) throw unsupported("no scored prompt tokens returned (is echo supported?)");
    if (condition == Condition::bare) st.target_span = {0, st.tokens.size()};
    else st.target_span = target_span_from_offset(st.tokens, target_start);
    return st;
  }

 private:
  ProviderError unsupported(const std::string& what) const {
    return ProviderError(ProviderError::Kind::unsupported_backend,
                         what + ". The backend must support echo=true with logprobs on /completions "
                                "(vLLM, SGLang and TGI do; chat-only APIs do not). If it rejects max_tokens=0, "
                                "set \"echo_mode\": \"echo_plus_one\".");
  }

  void finish(ScoredText& st, Condition condition, std::string_view context, std::string_view text) const {
    st.target_digest = sha256_hex(text);
    st.request_fingerprint = request_fingerprint(*this, condition, context, text);
    check_invariants(st);
  }

  ScoredText score_prompt(const std::string& prompt, std::size_t target_start, Condition condition) const {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    httplib::Client cli(endpoint_.scheme_host_port);
    auto secs = std::chrono::duration<double>(cfg_.timeout_s);
    auto whole = std::chrono::duration_cast<std::chrono::seconds>(secs);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(secs - whole);
    cli.set_connection_timeout(whole.count(), micros.count());
    cli.set_read_timeout(whole.count(), micros.count());
    cli.set_write_timeout(whole.count(), micros.count());

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
    else if (!cfg_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    const std::string body = request_body(prompt).dump();
    const std::string path = endpoint_.base_path + "/completions";
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        auto delay = cfg_.backoff_initial_s * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      ++requests_;
      auto res = cli.Post(path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        nlohmann::json resp;
        try {
          resp = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
          throw ProviderError(ProviderError::Kind::bad_response, "response is not JSON");
        }
        return parse_response(resp, prompt, target_start, condition);
      }
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
      if (!detail::retryable_status(res->status)) {
        if (res->status == 400 && (res->body.find("echo") != std::string::npos ||
                                   res->body.find("logprobs") != std::string::npos ||
                                   res->body.find("max_tokens") != std::string::npos))
          throw unsupported(last_error);
        throw ProviderError(ProviderError::Kind::transport, last_error);
      }
    }
    throw ProviderError(ProviderError::Kind::transport,
                        "giving up after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
  }

  ProviderConfig cfg_;
  detail::ParsedEndpoint endpoint_;
  mutable std::counting_semaphore<1024> slots_;
  mutable std::atomic<std::size_t> requests_{0};
};

}  // namespace calsurp
