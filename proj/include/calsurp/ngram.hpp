#pragma once

// Deterministic local n-gram language model. It doubles as a scoring provider
// whose every probability can be enumerated by hand, which is what makes it
// usable as an exact oracle for the estimator and chain tests.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calsurp/error.hpp"
#include "calsurp/hash.hpp"
#include "calsurp/log.hpp"
#include "calsurp/provider.hpp"

namespace calsurp {

struct WordToken {
  std::string text;
  std::size_t offset = 0;  // byte offset of the first character
};

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Split on ASCII whitespace, keeping byte offsets.
inline std::vector<WordToken> whitespace_tokenize(std::string_view s) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    if (i >= s.size()) break;
    std::size_t start = i;
    while (i < s.size() && !is_ascii_space(s[i])) ++i;
    out.push_back({std::string(s.substr(start, i - start)), start});
  }
  return out;
}

inline std::vector<std::string> whitespace_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : whitespace_tokenize(s)) out.push_back(std::move(t.text));
  return out;
}

struct Smoothing {
  enum class Kind { none, add_k };
  Kind kind = Kind::none;
  double k = 0.0;

  static Smoothing none() { return {}; }
  static Smoothing add_k(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("add_k smoothing needs k > 0");
    return {Kind::add_k, k};
  }
  bool operator==(const Smoothing&) const = default;
};

/// A source of full next-token distributions over a shared tokenization.
class DistributionSource {
 public:
  virtual ~DistributionSource() = default;
  virtual std::string model_id() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  /// (token, probability) pairs over the whole support, sorted by token.
  virtual std::vector<std::pair<std::string, double>> next_token_distribution(
      std::span<const std::string> history) const = 0;
};

class NGramModel : public DistributionSource {
 public:
  using Context = std::vector<std::string>;  // exactly order-1 entries
  using Counts = std::map<Context, std::map<std::string, std::uint64_t, std::less<>>>;

  /// Begin-of-sequence padding symbol. Contains a space, so it can never be
  /// produced by the whitespace tokenizer.
  static constexpr std::string_view kBos = " <bos>";

  NGramModel(std::size_t order, Smoothing smoothing, Counts counts)
      : order_(order), smoothing_(smoothing), counts_(std::move(counts)) {
    if (order_ < 1) throw ConfigError("n-gram order must be >= 1");
    for (const auto& [ctx, nexts] : counts_) {
      if (ctx.size() != order_ - 1) throw ConfigError("n-gram context length does not match order");
      std::uint64_t total = 0;
      for (const auto& [tok, c] : nexts) {
        vocabulary_.insert(tok);
        total += c;
      }
      totals_[ctx] = total;
    }
    if (vocabulary_.empty()) throw ConfigError("n-gram model has an empty vocabulary");
    id_ = make_id();
  }

  std::size_t order() const { return order_; }
  const Smoothing& smoothing() const { return smoothing_; }
  const std::set<std::string, std::less<>>& vocabulary() const { return vocabulary_; }
  const Counts& counts() const { return counts_; }
  std::string model_id() const override { return id_; }

  /// The order-1 most recent tokens of `history`, BOS-padded on the left.
  Context context_of(std::span<const std::string> history) const {
    Context ctx(order_ - 1, std::string(kBos));
    std::size_t take = std::min(history.size(), order_ - 1);
    for (std::size_t i = 0; i < take; ++i) ctx[order_ - 1 - take + i] = history[history.size() - take + i];
    return ctx;
  }

  /// P(token | history). Throws ProviderError for out-of-vocabulary tokens
  /// and, without smoothing, for unseen contexts or zero counts.
  double probability(std::span<const std::string> history, std::string_view token) const {
    if (!vocabulary_.contains(token))
      throw ProviderError(ProviderError::Kind::out_of_vocabulary,
                          "token '" + std::string(token) + "' is not in the model vocabulary");
    Context ctx = context_of(history);
    auto it = counts_.find(ctx);
    std::uint64_t count = 0, total = 0;
    if (it != counts_.end()) {
      total = totals_.at(ctx);
      if (auto c = it->second.find(token); c != it->second.end()) count = c->second;
    }
    if (smoothing_.kind == Smoothing::Kind::none) {
      if (total == 0)
        throw ProviderError(ProviderError::Kind::zero_probability,
                            "context '" + describe(ctx) + "' was never observed (no smoothing)");
      if (count == 0)
        throw ProviderError(ProviderError::Kind::zero_probability, "token '" + std::string(token) +
                                                                       "' never follows '" + describe(ctx) +
                                                                       "' (no smoothing)");
      return static_cast<double>(count) / static_cast<double>(total);
    }
    const double v = static_cast<double>(vocabulary_.size());
    return (static_cast<double>(count) + smoothing_.k) / (static_cast<double>(total) + smoothing_.k * v);
  }

  double logprob(std::span<const std::string> history, std::string_view token) const {
    return std::log(probability(history, token));
  }

  std::vector<std::string> tokenize(std::string_view text) const override { return whitespace_words(text); }

  std::vector<std::pair<std::string, double>> next_token_distribution(
      std::span<const std::string> history) const override {
    Context ctx = context_of(history);
    auto it = counts_.find(ctx);
    if (smoothing_.kind == Smoothing::Kind::none && it == counts_.end())
      throw ProviderError(ProviderError::Kind::zero_probability,
                          "context '" + describe(ctx) + "' was never observed (no smoothing)");
    std::vector<std::pair<std::string, double>> out;
    out.reserve(vocabulary_.size());
    for (const auto& tok : vocabulary_) {
      if (smoothing_.kind == Smoothing::Kind::none) {
        auto c = it->second.find(tok);
        if (c == it->second.end()) continue;  // zero mass stays outside the support
      }
      out.emplace_back(tok, probability(history, tok));
    }
    return out;
  }

  nlohmann::json describe_json() const {
    nlohmann::json j = {{"order", order_}, {"vocabulary_size", vocabulary_.size()}};
    if (smoothing_.kind == Smoothing::Kind::none) j["smoothing"] = "none";
    else j["smoothing"] = {{"kind", "add_k"}, {"k", smoothing_.k}};
    return j;
  }

 private:
  static std::string describe(const Context& ctx) {
    std::string s;
    for (const auto& t : ctx) {
      if (!s.empty()) s += ' ';
      s += (t == kBos) ? "<bos>" : t;
    }
    return s;
  }

  std::string make_id() const {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [ctx, nexts] : counts_) table.push_back({ctx, nexts});
    std::string tag = "ngram-o" + std::to_string(order_);
    if (smoothing_.kind == Smoothing::Kind::add_k) tag += "-addk" + nlohmann::json(smoothing_.k).dump();
    return tag + "-" + sha256_hex(table.dump()).substr(0, 16);
  }

  std::size_t order_;
  Smoothing smoothing_;
  Counts counts_;
  std::map<Context, std::uint64_t> totals_;
  std::set<std::string, std::less<>> vocabulary_;
  std::string id_;
};

/// Count n-grams over each document independently (each gets its own BOS padding).
inline NGramModel train_ngram(std::span<const std::string> documents, std::size_t order, Smoothing smoothing) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  NGramModel::Counts counts;
  std::size_t total_tokens = 0;
  for (const auto& doc : documents) {
    auto words = whitespace_words(doc);
    total_tokens += words.size();
    std::vector<std::string> padded(order - 1, std::string(NGramModel::kBos));
    padded.insert(padded.end(), words.begin(), words.end());
    for (std::size_t i = order - 1; i < padded.size(); ++i) {
      NGramModel::Context ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - (order - 1)),
                              padded.begin() + static_cast<std::ptrdiff_t>(i));
      ++counts[ctx][padded[i]];
    }
  }
  if (total_tokens < order)
    throw TrainingError("insufficient training text: " + std::to_string(total_tokens) +
                        " tokens for an order-" + std::to_string(order) + " model");
  return NGramModel(order, smoothing, std::move(counts));
}

inline NGramModel train_ngram(std::string_view training_text, std::size_t order, Smoothing smoothing) {
  std::string doc(training_text);
  return train_ngram(std::span<const std::string>(&doc, 1), order, smoothing);
}

struct LocalOptions {
  std::string separator = "\n\n";
  std::optional<std::size_t> context_window_tokens;
  OverflowPolicy overflow = OverflowPolicy::error;
};

/// Scoring provider backed by an n-gram model; tokenization is whitespace splitting.
/// Read-only after construction, so one instance can be shared across threads.
class LocalProvider : public Provider {
 public:
  LocalProvider(std::shared_ptr<const NGramModel> model, LocalOptions opts = {})
      : model_(std::move(model)), opts_(std::move(opts)) {
    if (!model_) throw ConfigError("LocalProvider needs a model");
  }

  std::string model_id() const override { return model_->model_id(); }
  std::string separator() const override { return opts_.separator; }
  std::size_t parallelism_cap() const override { return 4; }

  nlohmann::json parameters() const override {
    nlohmann::json j = {{"backend", "local-ngram"}, {"overflow", to_string(opts_.overflow)}};
    j["context_window_tokens"] =
        opts_.context_window_tokens ? nlohmann::json(*opts_.context_window_tokens) : nlohmann::json(nullptr);
    return j;
  }

  const NGramModel& model() const { return *model_; }

  ScoredText score_bare(std::string_view text) const override {
    require_nonempty_text(text);
    return score_stream(std::string(text), 0, Condition::bare, "", text);
  }

  ScoredText score_with_context(std::string_view context, std::string_view text) const override {
    require_nonempty_text(text);
    std::string stream = std::string(context) + opts_.separator + std::string(text);
    return score_stream(std::move(stream), context.size() + opts_.separator.size(), Condition::contextualized,
                        context, text);
  }

 private:
  ScoredText score_stream(std::string stream, std::size_t target_start, Condition condition,
                          std::string_view context, std::string_view text) const {
    auto words = whitespace_tokenize(stream);
    std::size_t dropped_bytes = 0;
    if (opts_.context_window_tokens && words.size() > *opts_.context_window_tokens) {
      const std::size_t cap = *opts_.context_window_tokens;
      const std::size_t drop = words.size() - cap;
      // Only whole context tokens may be dropped; the target must still fit.
      bool only_context = cap > 0 && condition == Condition::contextualized && words[drop - 1].offset < target_start;
      if (opts_.overflow == OverflowPolicy::error || !only_context)
        throw ProviderError(ProviderError::Kind::context_overflow,
                            "scored stream has " + std::to_string(words.size()) + " tokens, window is " +
                                std::to_string(cap));
      dropped_bytes = std::min(words[drop].offset, target_start);
      log::warn("context left-truncated by " + std::to_string(drop) + " tokens to fit a " + std::to_string(cap) +
                "-token window");
      words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(drop));
      for (auto& w : words) w.offset -= dropped_bytes;
      target_start -= dropped_bytes;
    }

    ScoredText st;
    st.model_id = model_->model_id();
    st.condition = condition;
    st.target_char_offset = target_start;
    st.target_digest = sha256_hex(text);
    st.request_fingerprint = request_fingerprint(*this, condition, context, text);

    std::vector<std::string> history;
    history.reserve(words.size());
    st.tokens.reserve(words.size());
    for (auto& w : words) {
      double lp = model_->logprob(history, w.text);
      history.push_back(w.text);
      st.tokens.push_back({std::move(w.text), lp, w.offset});
    }
    st.target_span = target_span_from_offset(st.tokens, target_start);
    check_invariants(st);
    return st;
  }

  std::shared_ptr<const NGramModel> model_;
  LocalOptions opts_;
};

}  // namespace calsurp
