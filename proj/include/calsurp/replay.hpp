#pragma once

// Provider that answers from recorded results instead of a model. Records are
// either full token arrays or a single recorded entropy (bits/token), which is
// enough to push published per-passage entropies through the pipeline.

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <tuple>

#include "calsurp/corpus.hpp"
#include "calsurp/error.hpp"
#include "calsurp/provider.hpp"

namespace calsurp {

class ReplayProvider : public Provider {
 public:
  struct Record {
    std::vector<TokenScore> target_tokens;  // offsets relative to the target text
  };

  ReplayProvider(std::string model_id, std::string separator = "\n\n")
      : model_id_(std::move(model_id)), separator_(std::move(separator)) {}

  /// Record a run whose target tokens are given explicitly.
  void add(Condition c, std::string context, std::string text, std::vector<TokenScore> target_tokens) {
    if (target_tokens.empty()) throw ConfigError("replay record needs at least one token");
    records_[{c, std::move(context), std::move(text)}] = Record{std::move(target_tokens)};
  }

  /// Record a run by its entropy: one synthetic token carrying the whole passage.
  void add_entropy(Condition c, std::string context, std::string text, double bits_per_token) {
    if (!(bits_per_token >= 0.0) || !std::isfinite(bits_per_token))
      throw ConfigError("recorded entropy must be finite and >= 0");
    TokenScore tok{text, -bits_per_token * std::numbers::ln2, 0};
    add(c, std::move(context), std::move(text), {std::move(tok)});
  }

  /// Load {"model_id": ..., "separator": ..., "records": [{condition, context?, text, bits_per_token | tokens}]}.
  static ReplayProvider from_json(const nlohmann::json& j) {
    ReplayProvider p(j.value("model_id", std::string("replay")), j.value("separator", std::string("\n\n")));
    for (const auto& r : j.at("records")) {
      Condition c = condition_from_string(r.at("condition").get<std::string>());
      std::string ctx = r.value("context", std::string{});
      std::string text = r.at("text").get<std::string>();
      if (r.contains("bits_per_token")) {
        p.add_entropy(c, ctx, text, r["bits_per_token"].get<double>());
      } else {
        std::vector<TokenScore> toks;
        for (const auto& t : r.at("tokens"))
          toks.push_back({t.at("t").get<std::string>(), t.at("lp").get<double>(), t.value("o", std::size_t{0})});
        p.add(c, ctx, text, std::move(toks));
      }
    }
    return p;
  }

  static ReplayProvider from_file(const std::filesystem::path& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad replay file " + path.string() + ": " + e.what());
    }
  }

  std::size_t size() const { return records_.size(); }
  std::string model_id() const override { return model_id_; }
  std::string separator() const override { return separator_; }
  nlohmann::json parameters() const override { return {{"backend", "replay"}}; }

  ScoredText score_bare(std::string_view text) const override { return lookup(Condition::bare, "", text); }

  ScoredText score_with_context(std::string_view context, std::string_view text) const override {
    return lookup(Condition::contextualized, context, text);
  }

 private:
  using Key = std::tuple<Condition, std::string, std::string>;

  ScoredText lookup(Condition c, std::string_view context, std::string_view text) const {
    require_nonempty_text(text);
    auto it = records_.find(Key{c, std::string(c == Condition::bare ? std::string_view{} : context), std::string(text)});
    if (it == records_.end())
      throw ProviderError(ProviderError::Kind::missing_record,
                          std::string("no recorded ") + to_string(c) + " run for this text");
    ScoredText st;
    st.model_id = model_id_;
    st.condition = c;
    st.target_char_offset = c == Condition::bare ? 0 : context.size() + separator_.size();
    for (const auto& t : it->second.target_tokens)
      st.tokens.push_back({t.token_text, t.logprob_nat, t.char_offset + st.target_char_offset});
    st.target_span = {0, st.tokens.size()};
    st.target_digest = sha256_hex(text);
    st.request_fingerprint = request_fingerprint(*this, c, c == Condition::bare ? std::string_view{} : context, text);
    check_invariants(st);
    return st;
  }

  std::string model_id_;
  std::string separator_;
  std::map<Key, Record> records_;
};

}  // namespace calsurp
