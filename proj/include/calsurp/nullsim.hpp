#pragma once

// Two analytic null models: a relay (word-chain) text generator whose tokens
// carry no cross-token constraint, and the constraint-stacking funnel, where
// k independent filters each pass a fraction p_i of N candidates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "calsurp/error.hpp"
#include "calsurp/utf8.hpp"

namespace calsurp {

/// Replayable randomness: std::mt19937_64 (fully specified by the standard)
/// plus our own integer/real mappings, since the <random> distributions are
/// implementation-defined.
namespace rng {

inline constexpr const char* kAlgorithm = "mt19937_64+splitmix64-seeding";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream `stream` derived from `seed`.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

/// Uniform in [0, n) by rejection sampling.
inline std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) {
  if (n == 0) throw Error("uniform_index over an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline bool bernoulli(std::mt19937_64& g, double p) { return uniform01(g) < p; }

}  // namespace rng

// ---------------------------------------------------------------------------
// Relay-novel generator

/// Word-chain rule between consecutive tokens.
using OverlapPredicate = std::function<bool(std::string_view prev, std::string_view next)>;

/// Default word-chain: next token starts with the previous token's last character.
inline bool last_first_char_match(std::string_view prev, std::string_view next) {
  auto a = utf8::last_codepoint(prev);
  auto b = utf8::first_codepoint(next);
  return a && b && *a == *b;
}

struct RelayConfig {
  enum class Rule { free, chain };

  std::vector<std::string> lexicon;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  Rule rule = Rule::free;
  OverlapPredicate overlap = last_first_char_match;  // used by Rule::chain

  void validate() const {
    if (lexicon.empty()) throw ConfigError("relay lexicon must not be empty");
    std::set<std::string_view> seen;
    for (const auto& w : lexicon) {
      if (w.empty()) throw ConfigError("relay lexicon contains an empty token");
      if (w.find_first_of(" \t\r\n\f\v") != std::string::npos)
        throw ConfigError("relay token '" + w + "' contains whitespace");
      if (!seen.insert(w).second) throw ConfigError("relay lexicon token '" + w + "' is duplicated");
    }
    if (rule == Rule::chain && !overlap) throw ConfigError("chain rule needs an overlap predicate");
  }
};

inline std::vector<std::string> generate_relay_tokens(const RelayConfig& cfg) {
  cfg.validate();
  auto g = rng::make_stream(cfg.seed);
  std::vector<std::string> out;
  out.reserve(cfg.length);
  for (std::size_t i = 0; i < cfg.length; ++i) {
    if (cfg.rule == RelayConfig::Rule::free || out.empty()) {
      out.push_back(cfg.lexicon[rng::uniform_index(g, cfg.lexicon.size())]);
      continue;
    }
    std::vector<const std::string*> successors;
    for (const auto& w : cfg.lexicon)
      if (cfg.overlap(out.back(), w)) successors.push_back(&w);
    if (successors.empty()) {
      std::string prefix;
      for (const auto& w : out) prefix += (prefix.empty() ? "" : " ") + w;
      throw Error("word chain is stuck: no lexicon token can follow '" + out.back() + "' (prefix: " + prefix + ")");
    }
    out.push_back(*successors[rng::uniform_index(g, successors.size())]);
  }
  return out;
}

/// Space-joined relay text; deterministic for a given seed.
inline std::string generate_relay(const RelayConfig& cfg) {
  std::string text;
  for (const auto& w : generate_relay_tokens(cfg)) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  return text;
}

// ---------------------------------------------------------------------------
// Constraint funnel

struct FunnelConfig {
  std::uint64_t candidates = 1;
  std::vector<double> pass_probs;  // one per constraint dimension
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  // Extension: with this probability a candidate draws one shared latent
  // uniform for all dimensions instead of independent ones. 0 = independent.
  double correlation = 0.0;
  std::size_t threads = 0;  // 0 = hardware concurrency

  std::size_t dims() const { return pass_probs.size(); }

  void validate() const {
    if (candidates < 1) throw ConfigError("funnel needs at least one candidate");
    if (trials < 1) throw ConfigError("funnel needs at least one trial");
    for (double p : pass_probs)
      if (!(p > 0.0 && p <= 1.0)) throw ConfigError("pass probabilities must lie in (0, 1]");
    if (!(correlation >= 0.0 && correlation <= 1.0)) throw ConfigError("correlation must lie in [0, 1]");
  }
};

struct FunnelResult {
  double analytic_fraction = 1.0;  // product of p_i
  double implied_mi_bits = 0.0;    // -log2(analytic_fraction)
  double empirical_fraction = 0.0;
  double standard_error = 0.0;     // binomial, over trials * candidates draws
  double ci95_halfwidth = 0.0;
  std::size_t trials = 0;
  std::uint64_t candidates = 0;
  std::vector<std::uint64_t> survivors_per_trial;
  std::string rng_algorithm = rng::kAlgorithm;
  std::uint64_t seed = 0;

  bool within_ci95(double target) const { return std::abs(empirical_fraction - target) <= ci95_halfwidth; }
};

inline double funnel_analytic_fraction(const std::vector<double>& pass_probs) {
  double f = 1.0;
  for (double p : pass_probs) f *= p;
  return f;
}

namespace detail {

inline std::uint64_t run_funnel_trial(const FunnelConfig& cfg, std::size_t trial) {
  auto g = rng::make_stream(cfg.seed, trial);
  std::uint64_t survivors = 0;
  for (std::uint64_t c = 0; c < cfg.candidates; ++c) {
    bool pass = true;
    if (cfg.correlation > 0.0 && rng::bernoulli(g, cfg.correlation)) {
      const double u = rng::uniform01(g);
      for (double p : cfg.pass_probs) pass = pass && u < p;
    } else {
      for (double p : cfg.pass_probs) {
        if (!rng::bernoulli(g, p)) {
          pass = false;
          break;
        }
      }
    }
    survivors += pass ? 1 : 0;
  }
  return survivors;
}

}  // namespace detail

/// Monte Carlo over `trials` independent populations of N candidates, with
/// the analytic survivor fraction attached. Trials run concurrently; each has
/// its own RNG stream, so the result does not depend on scheduling.
inline FunnelResult run_funnel(const FunnelConfig& cfg) {
  cfg.validate();
  FunnelResult r;
  r.analytic_fraction = funnel_analytic_fraction(cfg.pass_probs);
  r.implied_mi_bits = cfg.pass_probs.empty() ? 0.0 : -std::log2(r.analytic_fraction);
  r.trials = cfg.trials;
  r.candidates = cfg.candidates;
  r.seed = cfg.seed;
  r.survivors_per_trial.assign(cfg.trials, 0);

  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.trials);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < cfg.trials; t += workers)
        r.survivors_per_trial[t] = detail::run_funnel_trial(cfg, t);
    });
  }
  for (auto& th : pool) th.join();

  double share_sum = 0.0;
  for (auto s : r.survivors_per_trial) share_sum += static_cast<double>(s) / static_cast<double>(cfg.candidates);
  r.empirical_fraction = share_sum / static_cast<double>(cfg.trials);
  const double draws = static_cast<double>(cfg.trials) * static_cast<double>(cfg.candidates);
  const double p = r.empirical_fraction;
  r.standard_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / draws);
  r.ci95_halfwidth = 1.959963984540054 * r.standard_error;
  return r;
}

}  // namespace calsurp
