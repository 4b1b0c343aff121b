#pragma once

// Information-theoretic quantities over scored runs. All values are bits;
// providers deliver natural logs and the conversion happens here, once.

#include <algorithm>
#include <array>
#include <exception>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "calsurp/corpus.hpp"
#include "calsurp/error.hpp"
#include "calsurp/ngram.hpp"
#include "calsurp/provider.hpp"
#include "calsurp/scored_text.hpp"

namespace calsurp {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct EntropyResult {
  double bits_per_token = 0.0;
  double total_bits = 0.0;
  std::size_t token_count = 0;
  Condition condition = Condition::bare;

  /// Build from an already-known per-token entropy (e.g. a published value).
  static EntropyResult from_bits_per_token(double bits, std::size_t n, Condition c) {
    if (n == 0) throw EstimatorError("token_count must be >= 1");
    if (!(bits >= 0.0) || !std::isfinite(bits)) throw EstimatorError("entropy must be finite and >= 0");
    return {bits, bits * static_cast<double>(n), n, c};
  }
};

/// H = -(1/n) * sum log2 P(x_i) over the target span.
inline EntropyResult entropy_bits(const ScoredText& scored) {
  auto target = scored.target_tokens();
  if (scored.target_span.empty() || scored.target_span.end > scored.tokens.size())
    throw EstimatorError("empty target span");
  CompensatedSum nats;
  for (const auto& t : target) {
    if (!std::isfinite(t.logprob_nat)) throw EstimatorError("non-finite logprob for token '" + t.token_text + "'");
    nats.add(-t.logprob_nat);
  }
  EntropyResult r;
  r.token_count = target.size();
  r.total_bits = nats.value() / std::numbers::ln2;
  r.bits_per_token = r.total_bits / static_cast<double>(r.token_count);
  r.condition = scored.condition;
  return r;
}

inline constexpr double kDefaultNoiseEpsilon = 0.05;

struct MIResult {
  double h_bare = 0.0;  // bits/token
  double h_cond = 0.0;
  double mi = 0.0;      // may be negative: estimator noise, never clamped
  std::size_t token_count_bare = 0;
  std::size_t token_count_cond = 0;
  bool noise_flag = false;  // |mi| below the noise epsilon
};

inline MIResult mutual_information(const EntropyResult& bare, const EntropyResult& cond,
                                   double noise_epsilon = kDefaultNoiseEpsilon) {
  if (bare.condition != Condition::bare) throw EstimatorError("first argument must come from a bare run");
  if (cond.condition != Condition::contextualized)
    throw EstimatorError("second argument must come from a contextualized run");
  MIResult r;
  r.h_bare = bare.bits_per_token;
  r.h_cond = cond.bits_per_token;
  r.mi = bare.bits_per_token - cond.bits_per_token;
  r.token_count_bare = bare.token_count;
  r.token_count_cond = cond.token_count;
  r.noise_flag = std::abs(r.mi) < noise_epsilon;
  return r;
}

struct PairResult {
  std::string pair_id;
  std::string language;
  std::string author;
  MIResult original;
  MIResult degraded;
  double delta_i = 0.0;
  bool supports_prediction = false;
};

inline PairResult assemble_pair(std::string pair_id, std::string language, std::string author, MIResult original,
                                MIResult degraded) {
  PairResult r{std::move(pair_id), std::move(language), std::move(author), original, degraded, 0.0, false};
  r.delta_i = original.mi - degraded.mi;
  r.supports_prediction = r.delta_i > 0.0;
  return r;
}

/// The four scoring runs behind one PairResult.
struct PairRuns {
  ScoredText original_bare, original_cond, degraded_bare, degraded_cond;
};

struct PairAnalysis {
  PairResult result;
  PairRuns runs;
};

struct AnalyzeOptions {
  double noise_epsilon = kDefaultNoiseEpsilon;
};

/// Score both passages of `item` bare and against the shared context.
/// The four calls run concurrently when the provider allows it.
inline PairAnalysis analyze_pair_detailed(const Provider& provider, const PairedItem& item,
                                          const AnalyzeOptions& opts = {}) {
  struct Job {
    const Passage* passage;
    bool contextual;
  };
  const std::array<Job, 4> jobs{Job{&item.original, false}, Job{&item.original, true}, Job{&item.degraded, false},
                                Job{&item.degraded, true}};
  auto role_label = [](const Job& j) {
    return std::string(to_string(j.passage->role)) + (j.contextual ? ", contextualized" : ", bare");
  };
  auto run = [&](const Job& j) -> ScoredText {
    try {
      return j.contextual ? provider.score_with_context(item.context, j.passage->text)
                          : provider.score_bare(j.passage->text);
    } catch (const ProviderError& e) {
      throw PairError(item.pair_id, role_label(j), e.what(), e.kind());
    } catch (const Error& e) {
      throw PairError(item.pair_id, role_label(j), e.what());
    }
  };

  std::array<ScoredText, 4> out;
  if (provider.parallelism_cap() > 1) {
    std::array<std::future<ScoredText>, 4> futs;
    for (std::size_t i = 0; i < jobs.size(); ++i) futs[i] = std::async(std::launch::async, run, jobs[i]);
    std::exception_ptr first_error;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        out[i] = futs[i].get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = run(jobs[i]);
  }

  auto mi = [&](const ScoredText& b, const ScoredText& c) {
    return mutual_information(entropy_bits(b), entropy_bits(c), opts.noise_epsilon);
  };
  PairAnalysis a;
  a.result = assemble_pair(item.pair_id, item.original.language, item.original.author, mi(out[0], out[1]),
                           mi(out[2], out[3]));
  a.runs = {std::move(out[0]), std::move(out[1]), std::move(out[2]), std::move(out[3])};
  return a;
}

inline PairResult analyze_pair(const Provider& provider, const PairedItem& item, const AnalyzeOptions& opts = {}) {
  return analyze_pair_detailed(provider, item, opts).result;
}

struct LanguageBreakdown {
  std::size_t count = 0;
  std::size_t supported = 0;
  double rate() const { return count ? static_cast<double>(supported) / static_cast<double>(count) : 0.0; }
};

inline std::string ratio_string(std::size_t num, std::size_t den) {
  char buf[64];
  double pct = den ? 100.0 * static_cast<double>(num) / static_cast<double>(den) : 0.0;
  std::snprintf(buf, sizeof buf, "%zu/%zu (%.0f%%)", num, den, pct);
  return buf;
}

struct SummaryStats {
  std::size_t pair_count = 0;
  std::size_t supported_count = 0;
  double validation_rate = 0.0;
  std::string validation_ratio;  // "20/20 (100%)"
  double mean_i_high = 0.0;
  double mean_i_degraded = 0.0;
  double mean_delta = 0.0;
  std::map<std::string, LanguageBreakdown> per_language;
};

namespace detail {

/// Order-independent mean: values are sorted before compensated summation.
inline double stable_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

}  // namespace detail

/// Pair-weighted summary (plain means of the per-pair columns).
inline SummaryStats summarize(std::span<const PairResult> results) {
  if (results.empty()) throw EstimatorError("cannot summarize an empty result list");
  SummaryStats s;
  s.pair_count = results.size();
  std::vector<double> hi, lo, delta;
  for (const auto& r : results) {
    hi.push_back(r.original.mi);
    lo.push_back(r.degraded.mi);
    delta.push_back(r.delta_i);
    auto& lang = s.per_language[r.language];
    ++lang.count;
    if (r.delta_i > 0.0) {
      ++s.supported_count;
      ++lang.supported;
    }
  }
  s.validation_rate = static_cast<double>(s.supported_count) / static_cast<double>(s.pair_count);
  s.validation_ratio = ratio_string(s.supported_count, s.pair_count);
  s.mean_i_high = detail::stable_mean(std::move(hi));
  s.mean_i_degraded = detail::stable_mean(std::move(lo));
  s.mean_delta = detail::stable_mean(std::move(delta));
  return s;
}

struct KLResult {
  double kl_bits_per_token = 0.0;
  std::size_t top_k = 0;
  double covered_mass_a = 0.0;  // mean P_a mass inside the union of top-k supports
  std::size_t token_count = 0;
};

namespace detail {

inline std::vector<std::string> top_k_tokens(const std::vector<std::pair<std::string, double>>& dist, std::size_t k) {
  std::vector<std::pair<std::string, double>> sorted = dist;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i) out.push_back(sorted[i].first);
  return out;
}

inline double lookup(const std::vector<std::pair<std::string, double>>& dist, const std::string& tok) {
  auto it = std::lower_bound(dist.begin(), dist.end(), tok, [](const auto& e, const std::string& t) { return e.first < t; });
  return (it != dist.end() && it->first == tok) ? it->second : 0.0;
}

}  // namespace detail

/// Mean per-position D_KL(P_a || P_b) in bits, over the text's own token
/// sequence (each position conditioned on its prefix). The sum runs over the
/// union of both top-k supports; the leftover mass of each distribution is
/// folded into one catch-all bucket, so full-coverage k gives the exact value.
inline KLResult kl_gap(const DistributionSource& a, const DistributionSource& b, std::string_view text,
                       std::size_t top_k) {
  if (top_k < 1) throw EstimatorError("top_k must be >= 1");
  const auto tokens = a.tokenize(text);
  if (tokens != b.tokenize(text)) throw EstimatorError("tokenization mismatch between the two providers");
  if (tokens.empty()) throw EstimatorError("text has no tokens");

  constexpr double kRemainderFloor = 1e-12;
  CompensatedSum kl_total, covered_total;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::span<const std::string> history(tokens.data(), i);
    auto pa = a.next_token_distribution(history);
    auto pb = b.next_token_distribution(history);
    std::vector<std::string> support = detail::top_k_tokens(pa, top_k);
    for (auto& t : detail::top_k_tokens(pb, top_k)) support.push_back(std::move(t));
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());

    CompensatedSum term, mass_a, mass_b;
    for (const auto& tok : support) {
      double p = detail::lookup(pa, tok);
      double q = detail::lookup(pb, tok);
      mass_a.add(p);
      mass_b.add(q);
      if (p == 0.0) continue;
      if (q == 0.0)
        throw EstimatorError("P_b assigns zero mass to '" + tok + "' at position " + std::to_string(i) +
                             " while P_a does not; KL is infinite");
      term.add(p * std::log2(p / q));
    }
    double rest_a = 1.0 - mass_a.value();
    double rest_b = 1.0 - mass_b.value();
    if (rest_a > kRemainderFloor) {
      if (rest_b <= kRemainderFloor)
        throw EstimatorError("P_b has no mass outside the shared support at position " + std::to_string(i));
      term.add(rest_a * std::log2(rest_a / rest_b));
    }
    kl_total.add(term.value());
    covered_total.add(mass_a.value());
  }
  const double n = static_cast<double>(tokens.size());
  return {kl_total.value() / n, top_k, covered_total.value() / n, tokens.size()};
}

}  // namespace calsurp
