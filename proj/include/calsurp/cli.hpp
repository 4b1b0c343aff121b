#pragma once

// Command implementations behind the `calsurp` executable. Each command takes
// a plain options struct and output streams and returns the process exit code,
// so tests can drive them without spawning a process.
//
// Exit codes: 0 success; 1..100 number of failed pairs (capped) for analyze;
// 101 invalid input (corpus, config, flags); 102 runtime failure.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "calsurp/cache.hpp"
#include "calsurp/chain.hpp"
#include "calsurp/config.hpp"
#include "calsurp/corpus.hpp"
#include "calsurp/estimator.hpp"
#include "calsurp/nullsim.hpp"
#include "calsurp/report.hpp"

#ifndef CALSURP_VERSION
#define CALSURP_VERSION "0.0.0"
#endif

namespace calsurp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMaxPairFailures = 100;
inline constexpr int kExitInvalidInput = 101;
inline constexpr int kExitRuntime = 102;

inline const char* tool_version() { return CALSURP_VERSION; }

/// UTC timestamp; honours SOURCE_DATE_EPOCH so manifests can be reproduced.
inline std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) t = static_cast<std::time_t>(std::atoll(sde));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

/// Write to `out_path` when given, else to `out`.
inline void emit(const std::optional<std::filesystem::path>& out_path, std::ostream& out, const std::string& content) {
  if (out_path) write_text(*out_path, content);
  else out << content;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateCommand {
  std::filesystem::path corpus;
  bool nfc = false;
};

inline int cmd_validate(const ValidateCommand& c, std::ostream& out, std::ostream& err) {
  Corpus corpus;
  try {
    corpus = parse_corpus(read_file(c.corpus), {c.nfc});
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  auto violations = validate_corpus(corpus);
  for (const auto& v : violations) out << "[" << v.rule << "] pair '" << v.pair_id << "': " << v.message << '\n';
  if (!violations.empty()) {
    err << violations.size() << " violation(s)\n";
    return kExitInvalidInput;
  }
  for (const auto& item : corpus.items)
    if (item.context.empty()) err << "warning: pair '" << item.pair_id << "' has an empty context\n";
  out << "ok: " << corpus.items.size() << " pair(s)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeCommand {
  std::filesystem::path corpus;
  std::filesystem::path config;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path out_dir = "calsurp-out";
  std::vector<ReportFormat> formats = {ReportFormat::csv, ReportFormat::markdown, ReportFormat::structured};
  bool nfc = false;
  double noise_epsilon = kDefaultNoiseEpsilon;
};

namespace detail {

inline nlohmann::json runs_manifest(const PairAnalysis& a) {
  auto entry = [](const ScoredText& st) {
    return nlohmann::json{{"fingerprint", st.request_fingerprint},
                          {"target_tokens", st.target_span.size()},
                          {"unscored_prefix_tokens", st.unscored_prefix_tokens}};
  };
  return {{"pair_id", a.result.pair_id},
          {"original_bare", entry(a.runs.original_bare)},
          {"original_contextualized", entry(a.runs.original_cond)},
          {"degraded_bare", entry(a.runs.degraded_bare)},
          {"degraded_contextualized", entry(a.runs.degraded_cond)}};
}

inline std::string failure_hint(const PairError& e) {
  if (!e.provider_kind()) return {};
  switch (*e.provider_kind()) {
    case ProviderError::Kind::transport:
      return " (is the backend reachable? check 'endpoint' in the provider config)";
    case ProviderError::Kind::context_overflow:
      return " (set \"overflow\": \"truncate_left\" or raise context_window_tokens)";
    case ProviderError::Kind::out_of_vocabulary:
    case ProviderError::Kind::zero_probability:
      return " (local model cannot score this text; train on it or enable add_k smoothing)";
    default:
      return {};
  }
}

}  // namespace detail

inline int cmd_analyze(const AnalyzeCommand& c, std::ostream& out, std::ostream& err) {
  Corpus corpus;
  LoadedProvider loaded;
  std::string corpus_sha;
  try {
    corpus = load_corpus(c.corpus, {c.nfc});
    corpus_sha = corpus_checksum(c.corpus);
    loaded = load_provider(c.config, c.cache_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  const Provider& provider = *loaded.provider;
  AnalyzeOptions opts{c.noise_epsilon};
  std::vector<std::optional<PairAnalysis>> analyses(corpus.items.size());
  std::vector<std::optional<PairFailure>> failures(corpus.items.size());

  // Each pair already issues its four scoring calls concurrently, so pairs
  // themselves run parallelism_cap / 4 at a time. Results land by index.
  const std::size_t workers =
      std::min<std::size_t>(std::max<std::size_t>(1, provider.parallelism_cap() / 4), corpus.items.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < corpus.items.size(); i = next++) {
      try {
        analyses[i] = analyze_pair_detailed(provider, corpus.items[i], opts);
      } catch (const PairError& e) {
        failures[i] = PairFailure{corpus.items[i].pair_id, e.what() + detail::failure_hint(e)};
      } catch (const std::exception& e) {
        failures[i] = PairFailure{corpus.items[i].pair_id, e.what()};
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<PairResult> results;
  std::vector<PairFailure> failed;
  nlohmann::json pair_manifest = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    if (analyses[i]) {
      results.push_back(analyses[i]->result);
      pair_manifest.push_back(detail::runs_manifest(*analyses[i]));
    }
    if (failures[i]) failed.push_back(*failures[i]);
  }
  Report rep = build_report(corpus, std::move(results), failed);

  try {
    std::filesystem::create_directories(c.out_dir);
    for (auto f : c.formats) {
      switch (f) {
        case ReportFormat::csv:
          write_text(c.out_dir / "report.csv", render_csv(rep));
          if (rep.summary) write_text(c.out_dir / "summary.csv", render_summary_csv(*rep.summary));
          break;
        case ReportFormat::markdown: write_text(c.out_dir / "report.md", render_markdown(rep)); break;
        case ReportFormat::structured: write_text(c.out_dir / "report.json", render_structured(rep).dump(2) + "\n"); break;
      }
    }
    auto pts = scatter_points(rep);
    write_text(c.out_dir / "scatter.tsv", render_scatter_tsv(pts));
    write_text(c.out_dir / "scatter.svg", render_scatter_svg(pts));

    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : rep.failures) fails.push_back({{"pair_id", f.pair_id}, {"message", f.message}});
    nlohmann::json manifest = {
        {"tool", "calsurp"},
        {"tool_version", tool_version()},
        {"command", "analyze"},
        {"timestamp", timestamp_utc()},
        {"corpus", {{"path", c.corpus.string()}, {"sha256", corpus_sha}, {"pair_count", corpus.items.size()}}},
        {"provider", loaded.manifest_config},
        {"model_id", provider.model_id()},
        {"separator", provider.separator()},
        {"provider_parameters", provider.parameters()},
        {"noise_epsilon", c.noise_epsilon},
        {"nfc", c.nfc},
        {"pairs", pair_manifest},
        {"failures", fails},
        {"notes",
         {"first-token conditioning is backend-internal; leading tokens returned without a logprob are "
          "counted in unscored_prefix_tokens and not corrected"}},
    };
    write_text(c.out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  for (const auto& f : rep.failures) err << "failed: " << f.message << '\n';
  if (rep.summary)
    out << "analyzed " << rep.rows.size() << "/" << corpus.items.size() << " pair(s); validation "
        << rep.summary->validation_ratio << "; mean ΔI " << fmt3(rep.summary->mean_delta, true) << " bit/token\n";
  out << "wrote " << c.out_dir.string() << '\n';
  if (!rep.failures.empty()) {
    err << rep.failures.size() << " pair(s) failed\n";
    return static_cast<int>(std::min<std::size_t>(rep.failures.size(), kExitMaxPairFailures));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// chain

struct ChainCommand {
  std::filesystem::path corpus;
  std::filesystem::path config;
  std::optional<std::filesystem::path> cache_dir;
  std::string passage_id;
  SegmentationSpec segmentation = SegmentationSpec::paragraph();
  ReportFormat format = ReportFormat::markdown;
  std::optional<std::filesystem::path> out;
};

inline std::string render_chain(const std::vector<SegmentContribution>& segs, double total_bits, ReportFormat f) {
  char buf[256];
  std::ostringstream os;
  auto share = [](const SegmentContribution& s) { return s.share ? fmt3(*s.share) : std::string("-"); };
  switch (f) {
    case ReportFormat::csv:
      os << "segment,char_begin,char_end,tokens_bare,tokens_cond,bits_bare,bits_cond,mi_bits,share\n";
      for (const auto& s : segs) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%zu,%s,%s,%s,%s\n", s.index, s.char_begin, s.char_end,
                      s.token_count_bare, s.token_count_cond, fmt3(s.bits_bare).c_str(), fmt3(s.bits_cond).c_str(),
                      fmt3(s.mi_contribution_bits, true).c_str(), share(s).c_str());
        os << buf;
      }
      os << "total,,,,,,," << fmt3(total_bits, true) << ",1.000\n";
      break;
    case ReportFormat::markdown:
      os << "| Segment | Chars | Tokens (bare/cond) | Bits bare | Bits cond | MI bits | Share |\n";
      os << "|---:|---|---|---:|---:|---:|---:|\n";
      for (const auto& s : segs) {
        std::snprintf(buf, sizeof buf, "| %zu | %zu-%zu | %zu/%zu | %s | %s | %s | %s |\n", s.index, s.char_begin,
                      s.char_end, s.token_count_bare, s.token_count_cond, fmt3(s.bits_bare).c_str(),
                      fmt3(s.bits_cond).c_str(), fmt3(s.mi_contribution_bits, true).c_str(), share(s).c_str());
        os << buf;
      }
      os << "| total | | | | | " << fmt3(total_bits, true) << " | |\n";
      break;
    case ReportFormat::structured: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : segs)
        arr.push_back({{"index", s.index},
                       {"char_begin", s.char_begin},
                       {"char_end", s.char_end},
                       {"token_count_bare", s.token_count_bare},
                       {"token_count_cond", s.token_count_cond},
                       {"bits_bare", s.bits_bare},
                       {"bits_cond", s.bits_cond},
                       {"mi_contribution_bits", s.mi_contribution_bits},
                       {"share", s.share ? nlohmann::json(*s.share) : nlohmann::json(nullptr)}});
      os << nlohmann::json{{"segments", arr}, {"total_mi_bits", total_bits}}.dump(2) << '\n';
      break;
    }
  }
  return os.str();
}

inline int cmd_chain(const ChainCommand& c, std::ostream& out, std::ostream& err) {
  Corpus corpus;
  LoadedProvider loaded;
  try {
    corpus = load_corpus(c.corpus);
    loaded = load_provider(c.config, c.cache_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  const PairedItem* item = nullptr;
  const Passage* passage = nullptr;
  for (const auto& it : corpus.items) {
    if (it.original.id == c.passage_id) item = &it, passage = &it.original;
    if (it.degraded.id == c.passage_id) item = &it, passage = &it.degraded;
  }
  if (!passage) {
    err << "error: no passage with id '" << c.passage_id << "'\n";
    return kExitInvalidInput;
  }
  try {
    auto bare = loaded.provider->score_bare(passage->text);
    auto cond = loaded.provider->score_with_context(item->context, passage->text);
    auto seg = resolve_segmentation(passage->text, c.segmentation, &bare);
    auto segs = decompose(bare, cond, seg);
    emit(c.out, out, render_chain(segs, total_mi_bits(bare, cond), c.format));
  } catch (const SegmentationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// klgap

struct KlCommand {
  std::filesystem::path config_a;
  std::filesystem::path config_b;
  std::filesystem::path text;
  std::size_t top_k = 10;
  ReportFormat format = ReportFormat::markdown;
  std::optional<std::filesystem::path> out;
};

inline std::string render_kl(const KLResult& r, const std::string& id_a, const std::string& id_b, ReportFormat f) {
  char buf[512];
  switch (f) {
    case ReportFormat::csv:
      std::snprintf(buf, sizeof buf, "model_a,model_b,top_k,tokens,kl_bits_per_token,covered_mass_a\n%s,%s,%zu,%zu,%.6f,%.6f\n",
                    id_a.c_str(), id_b.c_str(), r.top_k, r.token_count, r.kl_bits_per_token, r.covered_mass_a);
      return buf;
    case ReportFormat::markdown:
      std::snprintf(buf, sizeof buf,
                    "| Model A | Model B | top-k | Tokens | D_KL(A‖B) bit/token | Covered mass (A) |\n"
                    "|---|---|---:|---:|---:|---:|\n| %s | %s | %zu | %zu | %.4f | %.4f |\n",
                    id_a.c_str(), id_b.c_str(), r.top_k, r.token_count, r.kl_bits_per_token, r.covered_mass_a);
      return buf;
    default:
      return nlohmann::json{{"model_a", id_a},
                            {"model_b", id_b},
                            {"top_k", r.top_k},
                            {"token_count", r.token_count},
                            {"kl_bits_per_token", r.kl_bits_per_token},
                            {"covered_mass_a", r.covered_mass_a}}
                 .dump(2) +
             "\n";
  }
}

inline std::shared_ptr<const NGramModel> load_distribution_model(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  if (j.value("kind", std::string{}) != "ngram")
    throw ConfigError(path.string() +
                      ": KL needs full next-token distributions over a shared tokenization; only local n-gram "
                      "providers expose them (remote cross-model comparison is rejected)");
  return ngram_from_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

inline int cmd_klgap(const KlCommand& c, std::ostream& out, std::ostream& err) {
  try {
    auto a = load_distribution_model(c.config_a);
    auto b = load_distribution_model(c.config_b);
    auto text = read_file(c.text);
    auto r = kl_gap(*a, *b, text, c.top_k);
    emit(c.out, out, render_kl(r, a->model_id(), b->model_id(), c.format));
  } catch (const EstimatorError& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// null relay | funnel

struct RelayCommand {
  RelayConfig config;
  std::size_t count = 1;            // texts to generate, seeds seed..seed+count-1
  bool oracle_check = false;        // score each text under a unigram oracle
  ReportFormat format = ReportFormat::markdown;
  std::optional<std::filesystem::path> out;
};

struct RelayCheck {
  std::vector<double> mi;  // per text, first half as context
  double mean_abs_mi = 0.0;
  double max_abs_mi = 0.0;
};

/// Score each text under a uniform unigram oracle over the lexicon, using the
/// text's first half as context and the second half as target.
inline RelayCheck relay_oracle_check(const std::vector<std::vector<std::string>>& texts,
                                     const std::vector<std::string>& lexicon) {
  std::string training;
  for (const auto& w : lexicon) training += w + " ";
  auto model = std::make_shared<const NGramModel>(train_ngram(training, 1, Smoothing::none()));
  LocalProvider oracle(model, {" ", std::nullopt, OverflowPolicy::error});
  RelayCheck chk;
  CompensatedSum abs_sum;
  for (const auto& toks : texts) {
    if (toks.size() < 2) throw ConfigError("oracle check needs relay texts of length >= 2");
    std::size_t half = toks.size() / 2;
    std::string ctx, tgt;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto& dst = i < half ? ctx : tgt;
      if (!dst.empty()) dst += ' ';
      dst += toks[i];
    }
    auto mi = mutual_information(entropy_bits(oracle.score_bare(tgt)), entropy_bits(oracle.score_with_context(ctx, tgt)));
    chk.mi.push_back(mi.mi);
    abs_sum.add(std::abs(mi.mi));
    chk.max_abs_mi = std::max(chk.max_abs_mi, std::abs(mi.mi));
  }
  chk.mean_abs_mi = texts.empty() ? 0.0 : abs_sum.value() / static_cast<double>(texts.size());
  return chk;
}

inline int cmd_null_relay(const RelayCommand& c, std::ostream& out, std::ostream& err) {
  std::vector<std::vector<std::string>> texts;
  try {
    for (std::size_t i = 0; i < c.count; ++i) {
      RelayConfig cfg = c.config;
      cfg.seed = c.config.seed + i;
      texts.push_back(generate_relay_tokens(cfg));
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::optional<RelayCheck> chk;
  if (c.oracle_check) {
    try {
      chk = relay_oracle_check(texts, c.config.lexicon);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitInvalidInput;
    }
  }
  auto join = [](const std::vector<std::string>& toks) {
    std::string s;
    for (const auto& w : toks) s += (s.empty() ? "" : " ") + w;
    return s;
  };
  std::ostringstream os;
  const char* rule = c.config.rule == RelayConfig::Rule::free ? "free" : "chain";
  if (c.format == ReportFormat::structured) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      nlohmann::json e = {{"seed", c.config.seed + i}, {"text", join(texts[i])}};
      if (chk) e["mi"] = chk->mi[i];
      arr.push_back(e);
    }
    nlohmann::json j = {{"model", "relay"}, {"rule", rule}, {"rng_algorithm", rng::kAlgorithm},
                        {"length", c.config.length}, {"texts", arr}};
    if (chk) j["oracle_check"] = {{"mean_abs_mi", chk->mean_abs_mi}, {"max_abs_mi", chk->max_abs_mi}};
    os << j.dump(2) << '\n';
  } else if (c.format == ReportFormat::csv) {
    os << "seed,text" << (chk ? ",mi" : "") << '\n';
    for (std::size_t i = 0; i < texts.size(); ++i) {
      os << c.config.seed + i << ',' << calsurp::detail::csv_escape(join(texts[i]));
      if (chk) os << ',' << fmt3(chk->mi[i]);
      os << '\n';
    }
  } else {
    os << "## Relay null model (" << rule << " rule, " << rng::kAlgorithm << ")\n\n";
    os << "| Seed | Text |" << (chk ? " MI |" : "") << "\n|---:|---|" << (chk ? "---:|" : "") << '\n';
    for (std::size_t i = 0; i < texts.size(); ++i) {
      os << "| " << c.config.seed + i << " | " << calsurp::detail::md_escape(join(texts[i])) << " |";
      if (chk) os << ' ' << fmt3(chk->mi[i]) << " |";
      os << '\n';
    }
    if (chk)
      os << "\nUnigram-oracle check: mean |MI| = " << fmt3(chk->mean_abs_mi) << " bit/token, max |MI| = "
         << fmt3(chk->max_abs_mi) << " bit/token\n";
  }
  try {
    emit(c.out, out, os.str());
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

struct FunnelCommand {
  FunnelConfig config;
  ReportFormat format = ReportFormat::markdown;
  std::optional<std::filesystem::path> out;
};

inline std::string render_funnel(const FunnelResult& r, const FunnelConfig& cfg, ReportFormat f) {
  char buf[1024];
  const bool inside = r.within_ci95(r.analytic_fraction);
  switch (f) {
    case ReportFormat::csv:
      std::snprintf(buf, sizeof buf,
                    "dims,candidates,trials,seed,correlation,analytic_fraction,implied_mi_bits,empirical_fraction,"
                    "ci95_halfwidth,analytic_within_ci95\n%zu,%llu,%zu,%llu,%g,%.10g,%.6f,%.10g,%.3g,%s\n",
                    cfg.dims(), static_cast<unsigned long long>(cfg.candidates), cfg.trials,
                    static_cast<unsigned long long>(cfg.seed), cfg.correlation, r.analytic_fraction,
                    r.implied_mi_bits, r.empirical_fraction, r.ci95_halfwidth, inside ? "true" : "false");
      return buf;
    case ReportFormat::markdown:
      std::snprintf(buf, sizeof buf,
                    "## Constraint funnel (%s)\n\n| Quantity | Value |\n|---|---:|\n"
                    "| Dimensions | %zu |\n| Candidates N | %llu |\n| Trials | %zu |\n| Seed | %llu |\n"
                    "| Correlation | %g |\n| Analytic fraction Πp | %.10g |\n| Implied MI (bits) | %.3f |\n"
                    "| Empirical fraction | %.10g |\n| 95%% CI half-width | %.3g |\n| Analytic inside CI | %s |\n",
                    r.rng_algorithm.c_str(), cfg.dims(), static_cast<unsigned long long>(cfg.candidates), cfg.trials,
                    static_cast<unsigned long long>(cfg.seed), cfg.correlation, r.analytic_fraction,
                    r.implied_mi_bits, r.empirical_fraction, r.ci95_halfwidth, inside ? "yes" : "no");
      return buf;
    default:
      return nlohmann::json{{"model", "funnel"},
                            {"dims", cfg.dims()},
                            {"pass_probs", cfg.pass_probs},
                            {"candidates", cfg.candidates},
                            {"trials", cfg.trials},
                            {"seed", cfg.seed},
                            {"correlation", cfg.correlation},
                            {"rng_algorithm", r.rng_algorithm},
                            {"analytic_fraction", r.analytic_fraction},
                            {"implied_mi_bits", r.implied_mi_bits},
                            {"empirical_fraction", r.empirical_fraction},
                            {"standard_error", r.standard_error},
                            {"ci95_halfwidth", r.ci95_halfwidth},
                            {"survivors_per_trial", r.survivors_per_trial},
                            {"analytic_within_ci95", inside}}
                 .dump(2) +
             "\n";
  }
}

inline int cmd_null_funnel(const FunnelCommand& c, std::ostream& out, std::ostream& err) {
  try {
    auto r = run_funnel(c.config);
    emit(c.out, out, render_funnel(r, c.config, c.format));
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cache stats | clear | verify

struct CacheCommand {
  enum class Action { stats, clear, verify };
  Action action = Action::stats;
  std::filesystem::path dir;
};

inline int cmd_cache(const CacheCommand& c, std::ostream& out, std::ostream& err) {
  try {
    ResponseCache cache(c.dir);
    switch (c.action) {
      case CacheCommand::Action::stats:
        out << "entries: " << cache.size() << "\nbytes: " << cache.bytes() << '\n';
        break;
      case CacheCommand::Action::clear:
        out << "removed: " << cache.clear() << '\n';
        break;
      case CacheCommand::Action::verify: {
        auto rep = cache.verify();
        for (const auto& k : rep.evicted) out << "corrupt, evicted: " << k << '\n';
        out << "checked: " << rep.checked << "\nevicted: " << rep.evicted.size() << '\n';
        break;
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotCommand {
  std::filesystem::path scatter;
  std::optional<std::filesystem::path> out;
};

inline int cmd_plot(const PlotCommand& c, std::ostream& out, std::ostream& err) {
  try {
    emit(c.out, out, render_scatter_svg(parse_scatter_tsv(read_file(c.scatter))));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  return kExitOk;
}

}  // namespace calsurp::cli
