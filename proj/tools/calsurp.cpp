// calsurp command-line driver. All work happens in calsurp/cli.hpp; this file
// only maps flags onto the command structs.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "calsurp/cli.hpp"

namespace {

using namespace calsurp;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

// paragraph | sentence | fixed:K | offsets:a,b,c
SegmentationSpec parse_segmentation(const std::string& s) {
  if (s == "paragraph") return SegmentationSpec::paragraph();
  if (s == "sentence") return SegmentationSpec::sentence();
  if (s.rfind("fixed:", 0) == 0) return SegmentationSpec::fixed_tokens(std::stoul(s.substr(6)));
  if (s.rfind("offsets:", 0) == 0) {
    std::vector<std::size_t> o;
    for (const auto& v : split(s.substr(8), ',')) o.push_back(std::stoul(v));
    return SegmentationSpec::explicit_offsets(std::move(o));
  }
  throw ConfigError("segmentation must be paragraph, sentence, fixed:K or offsets:a,b,...");
}

std::vector<std::string> read_lexicon(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream is(read_file(path));
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calsurp: calibrated-surprise measurement for paired passages"};
  app.set_version_flag("--version", std::string(cli::tool_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config, cache_dir, out;
  std::vector<std::string> formats;
  app.add_option("--config", config, "Provider config (JSON)");
  app.add_option("--cache-dir", cache_dir, "Response cache directory");
  app.add_option("--format", formats, "Output format: csv, markdown, structured (repeatable)")->allow_extra_args(false);
  app.add_option("--out", out, "Output directory (analyze) or file (other commands)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Score every pair and write reports, scatter and manifest");
  std::string corpus;
  bool nfc = false;
  double epsilon = kDefaultNoiseEpsilon;
  analyze->add_option("corpus", corpus, "Corpus file")->required();
  analyze->add_flag("--nfc", nfc, "NFC-normalize all text on load");
  analyze->add_option("--noise-epsilon", epsilon, "|I| below this is flagged as noise");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a corpus file against the data-model invariants");
  validate->add_option("corpus", corpus, "Corpus file")->required();
  validate->add_flag("--nfc", nfc, "NFC-normalize before validating");

  // chain
  auto* chain = app.add_subcommand("chain", "Chain-rule decomposition of one passage's MI");
  std::string passage, segment = "paragraph";
  chain->add_option("corpus", corpus, "Corpus file")->required();
  chain->add_option("--passage", passage, "Passage id")->required();
  chain->add_option("--segment", segment, "paragraph | sentence | fixed:K | offsets:a,b,...");

  // klgap
  auto* klgap = app.add_subcommand("klgap", "Truncated KL divergence between two local models on a text");
  std::string config_b, text_path;
  std::size_t top_k = 10;
  klgap->add_option("--config-b", config_b, "Second provider config (model B)")->required();
  klgap->add_option("text", text_path, "Text file")->required();
  klgap->add_option("--top-k", top_k, "Support size taken from each distribution");

  // null relay | funnel
  auto* null = app.add_subcommand("null", "Null-model checks");
  null->require_subcommand(1);
  auto* relay = null->add_subcommand("relay", "Generate word-chain texts with no cross-token constraint");
  std::string lexicon_file, lexicon_inline, rule = "free";
  std::size_t length = 20, count = 1;
  std::uint64_t seed = 0;
  bool oracle_check = false;
  auto* lex_opt = relay->add_option("--lexicon-file", lexicon_file, "Whitespace-separated lexicon file");
  relay->add_option("--lexicon", lexicon_inline, "Comma-separated lexicon")->excludes(lex_opt);
  relay->add_option("--length", length, "Tokens per text");
  relay->add_option("--count", count, "Number of texts (seeds seed, seed+1, ...)");
  relay->add_option("--seed", seed, "RNG seed");
  relay->add_option("--rule", rule, "free | chain")->check(CLI::IsMember({"free", "chain"}));
  relay->add_flag("--oracle-check", oracle_check, "Score each text under a unigram oracle (second half given first half)");

  auto* funnel = null->add_subcommand("funnel", "Constraint-stacking funnel Monte Carlo");
  FunnelConfig fcfg;
  fcfg.candidates = 1000000;
  fcfg.trials = 20;
  std::vector<double> probs;
  std::size_t dims = 4;
  funnel->add_option("--candidates,-N", fcfg.candidates, "Candidates per trial");
  funnel->add_option("--dims,-k", dims, "Constraint dimensions (with a single --p)");
  funnel->add_option("--p", probs, "Pass probability; one value is repeated over --dims")->expected(1, -1);
  funnel->add_option("--trials", fcfg.trials, "Monte Carlo trials");
  funnel->add_option("--seed", fcfg.seed, "RNG seed");
  funnel->add_option("--correlation", fcfg.correlation, "Shared-latent probability (extension; 0 = independent)");
  funnel->add_option("--threads", fcfg.threads, "Worker threads (0 = hardware)");

  // cache
  auto* cache = app.add_subcommand("cache", "Inspect or maintain the response cache");
  std::string action = "stats";
  cache->add_option("action", action, "stats | clear | verify")->check(CLI::IsMember({"stats", "clear", "verify"}));

  // plot
  auto* plot = app.add_subcommand("plot", "Render scatter.tsv as an SVG with the y = x diagonal");
  std::string scatter;
  plot->add_option("scatter", scatter, "Scatter file from analyze")->required();

  CLI11_PARSE(app, argc, argv);

  std::optional<std::filesystem::path> out_file;
  if (!out.empty()) out_file = out;
  std::optional<std::filesystem::path> cache_path;
  if (!cache_dir.empty()) cache_path = cache_dir;

  try {
    std::vector<ReportFormat> fmts;
    for (const auto& f : formats)
      for (const auto& part : split(f, ',')) fmts.push_back(report_format_from_string(part));
    const ReportFormat single = fmts.empty() ? ReportFormat::markdown : fmts.front();

    auto need_config = [&] {
      if (config.empty()) throw ConfigError("--config is required for this command");
      return std::filesystem::path(config);
    };

    if (*analyze) {
      cli::AnalyzeCommand c;
      c.corpus = corpus;
      c.config = need_config();
      c.cache_dir = cache_path;
      if (out_file) c.out_dir = *out_file;
      if (!fmts.empty()) c.formats = fmts;
      c.nfc = nfc;
      c.noise_epsilon = epsilon;
      return cli::cmd_analyze(c, std::cout, std::cerr);
    }
    if (*validate) return cli::cmd_validate({corpus, nfc}, std::cout, std::cerr);
    if (*chain) {
      cli::ChainCommand c;
      c.corpus = corpus;
      c.config = need_config();
      c.cache_dir = cache_path;
      c.passage_id = passage;
      c.segmentation = parse_segmentation(segment);
      c.format = single;
      c.out = out_file;
      return cli::cmd_chain(c, std::cout, std::cerr);
    }
    if (*klgap) {
      cli::KlCommand c;
      c.config_a = need_config();
      c.config_b = config_b;
      c.text = text_path;
      c.top_k = top_k;
      c.format = single;
      c.out = out_file;
      return cli::cmd_klgap(c, std::cout, std::cerr);
    }
    if (*relay) {
      cli::RelayCommand c;
      c.config.lexicon = lexicon_file.empty() ? split(lexicon_inline, ',') : read_lexicon(lexicon_file);
      c.config.length = length;
      c.config.seed = seed;
      c.config.rule = rule == "chain" ? RelayConfig::Rule::chain : RelayConfig::Rule::free;
      c.count = count;
      c.oracle_check = oracle_check;
      c.format = single;
      c.out = out_file;
      return cli::cmd_null_relay(c, std::cout, std::cerr);
    }
    if (*funnel) {
      if (probs.size() <= 1) fcfg.pass_probs.assign(dims, probs.empty() ? 0.2 : probs[0]);
      else fcfg.pass_probs = probs;
      return cli::cmd_null_funnel({fcfg, single, out_file}, std::cout, std::cerr);
    }
    if (*cache) {
      if (!cache_path) throw ConfigError("--cache-dir is required for the cache command");
      cli::CacheCommand c;
      c.dir = *cache_path;
      c.action = action == "clear" ? cli::CacheCommand::Action::clear
                 : action == "verify" ? cli::CacheCommand::Action::verify
                                      : cli::CacheCommand::Action::stats;
      return cli::cmd_cache(c, std::cout, std::cerr);
    }
    if (*plot) return cli::cmd_plot({scatter, out_file}, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitInvalidInput;
  }
  return cli::kExitInvalidInput;
}
