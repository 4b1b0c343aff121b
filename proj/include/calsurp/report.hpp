#pragma once

// Report assembly and rendering: per-pair rows, summary block, scatter
// data and a static SVG scatter with the y = x diagonal. Human formats round
// to three decimals at render time; the structured format keeps full precision.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "calsurp/corpus.hpp"
#include "calsurp/error.hpp"
#include "calsurp/estimator.hpp"

namespace calsurp {

enum class ReportFormat { csv, markdown, structured };

inline ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  if (s == "structured" || s == "json") return ReportFormat::structured;
  throw ConfigError("unknown format '" + s + "' (csv, markdown, structured)");
}

struct ReportRow {
  std::size_t number = 0;  // 1-based position in the corpus
  PairResult result;
};

struct PairFailure {
  std::string pair_id;
  std::string message;
};

struct Report {
  std::vector<ReportRow> rows;
  std::optional<SummaryStats> summary;  // absent when every pair failed
  std::vector<PairFailure> failures;
};

/// Rows sorted by pair_id; `number` keeps the corpus position.
inline Report build_report(const Corpus& corpus, std::vector<PairResult> results, std::vector<PairFailure> failures = {}) {
  Report rep;
  for (auto& r : results) {
    std::size_t number = 0;
    for (std::size_t i = 0; i < corpus.items.size(); ++i)
      if (corpus.items[i].pair_id == r.pair_id) number = i + 1;
    rep.rows.push_back({number, std::move(r)});
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.result.pair_id < b.result.pair_id; });
  std::sort(failures.begin(), failures.end(),
            [](const PairFailure& a, const PairFailure& b) { return a.pair_id < b.pair_id; });
  rep.failures = std::move(failures);
  if (!rep.rows.empty()) {
    std::vector<PairResult> sorted;
    for (const auto& row : rep.rows) sorted.push_back(row.result);
    rep.summary = summarize(sorted);
  }
  return rep;
}

/// Three-decimal rendering; "-0.000" is printed as "0.000".
inline std::string fmt3(double v, bool show_plus = false) {
  char buf[64];
  std::snprintf(buf, sizeof buf, show_plus ? "%+.3f" : "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = show_plus ? "+0.000" : "0.000";
  return s;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline std::string render_csv(const Report& rep) {
  std::ostringstream os;
  os << "#,pair_id,language,author,H(X),H(X|Y),I(X;Y),H(X'),H(X'|Y),I(X';Y),delta_I,supports\n";
  for (const auto& row : rep.rows) {
    const auto& r = row.result;
    os << row.number << ',' << detail::csv_escape(r.pair_id) << ',' << detail::csv_escape(r.language) << ','
       << detail::csv_escape(r.author) << ',' << fmt3(r.original.h_bare) << ',' << fmt3(r.original.h_cond) << ','
       << fmt3(r.original.mi) << ',' << fmt3(r.degraded.h_bare) << ',' << fmt3(r.degraded.h_cond) << ','
       << fmt3(r.degraded.mi) << ',' << fmt3(r.delta_i, true) << ',' << (r.supports_prediction ? "true" : "false")
       << '\n';
  }
  return os.str();
}

inline std::string render_summary_csv(const SummaryStats& s) {
  std::ostringstream os;
  os << "metric,value\n";
  os << "overall_validation," << s.validation_ratio << '\n';
  for (const auto& [lang, b] : s.per_language)
    os << "subset_" << detail::csv_escape(lang) << ',' << ratio_string(b.supported, b.count) << '\n';
  os << "mean_I_high," << fmt3(s.mean_i_high) << '\n';
  os << "mean_I_degraded," << fmt3(s.mean_i_degraded) << '\n';
  os << "mean_delta_I," << fmt3(s.mean_delta, true) << '\n';
  return os.str();
}

inline std::string render_markdown(const Report& rep) {
  std::ostringstream os;
  os << "## Mutual information per pair (bit/token)\n\n";
  os << "| # | Pair | Lang. | Author | H(X) | H(X\\|Y) | I(X;Y) | H(X') | H(X'\\|Y) | I(X';Y) | ΔI |\n";
  os << "|---:|---|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& row : rep.rows) {
    const auto& r = row.result;
    os << "| " << row.number << " | " << detail::md_escape(r.pair_id) << " | " << detail::md_escape(r.language)
       << " | " << detail::md_escape(r.author) << " | " << fmt3(r.original.h_bare) << " | "
       << fmt3(r.original.h_cond) << " | " << fmt3(r.original.mi) << " | " << fmt3(r.degraded.h_bare) << " | "
       << fmt3(r.degraded.h_cond) << " | " << fmt3(r.degraded.mi) << " | " << fmt3(r.delta_i, true) << " |\n";
  }
  if (rep.summary) {
    const auto& s = *rep.summary;
    os << "\n## Summary\n\n| Metric | Value |\n|---|---:|\n";
    os << "| Overall validation rate | " << s.validation_ratio << " |\n";
    for (const auto& [lang, b] : s.per_language)
      os << "| " << detail::md_escape(lang) << " subset | " << ratio_string(b.supported, b.count) << " |\n";
    os << "| Mean I(X;Y) (high-quality) | " << fmt3(s.mean_i_high) << " bit |\n";
    os << "| Mean I(X';Y) (degraded) | " << fmt3(s.mean_i_degraded) << " bit |\n";
    os << "| Mean ΔI | " << fmt3(s.mean_delta, true) << " bit |\n";
  }
  if (!rep.failures.empty()) {
    os << "\n## Failed pairs\n\n";
    for (const auto& f : rep.failures) os << "- `" << f.pair_id << "`: " << f.message << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const MIResult& m) {
  return {{"h_bare", m.h_bare},
          {"h_cond", m.h_cond},
          {"mi", m.mi},
          {"token_count_bare", m.token_count_bare},
          {"token_count_cond", m.token_count_cond},
          {"noise_flag", m.noise_flag}};
}

inline nlohmann::json to_json(const SummaryStats& s) {
  nlohmann::json langs = nlohmann::json::object();
  for (const auto& [lang, b] : s.per_language)
    langs[lang] = {{"count", b.count}, {"supported", b.supported}, {"rate", b.rate()}};
  return {{"pair_count", s.pair_count},
          {"supported_count", s.supported_count},
          {"validation_rate", s.validation_rate},
          {"validation_ratio", s.validation_ratio},
          {"mean_i_high", s.mean_i_high},
          {"mean_i_degraded", s.mean_i_degraded},
          {"mean_delta", s.mean_delta},
          {"per_language", langs}};
}

inline nlohmann::json render_structured(const Report& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : rep.rows) {
    const auto& r = row.result;
    rows.push_back({{"number", row.number},
                    {"pair_id", r.pair_id},
                    {"language", r.language},
                    {"author", r.author},
                    {"original", to_json(r.original)},
                    {"degraded", to_json(r.degraded)},
                    {"delta_i", r.delta_i},
                    {"supports_prediction", r.supports_prediction}});
  }
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : rep.failures) fails.push_back({{"pair_id", f.pair_id}, {"message", f.message}});
  return {{"rows", rows},
          {"summary", rep.summary ? to_json(*rep.summary) : nlohmann::json(nullptr)},
          {"failures", fails}};
}

// ---------------------------------------------------------------------------
// Scatter (I' on x, I on y)

struct ScatterPoint {
  std::string pair_id;
  double i_degraded = 0.0;
  double i_original = 0.0;
  bool supports = false;  // I > I'
};

inline std::vector<ScatterPoint> scatter_points(const Report& rep) {
  std::vector<ScatterPoint> pts;
  for (const auto& row : rep.rows) {
    const auto& r = row.result;
    pts.push_back({r.pair_id, r.degraded.mi, r.original.mi, r.original.mi > r.degraded.mi});
  }
  return pts;
}

/// Tab-delimited: pair_id, i_degraded, i_original, supports.
inline std::string render_scatter_tsv(const std::vector<ScatterPoint>& pts) {
  std::ostringstream os;
  os << "pair_id\ti_degraded\ti_original\tsupports\n";
  char buf[128];
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t%s\n", p.i_degraded, p.i_original, p.supports ? "true" : "false");
    os << p.pair_id << buf;
  }
  return os.str();
}

inline std::vector<ScatterPoint> parse_scatter_tsv(const std::string& text) {
  std::vector<ScatterPoint> pts;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == '\t') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (f.size() != 4) throw ParseError("scatter line needs 4 tab-separated fields: " + line);
    try {
      pts.push_back({f[0], std::stod(f[1]), std::stod(f[2]), f[3] == "true"});
    } catch (const std::exception&) {
      throw ParseError("bad number in scatter line: " + line);
    }
  }
  return pts;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Static scatter plot: x = I(X';Y), y = I(X;Y), dashed y = x diagonal.
inline std::string render_scatter_svg(const std::vector<ScatterPoint>& pts) {
  const double W = 480, H = 480, M = 60;
  double lo = 0.0, hi = 0.1;
  for (const auto& p : pts) {
    lo = std::min({lo, p.i_degraded, p.i_original});
    hi = std::max({hi, p.i_degraded, p.i_original});
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto sx = [&](double v) { return M + (v - lo) / (hi - lo) * (W - 2 * M); };
  auto sy = [&](double v) { return H - M - (v - lo) / (hi - lo) * (H - 2 * M); };

  std::ostringstream os;
  char buf[256];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  os << "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", M, M,
                W - 2 * M, H - 2 * M);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n",
                sx(lo), sy(lo), sx(hi), sy(hi));
  os << buf;
  for (int i = 0; i <= 4; ++i) {
    double v = lo + (hi - lo) * i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"10\" text-anchor=\"middle\">%.2f</text>\n"
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"10\" text-anchor=\"end\">%.2f</text>\n",
                  sx(v), H - M + 16, v, M - 6, sy(v) + 3, v);
    os << buf;
  }
  os << "<text x=\"240\" y=\"465\" font-size=\"12\" text-anchor=\"middle\">I(X';Y) degraded, bit/token</text>\n";
  os << "<text x=\"16\" y=\"240\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 240)\">"
        "I(X;Y) original, bit/token</text>\n";
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\">", sx(p.i_degraded),
                  sy(p.i_original), p.supports ? "#1f77b4" : "#d62728");
    os << buf << "<title>" << detail::xml_escape(p.pair_id) << "</title></circle>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace calsurp
