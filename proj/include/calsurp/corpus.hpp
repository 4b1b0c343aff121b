#pragma once

// Paired-passage data model: an original passage X, an expert-degraded
// rewrite X', and the shared prior context Y both are scored against.

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "calsurp/error.hpp"
#include "calsurp/hash.hpp"
#include "calsurp/log.hpp"

namespace calsurp {

inline constexpr const char* kCorpusFormatVersion = "1";

enum class Role { original, degraded };

inline const char* to_string(Role r) { return r == Role::original ? "original" : "degraded"; }

struct Passage {
  std::string id;
  std::string language;  // IETF-style tag, e.g. "zh", "en"
  std::string author;
  Role role = Role::original;
  std::string text;

  bool operator==(const Passage&) const = default;
};

struct PairedItem {
  std::string pair_id;
  std::string context;  // may be empty
  Passage original;
  Passage degraded;
  std::set<std::string> dimension_tags;  // inert metadata ("ethos", "dianoia", ...)
  std::string notes;

  bool operator==(const PairedItem&) const = default;
};

struct Corpus {
  std::vector<PairedItem> items;
  nlohmann::json manifest = nlohmann::json::object();

  bool operator==(const Corpus&) const = default;

  const PairedItem* find_pair(std::string_view pair_id) const {
    for (const auto& it : items)
      if (it.pair_id == pair_id) return &it;
    return nullptr;
  }
};

struct Violation {
  std::string pair_id;
  std::string rule;  // "empty-text", "role-mismatch", "duplicate-pair-id", ...
  std::string message;

  bool operator==(const Violation&) const = default;
};

namespace detail {

inline std::string rtrim(std::string_view s) {
  auto end = s.find_last_not_of(" \t\r\n\f\v");
  return end == std::string_view::npos ? std::string{} : std::string(s.substr(0, end + 1));
}

}  // namespace detail

/// Check every corpus invariant. Violations are data: an empty result means valid.
inline std::vector<Violation> validate_corpus(const Corpus& corpus) {
  std::vector<Violation> out;
  if (corpus.items.empty()) out.push_back({"", "empty-corpus", "corpus has no pairs"});

  std::set<std::string> pair_ids;
  std::set<std::string> passage_ids;
  for (const auto& item : corpus.items) {
    const auto& pid = item.pair_id;
    if (pid.empty()) out.push_back({pid, "empty-pair-id", "pair_id is empty"});
    if (!pair_ids.insert(pid).second)
      out.push_back({pid, "duplicate-pair-id", "pair_id '" + pid + "' appears more than once"});

    auto check_passage = [&](const Passage& p, Role slot) {
      const char* slot_name = to_string(slot);
      if (p.role != slot)
        out.push_back({pid, "role-mismatch",
                       std::string("passage with role=") + to_string(p.role) + " in " + slot_name +
                           " slot"});
      if (detail::rtrim(p.text).empty())
        out.push_back({pid, "empty-text", std::string(slot_name) + " passage text is empty"});
      if (p.id.empty()) {
        out.push_back({pid, "empty-passage-id", std::string(slot_name) + " passage id is empty"});
      } else if (!passage_ids.insert(p.id).second) {
        out.push_back({pid, "duplicate-passage-id", "passage id '" + p.id + "' is not unique"});
      }
    };
    check_passage(item.original, Role::original);
    check_passage(item.degraded, Role::degraded);
  }
  return out;
}

/// NFC-normalize a UTF-8 string through ICU.
inline std::string nfc_normalize(const std::string& text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString normalized = nfc->normalize(icu::UnicodeString::fromUTF8(text), status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

struct LoadOptions {
  bool nfc = false;  // off by default: logprobs are tokenizer-sensitive
};

namespace detail {

template <typename T>
T required(const nlohmann::json& obj, const char* key, const std::string& pair_id) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", pair_id);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type", pair_id);
  }
}

inline Passage passage_from_json(const nlohmann::json& j, Role slot, const std::string& pair_id) {
  if (!j.is_object()) throw ParseError(std::string(to_string(slot)) + " must be an object", pair_id);
  Passage p;
  p.id = required<std::string>(j, "id", pair_id);
  p.language = required<std::string>(j, "language", pair_id);
  p.author = required<std::string>(j, "author", pair_id);
  p.text = required<std::string>(j, "text", pair_id);
  p.role = slot;
  if (auto it = j.find("role"); it != j.end()) {
    auto r = it->is_string() ? it->get<std::string>() : std::string{};
    if (r == "original") p.role = Role::original;
    else if (r == "degraded") p.role = Role::degraded;
    else throw ParseError("role must be \"original\" or \"degraded\"", pair_id);
  }
  return p;
}

inline nlohmann::ordered_json passage_to_json(const Passage& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["role"] = to_string(p.role);
  j["language"] = p.language;
  j["author"] = p.author;
  j["text"] = p.text;
  return j;
}

}  // namespace detail

/// Parse corpus JSON without enforcing the invariants (see validate_corpus).
inline Corpus parse_corpus(std::string_view bytes, const LoadOptions& opts = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed corpus file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("corpus root must be an object");
  auto version = detail::required<std::string>(doc, "format_version", "");
  if (version != kCorpusFormatVersion)
    throw ParseError("unsupported format_version '" + version + "' (expected \"1\")");

  Corpus corpus;
  if (auto it = doc.find("manifest"); it != doc.end()) {
    if (!it->is_object()) throw ParseError("manifest must be an object");
    corpus.manifest = *it;
  }
  auto pairs = doc.find("pairs");
  if (pairs == doc.end() || !pairs->is_array()) throw ParseError("missing 'pairs' array");

  for (std::size_t i = 0; i < pairs->size(); ++i) {
    const auto& rec = (*pairs)[i];
    if (!rec.is_object()) throw ParseError("pair record " + std::to_string(i) + " is not an object");
    PairedItem item;
    item.pair_id = detail::required<std::string>(rec, "pair_id", "#" + std::to_string(i));
    const auto& pid = item.pair_id;
    item.context = detail::required<std::string>(rec, "context", pid);
    item.original = detail::passage_from_json(rec.value("original", nlohmann::json{}), Role::original, pid);
    item.degraded = detail::passage_from_json(rec.value("degraded", nlohmann::json{}), Role::degraded, pid);
    if (auto t = rec.find("dimension_tags"); t != rec.end() && !t->is_null()) {
      if (!t->is_array()) throw ParseError("dimension_tags must be an array of strings", pid);
      for (const auto& tag : *t) {
        if (!tag.is_string()) throw ParseError("dimension_tags must be an array of strings", pid);
        item.dimension_tags.insert(tag.get<std::string>());
      }
    }
    if (auto n = rec.find("notes"); n != rec.end() && !n->is_null()) {
      if (!n->is_string()) throw ParseError("notes must be a string", pid);
      item.notes = n->get<std::string>();
    }
    if (opts.nfc) {
      item.context = nfc_normalize(item.context);
      item.original.text = nfc_normalize(item.original.text);
      item.degraded.text = nfc_normalize(item.degraded.text);
    }
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Throws ValidationError naming each offending pair when invariants fail.
inline void enforce_valid(const Corpus& corpus) {
  auto violations = validate_corpus(corpus);
  if (violations.empty()) return;
  std::string msg = "corpus validation failed:";
  for (const auto& v : violations)
    msg += "\n  [" + v.rule + "] pair '" + v.pair_id + "': " + v.message;
  throw ValidationError(msg);
}

/// Parse and validate. Empty contexts are accepted with a warning.
inline Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  if (!std::filesystem::exists(path)) throw ParseError("corpus file not found: " + path.string());
  Corpus corpus = parse_corpus(read_file(path), opts);
  enforce_valid(corpus);
  for (const auto& item : corpus.items)
    if (item.context.empty())
      log::warn("pair '" + item.pair_id + "' has an empty context; contextualized scoring equals bare");
  return corpus;
}

inline std::string serialize_corpus(const Corpus& corpus) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kCorpusFormatVersion;
  doc["manifest"] = nlohmann::ordered_json::parse(corpus.manifest.dump());
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& item : corpus.items) {
    nlohmann::ordered_json rec;
    rec["pair_id"] = item.pair_id;
    rec["context"] = item.context;
    rec["original"] = detail::passage_to_json(item.original);
    rec["degraded"] = detail::passage_to_json(item.degraded);
    if (!item.dimension_tags.empty()) rec["dimension_tags"] = item.dimension_tags;
    rec["notes"] = item.notes;
    pairs.push_back(std::move(rec));
  }
  doc["pairs"] = std::move(pairs);
  return doc.dump(2) + "\n";
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_corpus(corpus);
}

/// SHA-256 of the corpus file bytes, for run manifests.
inline std::string corpus_checksum(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace calsurp
