#pragma once

// Provider configuration files (JSON). The `kind` field selects the backend:
//
//   {"kind": "remote", "endpoint": "http://localhost:8000/v1", "model_id": "Qwen/Qwen1.5-7B",
//    "api_key_env": "CALSURP_API_KEY", "timeout": 120, "max_retries": 3, "parallelism_cap": 4,
//    "separator": "\n\n", "context_window_tokens": 32768, "overflow": "error"}
//   {"kind": "ngram", "order": 2, "smoothing": {"kind": "add_k", "k": 0.1},
//    "training_files": ["train.txt"], "separator": "\n\n"}
//   {"kind": "replay", "records_file": "records.json"}
//
// Relative paths resolve against the config file's directory.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "calsurp/cache.hpp"
#include "calsurp/corpus.hpp"
#include "calsurp/error.hpp"
#include "calsurp/ngram.hpp"
#include "calsurp/remote.hpp"
#include "calsurp/replay.hpp"

namespace calsurp {

struct LoadedProvider {
  ProviderPtr provider;
  std::shared_ptr<const NGramModel> ngram;  // set for kind=ngram
  nlohmann::json manifest_config;           // redacted, with training-file checksums
};

/// Replace secret-looking values so configs can be written to manifests.
inline nlohmann::json redact_secrets(nlohmann::json j) {
  if (j.is_object()) {
    for (auto& [k, v] : j.items()) {
      static const std::set<std::string> kSecretKeys = {"api_key", "apikey", "authorization", "password",
                                                        "secret", "token", "access_token", "bearer"};
      bool secret = kSecretKeys.contains(k);
      v = secret ? nlohmann::json("<redacted>") : redact_secrets(v);
    }
  } else if (j.is_array()) {
    for (auto& v : j) v = redact_secrets(v);
  }
  return j;
}

namespace detail {

inline Smoothing smoothing_from_json(const nlohmann::json& j) {
  if (j.is_null() || (j.is_string() && j == "none")) return Smoothing::none();
  if (j.is_object() && j.value("kind", "") == "add_k") return Smoothing::add_k(j.at("k").get<double>());
  if (j.is_object() && j.value("kind", "") == "none") return Smoothing::none();
  throw ConfigError("smoothing must be \"none\" or {\"kind\": \"add_k\", \"k\": <real>}");
}

inline std::optional<std::size_t> optional_size(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::size_t>();
}

}  // namespace detail

inline std::shared_ptr<const NGramModel> ngram_from_config(const nlohmann::json& j, const std::filesystem::path& base,
                                                           nlohmann::json* manifest = nullptr) {
  std::vector<std::string> docs;
  if (j.contains("training_text")) docs.push_back(j["training_text"].get<std::string>());
  if (j.contains("training_files")) {
    nlohmann::json sums = nlohmann::json::object();
    for (const auto& f : j["training_files"]) {
      auto p = base / f.get<std::string>();
      docs.push_back(read_file(p));
      sums[f.get<std::string>()] = sha256_hex(docs.back());
    }
    if (manifest) (*manifest)["training_file_sha256"] = sums;
  }
  if (docs.empty()) throw ConfigError("ngram config needs training_text or training_files");
  auto model = train_ngram(std::span<const std::string>(docs), j.value("order", std::size_t{2}),
                           detail::smoothing_from_json(j.value("smoothing", nlohmann::json(nullptr))));
  if (manifest) (*manifest)["model_id"] = model.model_id();
  return std::make_shared<const NGramModel>(std::move(model));
}

inline ProviderConfig remote_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  c.endpoint = j.at("endpoint").get<std::string>();
  c.model_id = j.at("model_id").get<std::string>();
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.api_key = j.value("api_key", std::string{});
  c.timeout_s = j.value("timeout", c.timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.parallelism_cap = j.value("parallelism_cap", c.parallelism_cap);
  c.separator = j.value("separator", c.separator);
  c.context_window_tokens = detail::optional_size(j, "context_window_tokens");
  c.overflow = overflow_policy_from_string(j.value("overflow", std::string("error")));
  auto unit = j.value("offset_unit", std::string("codepoint"));
  if (unit != "codepoint" && unit != "byte") throw ConfigError("offset_unit must be \"codepoint\" or \"byte\"");
  c.offset_unit = unit == "byte" ? OffsetUnit::byte : OffsetUnit::codepoint;
  auto echo = j.value("echo_mode", std::string("echo_only"));
  if (echo != "echo_only" && echo != "echo_plus_one")
    throw ConfigError("echo_mode must be \"echo_only\" or \"echo_plus_one\"");
  c.echo_mode = echo == "echo_only" ? EchoMode::echo_only : EchoMode::echo_plus_one;
  c.backoff_initial_s = j.value("backoff_initial", c.backoff_initial_s);
  c.validate();
  return c;
}

inline LoadedProvider make_provider(const nlohmann::json& j, const std::filesystem::path& base = ".") {
  LoadedProvider out;
  out.manifest_config = redact_secrets(j);
  const std::string kind = j.value("kind", std::string{});
  try {
    if (kind == "remote") {
      out.provider = std::make_shared<RemoteProvider>(remote_config_from_json(j));
    } else if (kind == "ngram") {
      out.ngram = ngram_from_config(j, base, &out.manifest_config);
      LocalOptions opts;
      opts.separator = j.value("separator", opts.separator);
      opts.context_window_tokens = detail::optional_size(j, "context_window_tokens");
      opts.overflow = overflow_policy_from_string(j.value("overflow", std::string("error")));
      out.provider = std::make_shared<LocalProvider>(out.ngram, opts);
    } else if (kind == "replay") {
      if (j.contains("records_file")) {
        auto path = base / j["records_file"].get<std::string>();
        out.manifest_config["records_file_sha256"] = sha256_hex(read_file(path));
        out.provider = std::make_shared<ReplayProvider>(ReplayProvider::from_file(path));
      } else {
        out.provider = std::make_shared<ReplayProvider>(ReplayProvider::from_json(j));
      }
    } else {
      throw ConfigError("provider config 'kind' must be remote, ngram or replay (got '" + kind + "')");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad provider config: ") + e.what());
  }
  return out;
}

inline LoadedProvider load_provider(const std::filesystem::path& path,
                                    const std::optional<std::filesystem::path>& cache_dir = std::nullopt) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("provider config " + path.string() + " is not valid JSON: " + e.what());
  }
  auto loaded = make_provider(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  if (cache_dir) {
    loaded.provider = cached(loaded.provider, *cache_dir);
    loaded.manifest_config["cache_dir"] = cache_dir->string();
  }
  return loaded;
}

}  // namespace calsurp
