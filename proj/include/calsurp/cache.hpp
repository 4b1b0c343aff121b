#pragma once

// Content-addressed on-disk cache of scoring results. One file per request:
// <cache_dir>/<request fingerprint>.json holding the serialized ScoredText and
// its SHA-256. Corrupt entries are evicted and refetched.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "calsurp/corpus.hpp"
#include "calsurp/error.hpp"
#include "calsurp/hash.hpp"
#include "calsurp/log.hpp"
#include "calsurp/provider.hpp"

namespace calsurp {

inline constexpr const char* kCacheEntryFormat = "calsurp-cache/1";

struct CacheVerifyReport {
  std::size_t checked = 0;
  std::vector<std::string> evicted;  // keys of corrupt entries that were removed
};

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw Error("cache directory not usable: " + dir_.string());
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".json"); }

  /// Cached payload for `key`; a corrupt entry is removed and reported as a miss.
  std::optional<ScoredText> load(const std::string& key) const {
    std::lock_guard lock(mutex_for(key));
    auto path = path_for(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    auto st = read_entry(path, key);
    if (!st) {
      log::warn("evicting corrupt cache entry " + path.string());
      std::filesystem::remove(path);
    }
    return st;
  }

  void store(const std::string& key, const ScoredText& st) const {
    std::lock_guard lock(mutex_for(key));
    std::string payload = serialize(st);
    nlohmann::json entry = {{"format", kCacheEntryFormat}, {"key", key}, {"checksum", sha256_hex(payload)},
                            {"payload", payload}};
    auto path = path_for(key);
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid()) + "-" + std::to_string(tmp_counter_++);
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write cache entry " + tmp.string());
      out << entry.dump();
    }
    std::filesystem::rename(tmp, path);  // last writer wins; values are deterministic
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      out.push_back(e.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t size() const { return keys().size(); }

  std::uintmax_t bytes() const {
    std::uintmax_t total = 0;
    for (const auto& k : keys()) total += std::filesystem::file_size(path_for(k));
    return total;
  }

  std::size_t clear() const {
    std::size_t n = 0;
    for (const auto& k : keys()) n += std::filesystem::remove(path_for(k)) ? 1 : 0;
    return n;
  }

  /// Check every entry's checksum; corrupt ones are evicted.
  CacheVerifyReport verify() const {
    CacheVerifyReport rep;
    for (const auto& k : keys()) {
      std::lock_guard lock(mutex_for(k));
      ++rep.checked;
      if (!read_entry(path_for(k), k)) {
        std::filesystem::remove(path_for(k));
        rep.evicted.push_back(k);
      }
    }
    return rep;
  }

 private:
  static std::optional<ScoredText> read_entry(const std::filesystem::path& path, const std::string& key) {
    try {
      auto entry = nlohmann::json::parse(read_file(path));
      if (entry.at("format") != kCacheEntryFormat || entry.at("key") != key) return std::nullopt;
      const auto payload = entry.at("payload").get<std::string>();
      if (sha256_hex(payload) != entry.at("checksum").get<std::string>()) return std::nullopt;
      return deserialize_scored_text(payload);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  std::mutex& mutex_for(const std::string& key) const {
    return stripes_[std::hash<std::string>{}(key) % stripes_.size()];
  }

  std::filesystem::path dir_;
  mutable std::array<std::mutex, 16> stripes_;
  mutable std::atomic<std::uint64_t> tmp_counter_{0};
};

/// Wraps any provider with the on-disk cache. The key is the request fingerprint.
class CachedProvider : public Provider {
 public:
  CachedProvider(ProviderPtr inner, std::filesystem::path cache_dir)
      : inner_(std::move(inner)), cache_(std::move(cache_dir)) {
    if (!inner_) throw ConfigError("CachedProvider needs a provider");
  }

  std::string model_id() const override { return inner_->model_id(); }
  nlohmann::json parameters() const override { return inner_->parameters(); }
  std::string separator() const override { return inner_->separator(); }
  std::size_t parallelism_cap() const override { return inner_->parallelism_cap(); }

  const ResponseCache& cache() const { return cache_; }
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

  ScoredText score_bare(std::string_view text) const override {
    return fetch(Condition::bare, "", text, [&] { return inner_->score_bare(text); });
  }

  ScoredText score_with_context(std::string_view context, std::string_view text) const override {
    return fetch(Condition::contextualized, context, text, [&] { return inner_->score_with_context(context, text); });
  }

 private:
  template <typename F>
  ScoredText fetch(Condition c, std::string_view context, std::string_view text, F&& delegate) const {
    const std::string key = request_fingerprint(*inner_, c, context, text);
    if (auto hit = cache_.load(key)) {
      ++hits_;
      return *hit;
    }
    ++misses_;
    ScoredText st = delegate();
    cache_.store(key, st);
    return st;
  }

  ProviderPtr inner_;
  ResponseCache cache_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

/// `cached(provider, dir)`: convenience wrapper.
inline ProviderPtr cached(ProviderPtr provider, const std::filesystem::path& cache_dir) {
  return std::make_shared<CachedProvider>(std::move(provider), cache_dir);
}

}  // namespace calsurp
