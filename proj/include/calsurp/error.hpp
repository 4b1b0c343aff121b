#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace calsurp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed corpus file (bad JSON, missing field, wrong type).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::string pair_id = {})
      : Error(pair_id.empty() ? what : "pair '" + pair_id + "': " + what),
        pair_id_(std::move(pair_id)) {}
  const std::string& pair_id() const noexcept { return pair_id_; }

 private:
  std::string pair_id_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure while obtaining log-probabilities from a scoring backend.
class ProviderError : public Error {
 public:
  enum class Kind {
    transport,
    unsupported_backend,
    non_finite_logprob,
    context_overflow,
    zero_probability,
    out_of_vocabulary,
    empty_target,
    bad_response,
    missing_record,
  };

  ProviderError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Estimator precondition violations (condition mismatch, empty input, ...).
class EstimatorError : public Error {
 public:
  using Error::Error;
};

class SegmentationError : public Error {
 public:
  using Error::Error;
};

/// Training text too short for the requested n-gram order.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A provider error annotated with the pair and passage role it came from.
class PairError : public Error {
 public:
  PairError(std::string pair_id, std::string role, const std::string& what,
            std::optional<ProviderError::Kind> kind = std::nullopt)
      : Error("pair '" + pair_id + "' (" + role + "): " + what),
        pair_id_(std::move(pair_id)),
        role_(std::move(role)),
        kind_(kind) {}
  const std::string& pair_id() const noexcept { return pair_id_; }
  const std::string& role() const noexcept { return role_; }
  /// Set when the underlying failure was a ProviderError.
  std::optional<ProviderError::Kind> provider_kind() const noexcept { return kind_; }

 private:
  std::string pair_id_;
  std::string role_;
  std::optional<ProviderError::Kind> kind_;
};

}  // namespace calsurp
