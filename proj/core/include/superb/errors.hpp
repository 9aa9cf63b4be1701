#pragma once

#include <stdexcept>
#include <string>

namespace superb {

// Malformed or inconsistent input data (files, records, invariants).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Bad parameters, unknown config keys, violated preconditions.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures of an LLM provider. Each kind is distinguishable so callers can
// decide between retry, abort, and degrade policies.
class ProviderError : public std::runtime_error {
public:
  enum class Kind {
    credential_missing,
    fixture_miss,
    retries_exhausted,
    store_unwritable,
    bad_response,
  };

  ProviderError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

// Model output that does not match the grammar of its prompt template.
class ParseError : public std::runtime_error {
public:
  // Stable machine-readable error kinds for diagnostics sidecars.
  ParseError(std::string kind, const std::string& what, std::string raw = {})
      : std::runtime_error(what), kind_(std::move(kind)), raw_(std::move(raw)) {}

  const std::string& kind() const { return kind_; }
  const std::string& raw() const { return raw_; }

private:
  std::string kind_;
  std::string raw_;
};

}  // namespace superb
