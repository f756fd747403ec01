#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erisk {

/// Root of every error thrown by the workbench.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that is well-formed but violates a contract (duplicate ids,
/// wrong item counts, single-class training data, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line` is 1-based, 0 when not applicable.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Unknown provider ids, missing data files, inconsistent settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A keyed lookup (embedding cache, emotion cache) found nothing.
class LookupError : public Error {
 public:
  LookupError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Network failure or a non-2xx HTTP reply. `status` is 0 when no reply.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Round protocol violations (incomplete rounds, flipped alerts, ...).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class AuthError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

}  // namespace erisk
