#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace factloop {

/// Precondition or argument contract broken by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem too large for the requested algorithm (e.g. brute-force enumeration).
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Partition function is zero; the model defines no distribution.
class DegenerateModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A relation refers to an atom or context that does not exist.
class ReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network or provider failure. `retryable()` is true for failures that a
/// repeat of the same idempotent request may fix.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// Strict replay was requested but the store has no entry for the request.
class ReplayMissError : public std::runtime_error {
 public:
  ReplayMissError(const std::string& key, const std::string& what)
      : std::runtime_error(what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Model output that could not be parsed; keeps the raw text for diagnosis.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Stage { Atomize, Revise, Retrieve, Relate, Infer, Refine, Judge, Synthesize };

std::string_view stage_name(Stage stage) noexcept;

/// Failure inside one pipeline stage. The message is prefixed with the stage
/// tag; `cause()` keeps the original message.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& cause)
      : std::runtime_error(std::string(stage_name(stage)) + ": " + cause),
        stage_(stage),
        cause_(cause) {}
  Stage stage() const noexcept { return stage_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  Stage stage_;
  std::string cause_;
};

}  // namespace factloop
