#pragma once

#include <stdexcept>
#include <string>

namespace cmc {

/// Invalid user-supplied data (malformed files, broken invariants,
/// out-of-range parameters). Maps to process exit code 2 in the CLI.
class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

/// A model/policy/reward object violates its structural invariants.
class ValidationError : public InvalidInputError {
 public:
  explicit ValidationError(const std::string& what) : InvalidInputError(what) {}
};

/// A configuration object (experiment, policy schedule) is unusable.
class ConfigError : public InvalidInputError {
 public:
  explicit ConfigError(const std::string& what) : InvalidInputError(what) {}
};

/// Mathematical precondition violated (e.g. occupation measure not strictly
/// positive where required).
class DomainError : public InvalidInputError {
 public:
  explicit DomainError(const std::string& what) : InvalidInputError(what) {}
};

/// Not enough data to run a diagnostic (too few replications / grid points).
class DiagnosticError : public InvalidInputError {
 public:
  explicit DiagnosticError(const std::string& what) : InvalidInputError(what) {}
};

/// Requested instance exceeds the exhaustive-enumeration budget.
/// Maps to process exit code 3 in the CLI.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// The logged data cannot support the requested inference (e.g. a needed
/// state-action pair was never visited). Maps to process exit code 4.
class InferenceImpossibleError : public std::runtime_error {
 public:
  explicit InferenceImpossibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cmc
