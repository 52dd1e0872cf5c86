#pragma once

#include <stdexcept>
#include <string>

namespace pvs {

/// Input outside an operation's mathematical domain (negative depth, t >= R, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid run configuration, detected before any work starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Optimisation diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trained model produced or contained something unusable.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File read/write or parse failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pvs
