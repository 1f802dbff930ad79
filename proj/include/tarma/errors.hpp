#pragma once

#include <stdexcept>
#include <string>

namespace tarma {

/// Invalid model specification or operation precondition.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Estimation failed (degenerate data, non-convergence where convergence is required).
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Information matrix ill-conditioned at every candidate threshold.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Monte Carlo tabulation failed (e.g. excessive redraw rate).
class TabulationError : public std::runtime_error {
 public:
  explicit TabulationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File read/write/parse failures, including table checksum and version mismatches.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Resuming an experiment report whose seed or config does not match.
class ResumeMismatchError : public std::runtime_error {
 public:
  explicit ResumeMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tarma
