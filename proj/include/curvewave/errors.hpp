#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curvewave {

/// Base for every error raised by the library. `kind()` is the stable,
/// machine-readable tag the CLI writes into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// Result not representable in double precision.
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("range", what) {}
};

/// Iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error("convergence", what) {}
};

/// A mode table does not cover the spectral support of a packet.
class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& what) : Error("coverage", what) {}
};

/// Fit residual or sampling geometry unacceptable.
class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error("fit", what) {}
};

/// Malformed input file or configuration.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

}  // namespace curvewave
