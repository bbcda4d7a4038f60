#pragma once

#include <stdexcept>
#include <string>

namespace ppjudge {

/// Base class for all errors thrown by this library. Every error carries a
/// short machine-parseable kind tag so the CLI can emit uniform diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

/// Shape or rank mismatch between operands.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

/// A value is outside its documented range (scores, probabilities, indices).
struct RangeError : Error {
  explicit RangeError(const std::string& msg) : Error("range", msg) {}
};

/// An API precondition was violated (missing gradients, wrong call order).
struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error("contract", msg) {}
};

/// Input is structurally valid but numerically unusable (zero-norm vector,
/// empty sequence).
struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& msg)
      : Error("degenerate_input", msg) {}
};

/// Invalid or inconsistent configuration.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

/// Malformed external data (manifest lines, image files, config files).
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

/// A metric has no defined value on the given inputs (fewer than two points,
/// zero variance).
struct UndefinedMetricError : Error {
  explicit UndefinedMetricError(const std::string& msg)
      : Error("undefined_metric", msg) {}
};

/// Filesystem or I/O failure.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

}  // namespace ppjudge
