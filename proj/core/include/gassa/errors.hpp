#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gassa {

/// Base class for all library errors. Carries a stable, machine-parsable
/// category tag alongside the human-readable message; the CLI prints errors
/// as "error: <category>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Input expected to be symmetric positive definite is not (asymmetric,
/// indefinite, or has an eigenvalue below the SPD floor).
class NotSpdError : public Error {
 public:
  explicit NotSpdError(const std::string& message) : Error("NotSpd", message) {}
};

/// Operands have incompatible dimensions.
class DimMismatchError : public Error {
 public:
  explicit DimMismatchError(const std::string& message)
      : Error("DimMismatch", message) {}
};

/// An iterative routine exhausted its iteration budget without meeting its
/// convergence tolerance. Carries the final residual for diagnostics.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& message, int iterations, double residual)
      : Error("NoConvergence", message),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// A congruence/whitening transform is numerically singular
/// (condition number above the supported cap).
class SingularTransformError : public Error {
 public:
  explicit SingularTransformError(const std::string& message)
      : Error("SingularTransform", message) {}
};

/// Structural dimension parameters are invalid (e.g. subspace dimension
/// not strictly between 0 and the ambient dimension).
class BadDimsError : public Error {
 public:
  explicit BadDimsError(const std::string& message) : Error("BadDims", message) {}
};

/// A matrix expected to have full column rank is rank deficient.
class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(const std::string& message)
      : Error("RankDeficient", message) {}
};

/// Not enough data to perform the requested operation
/// (e.g. fitting on fewer than two covariance matrices).
class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& message)
      : Error("InsufficientData", message) {}
};

/// A data segment cannot produce a positive definite covariance estimate
/// (too few samples or zero-variance channels) and shrinkage is disabled.
class DegenerateSegmentError : public Error {
 public:
  explicit DegenerateSegmentError(const std::string& message)
      : Error("DegenerateSegment", message) {}
};

/// Random generation failed to satisfy a validity constraint within the
/// retry budget (e.g. well-conditioned mixing matrix).
class GenerationFailureError : public Error {
 public:
  explicit GenerationFailureError(const std::string& message)
      : Error("GenerationFailure", message) {}
};

/// Epoching parameters are invalid (window longer than the signal,
/// non-positive length, overlap outside [0, 1)).
class BadWindowError : public Error {
 public:
  explicit BadWindowError(const std::string& message)
      : Error("BadWindow", message) {}
};

/// A classifier was given a class with no training examples.
class EmptyClassError : public Error {
 public:
  explicit EmptyClassError(const std::string& message)
      : Error("EmptyClass", message) {}
};

/// A run configuration failed validation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("Config", message) {}
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("Io", message) {}
};

/// Serialized input does not match the expected schema
/// (missing/unknown keys, wrong types, inconsistent sizes).
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error("Schema", message) {}
};

}  // namespace gassa
