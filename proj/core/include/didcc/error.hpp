#pragma once

#include <stdexcept>
#include <string>

namespace didcc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid tuning or kernel parameter (nonpositive bandwidth, lambda outside [0,1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector lengths or covariate layouts.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Failure while computing an estimator (empty cell, rank deficiency, non-finite fit).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Every bandwidth candidate produced a non-finite criterion.
class SelectionError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// The Hausman contrast has (numerically) zero variance.
class DegenerateTestError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data file.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace didcc
