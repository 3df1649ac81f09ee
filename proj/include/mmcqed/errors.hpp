#pragma once

#include <stdexcept>
#include <string>

namespace mmcqed {

/// Invalid physical parameters, cutoffs, frames or serialized configs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arithmetic or expectation between objects living on different spaces.
class SpaceMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical method could not deliver a result at the requested accuracy.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Liouvillian kernel is not one-dimensional.
class NonUniqueSteadyState : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Input data is unsuitable for spectral analysis or fitting.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmcqed
