#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cpr {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed inputs: dimension mismatch, profile outside the strategy box,
/// non-positive capacities.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Best-response dynamics did not settle within the iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}

  /// Sup-norm change of every completed sweep.
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// A ratio whose denominator vanished (e.g. nobody reviews at the PNE).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Preconditions of the homogeneous closed form are not met.
class HomogeneityError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpr
