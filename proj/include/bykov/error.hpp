#pragma once

#include <stdexcept>
#include <string>

namespace bykov {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid constants or parameters (violated type invariants).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A point outside the domain of the return map or of a factor map.
/// `value` carries the offending radial quantity (s = y + A + lambda sin x
/// for the return map, the radial input for logarithmic stages).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double value) : Error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Iterative solver did not reach its tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Reading configuration or writing artifacts failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Adaptive integrator gave up; `time` is the last time reached.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace bykov
