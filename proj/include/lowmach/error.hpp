#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lowmach {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a constitutive function (theta <= 0, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A thermodynamic state whose partial derivatives make a coefficient undefined.
class SingularStateError : public Error {
 public:
  using Error::Error;
};

/// Linear or nonlinear solver failure. Carries the residual history when available.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history = {})
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Requested time step exceeds the stability bound.
class CflError : public Error {
 public:
  CflError(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Nonphysical evolved state (negative density or temperature).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fields living on different grids were combined.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace lowmach
