#pragma once

#include <stdexcept>
#include <string>

namespace hetrx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-range argument to a numerical routine.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A bracketed root search could not be set up or did not converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Patch layout construction or validation failed.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Capacitance or effective rate outside the range where the asymptotic
/// formulas hold (G_p must lie strictly inside (0, r_R)).
class HomogenizationError : public Error {
 public:
  using Error::Error;
};

/// Requested result could not be delivered at the requested accuracy.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (unknown key, malformed value, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hetrx
