#pragma once

#include <stdexcept>
#include <string>

namespace needlets {

/// Root of every error raised by the library. The CLI maps the concrete
/// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the documented domain of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Inputs are individually valid but do not satisfy an operation's
/// precondition (e.g. a grid of too low a degree for the requested band).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The spectrum vanishes on the window support, so variances are zero.
class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

/// Omega_j is singular or too badly conditioned to standardize with.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// A table or cached quantity failed an internal consistency check.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// A request exceeds a configured size cap (degree, bandwidth, ...).
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

}  // namespace needlets
