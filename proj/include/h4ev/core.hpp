#pragma once

#include <stdexcept>
#include <string>

namespace h4ev {

inline constexpr double kAngstromToBohr = 1.8897259886;

/// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Precondition / argument violations.
struct DomainError : Error {
  using Error::Error;
};

/// Iterative procedure failed to reach its tolerance.
struct ConvergenceError : Error {
  double residual = 0.0;
  ConvergenceError(const std::string& what, double res)
      : Error(what), residual(res) {}
};

}  // namespace h4ev
