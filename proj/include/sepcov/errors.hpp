#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace sepcov {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 1 (domain error), everything else to a usage error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: malformed measures, bad dimensions, out-of-range parameters.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Some |1 + t*alpha| fell below the pole-collision threshold.
class SingularKernelError : public Error {
 public:
  SingularKernelError(const std::string& what, double atom)
      : Error(what), atom_(atom) {}
  double atom() const noexcept { return atom_; }

 private:
  double atom_;
};

/// A fixed-point or Newton solve did not reach tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::complex<double> last_m1c,
                   std::complex<double> last_m2c, double residual)
      : Error(what), m1c_(last_m1c), m2c_(last_m2c), residual_(residual) {}

  std::complex<double> last_m1c() const noexcept { return m1c_; }
  std::complex<double> last_m2c() const noexcept { return m2c_; }
  double residual() const noexcept { return residual_; }

 private:
  std::complex<double> m1c_;
  std::complex<double> m2c_;
  double residual_;
};

/// Root bracket without a sign change, or a critical-point search that found
/// nothing.
class BracketError : public Error {
 public:
  using Error::Error;
};

class EdgeSearchError : public Error {
 public:
  using Error::Error;
};

/// Degenerate edge: non-positive gamma_0 cube or vanishing second derivative.
class DegenerateEdgeError : public Error {
 public:
  using Error::Error;
};

}  // namespace sepcov
