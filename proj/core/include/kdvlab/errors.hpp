#pragma once

#include <cstddef>
#include <stdexcept>
#include <cstdio>
#include <string>

namespace kdvlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable tag, used by the CLI error JSON.
  virtual const char* kind() const noexcept { return "error"; }
};

/// A precondition of an operation was violated (bad sizes, unnormalized weights, ...).
class ContractError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
};

/// Argument outside the mathematical domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Time stepping produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error("divergence at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  const char* kind() const noexcept override { return "divergence"; }

 private:
  std::size_t step_;
};

/// Every importance weight vanished.
class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_ensemble"; }
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + format_residual(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }
  const char* kind() const noexcept override { return "convergence"; }

 private:
  static std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", r);
    return buf;
  }
  double residual_;
};

/// Not enough usable data points for a fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_data"; }
};

/// Malformed configuration or ensemble file.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

/// File system failure.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace kdvlab
