#pragma once

#include <stdexcept>
#include <string>

namespace sto {

// Error taxonomy shared by the library and mapped to CLI exit codes
// (config/parameter -> 2, resonance -> 3, numerical -> 4, I/O -> 5).

/// Input violates a mathematical precondition (non-SPD tensor, degenerate medium).
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Parameter outside its documented range (R outside (1,2), L <= 3, ...).
class ParameterError : public std::runtime_error {
public:
  explicit ParameterError(const std::string& what) : std::runtime_error(what) {}
};

/// Evaluation requested on (or numerically at) a declared singular set.
class SingularSetError : public std::runtime_error {
public:
  explicit SingularSetError(const std::string& what) : std::runtime_error(what) {}
};

/// Interface system numerically singular: omega^2 is at (or too close to) an
/// interior eigenvalue of the medium.
class ResonanceError : public std::runtime_error {
public:
  ResonanceError(const std::string& what, double omega, int degree)
      : std::runtime_error(what), omega_(omega), degree_(degree) {}
  double omega() const { return omega_; }
  int degree() const { return degree_; }

private:
  double omega_;
  int degree_;
};

/// A mathematical hypothesis of the requested operation is violated
class PreconditionError : public std::runtime_error {
public:
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

/// Generic numerical failure (integrator step collapse, no convergence).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sto
