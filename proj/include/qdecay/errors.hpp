#pragma once

#include <stdexcept>
#include <string>

namespace qdecay {

/// Invalid argument or violated precondition (bad radius, grid too short, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base class of all numerical failures raised by the library.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotBracketed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateState : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateCombination : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IncompleteBasis : public NumericalError {
 public:
  IncompleteBasis(const std::string& what, double deficit)
      : NumericalError(what), deficit_(deficit) {}
  double deficit() const noexcept { return deficit_; }

 private:
  double deficit_;
};

/// The oscillatory k-quadrature at time t needs more nodes than allowed.
class QuadratureBudget : public NumericalError {
 public:
  QuadratureBudget(const std::string& what, double t, double max_reliable_t)
      : NumericalError(what), t_(t), max_reliable_t_(max_reliable_t) {}
  double t() const noexcept { return t_; }
  /// Largest time the current budget can handle (estimate).
  double max_reliable_t() const noexcept { return max_reliable_t_; }

 private:
  double t_;
  double max_reliable_t_;
};

/// Reflected flux from the grid's hard wall can reach the region before t.
class BoundaryContamination : public NumericalError {
 public:
  BoundaryContamination(const std::string& what, double t_safe)
      : NumericalError(what), t_safe_(t_safe) {}
  double t_safe() const noexcept { return t_safe_; }

 private:
  double t_safe_;
};

}  // namespace qdecay
