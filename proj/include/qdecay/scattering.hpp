#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qdecay/model.hpp"

namespace qdecay {

/// Regular solution u(0) = 0, u'(0) = 1 of -u'' + V u = k^2 u, propagated
/// exactly through the piecewise-constant pieces and delta shells. k may be
/// complex (analytic continuation).
class RegularSolution {
 public:
  RegularSolution(const Potential& potential, cplx k);

  cplx k() const noexcept { return k_; }

  /// (u, u') at r >= 0.
  std::pair<cplx, cplx> at(double r) const;

  /// f(k) = e^{ika} (u'(a) - i k u(a)) with a = range; f == 1 for V == 0.
  cplx jost() const;

  /// u(j h) for j = 0..n-1.
  void sample(double h, std::size_t n, cplx* out) const;

  /// Pieces of [0, range] on which q^2 = k^2 - V is constant.
  struct Piece {
    double r0;
    double r1;
    cplx q;
    cplx u0;   // u(r0+)
    cplx du0;  // u'(r0+), after any shell at r0
  };
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  /// (u, u') at range() after the last shell.
  cplx u_range() const noexcept { return ua_; }
  cplx du_range() const noexcept { return dua_; }

 private:
  cplx k_;
  double range_;
  std::vector<Piece> pieces_;
  cplx ua_;
  cplx dua_;
};

/// u(L) and u'(L) from (u, u') at 0 for -u'' = q^2 u.
std::pair<cplx, cplx> transfer(cplx q, double L, cplx u, cplx du);

cplx jost(const Potential& potential, cplx k);

struct JostData {
  double k;
  cplx f0;
  double phase_shift;  // -arg f(k), in (-pi, pi]
  /// psi_k = k phi_k / |f(k)| on the grid; asymptotically sin(kr + delta).
  std::vector<double> regular_solution;
};

JostData regular_solution(const Potential& potential, double k, const RadialGrid& grid);

/// Continuous (unwrapped) phase shifts along increasing k.
std::vector<double> phase_shift_sweep(const Potential& potential, std::span<const double> ks);

/// Fixed-step RK4 with exact jumps at shells; returns u on the grid nodes.
/// Kept as an independent cross-check of the exact propagation.
std::vector<double> integrate_rk4(const Potential& potential, double k, const RadialGrid& grid);

double jost_at_zero(const Potential& potential);

using PotentialFamily = std::function<Potential(double)>;

/// Root of jost_at_zero(family(lambda)) inside [lo, hi]. Throws NotBracketed.
double find_zero_energy_coupling(const PotentialFamily& family, double lo, double hi);

struct BoundState {
  double kappa;
  double energy;
  std::vector<double> wavefunction;  // normalized on the grid
};

/// e^{kappa a} f(i kappa): real, zero at bound states.
double bound_state_function(const Potential& potential, double kappa);

/// Jost zeros f(i kappa) = 0, 0 < kappa <= kappa_max (default 50 / range).
std::vector<BoundState> find_bound_states(const Potential& potential, const RadialGrid& grid,
                                          double kappa_max = 0.0);

/// kappa of every bound state in (0, kappa_max], without wavefunctions.
std::vector<double> bound_state_kappas(const Potential& potential, double kappa_max = 0.0);

/// Zeros of f on the negative imaginary axis, returned as kappa with f(-i kappa) = 0.
std::vector<double> find_virtual_states(const Potential& potential, double kappa_max = 0.0);

/// Orthogonalize against the bound states and renormalize.
/// Throws DegenerateState when less than 1e-8 of the norm survives.
InitialState project_out_bound_states(const InitialState& state, const std::vector<BoundState>& bound);

struct SearchBox {
  double re_lo;
  double re_hi;
  double im_lo;
  double im_hi;
};

struct ResonancePole {
  cplx k_pole;
  int order = 1;
  double residual = 0.0;  // |f(k_pole)|
};

struct PoleSearch {
  std::vector<ResonancePole> poles;
  int zero_count = 0;           // argument-principle count over the box
  bool newton_failed = false;   // at least one counted zero could not be refined
  std::string diagnostic;
};

/// Zeros of the continued Jost function in a lower-half-plane box.
PoleSearch find_resonance_poles(const Potential& potential, const SearchBox& box, std::size_t n_max);

/// Number of zeros of f enclosed by the closed polygon (argument principle).
int count_zeros(const Potential& potential, std::span<const cplx> polygon);

}  // namespace qdecay
