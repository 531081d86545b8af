#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qdecay/errors.hpp"

namespace qdecay {

using cplx = std::complex<double>;

/// Constant potential V on [r_lo, r_hi). Units hbar = 2m = 1.
struct Segment {
  double r_lo;
  double r_hi;
  double V;
};

/// lambda * delta(r - r). lambda has units 1/length.
struct Shell {
  double r;
  double lambda;
};

/// Finite-range radial potential: piecewise-constant segments plus delta
/// shells, identically zero beyond range().
class Potential {
 public:
  Potential(std::vector<Segment> segments, std::vector<Shell> shells, double range_a);

  static Potential free_particle(double range_a = 1.0);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const std::vector<Shell>& shells() const noexcept { return shells_; }
  double range() const noexcept { return range_; }
  bool is_free() const noexcept;

  /// Smooth part of V(r); delta shells are not included. Exactly 0 beyond range().
  double operator()(double r) const noexcept;

  /// Sorted, de-duplicated points in (0, range()] where V is non-smooth.
  std::vector<double> breakpoints() const;

 private:
  std::vector<Segment> segments_;
  std::vector<Shell> shells_;
  double range_;
};

/// Single shell lambda * delta(r - a). Throws DomainError for a <= 0.
Potential build_delta_shell(double lambda, double a);

/// Uniform grid r_i = i * spacing on [0, r_max].
class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n_points);

  double r_max() const noexcept { return r_max_; }
  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  double r(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }

  std::size_t nearest(double r) const;
  /// Index of the last node with r_i <= r (clamped to the grid).
  std::size_t floor_index(double r) const;
  /// Index of the first node with r_i >= r (clamped to the grid).
  std::size_t ceil_index(double r) const;
  bool on_node(double r, double rel_tol = 1e-9) const;

  /// Composite Simpson integral of f over nodes [0, last].
  double integrate(std::span<const double> f, std::size_t last) const;
  cplx integrate(std::span<const cplx> f, std::size_t last) const;

  /// Integral of a non-negative density over [0, R]; R may fall between nodes.
  double integrate_to(std::span<const double> f, double R) const;

  bool operator==(const RadialGrid& other) const noexcept {
    return n_ == other.n_ && r_max_ == other.r_max_;
  }

 private:
  double r_max_;
  std::size_t n_;
  double h_;
};

/// n-th eigenmode of the closed box [0, R]: sqrt(2/R) sin(n pi r / R).
struct SineBox {
  int n = 1;
  double R = 1.0;
};

/// Odd-symmetrized Gaussian exp(-(r-r0)^2/2s^2) - exp(-(r+r0)^2/2s^2), with a
/// linear (odd) correction so the state vanishes continuously at R.
struct GaussianBump {
  double r0 = 0.5;
  double sigma = 0.1;
  double R = 1.0;
};

using StateFamily = std::variant<SineBox, GaussianBump>;

std::string describe(const StateFamily& family);
double support_of(const StateFamily& family);

/// Unnormalized analytic shape of a family at r (0 outside its support).
double family_shape(const StateFamily& family, double r);

/// Normalized s-wave radial wave packet sampled on a RadialGrid.
///
/// Besides its samples, a state carries a compactly supported "continuum
/// source" whose continuum coefficients equal those of the state. For states
/// built directly it is the state itself; after bound-state projection it is
/// the pre-projection packet with a rescaling factor (bound states are
/// orthogonal to every scattering solution, so projection only rescales the
/// continuum coefficients).
class InitialState {
 public:
  struct ContinuumSource {
    std::vector<cplx> samples;  // nodes 0..samples.size()-1
    double scale = 1.0;
  };

  /// Normalizes the samples. Throws DomainError if the samples are non-zero
  /// beyond support_R, non-zero at r = 0, or have zero norm.
  static InitialState from_samples(const RadialGrid& grid, std::vector<cplx> samples,
                                   double support_R, std::string label = "custom");

  const RadialGrid& grid() const noexcept { return grid_; }
  std::span<const cplx> samples() const noexcept { return samples_; }
  double support() const noexcept { return support_; }
  std::size_t support_index() const { return grid_.ceil_index(support_); }
  const std::string& label() const noexcept { return label_; }
  const ContinuumSource& continuum_source() const noexcept { return source_; }

  /// Quadrature norm of the samples before normalization.
  double raw_norm() const noexcept { return raw_norm_; }
  double norm() const;

  /// <this|other> with the grid quadrature.
  cplx inner(const InitialState& other) const;

  /// Replace samples and source, renormalizing both by the samples' norm.
  /// Used by projections and combinations; throws DegenerateState when the
  /// norm falls below min_norm.
  static InitialState rebuild(const RadialGrid& grid, std::vector<cplx> samples, double support_R,
                              ContinuumSource source, std::string label, double min_norm);

 private:
  InitialState(RadialGrid grid, std::vector<cplx> samples, double support, std::string label,
               ContinuumSource source, double raw_norm);

  RadialGrid grid_;
  std::vector<cplx> samples_;
  double support_;
  std::string label_;
  ContinuumSource source_;
  double raw_norm_;
};

/// Throws DomainError when the family does not fit on the grid.
InitialState build_initial_state(const StateFamily& family, const RadialGrid& grid);

/// Grid quadrature of conj(a) * b over nodes [0, last].
cplx inner_product(const RadialGrid& grid, std::span<const cplx> a, std::span<const cplx> b,
                   std::size_t last);

}  // namespace qdecay
