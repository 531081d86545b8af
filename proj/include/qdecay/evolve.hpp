#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qdecay/model.hpp"
#include "qdecay/scattering.hpp"

namespace qdecay {

struct KGridSpec {
  double k_max = 0.0;        // 0: grow until the discarded tail is below tail_tol
  double tail_tol = 1e-13;   // fraction of the Parseval mass allowed beyond k_max
  double max_width = 0.0;    // 0: 1.5 / support
  int gauss_order = 10;
  int refine = 1;            // split every panel into this many
  std::size_t max_nodes = 2'000'000;
  double deficit_limit = 1e-3;  // IncompleteBasis above this
};

/// Spectral representation of an initial state under a potential:
/// c(k) = <psi_k|Psi0> on a real k-grid (with Parseval bookkeeping) plus
/// everything needed to evaluate the analytically continued integrand off
/// the real axis.
class SpectralDecomposition {
 public:
  const Potential& potential() const noexcept { return potential_; }
  const RadialGrid& grid() const noexcept { return grid_; }
  const std::string& label() const noexcept { return label_; }

  std::span<const double> k() const noexcept { return k_; }
  std::span<const double> weights() const noexcept { return w_; }
  std::span<const cplx> coefficients() const noexcept { return c_; }

  double parseval() const noexcept { return parseval_; }
  double tail_mass() const noexcept { return tail_; }
  double k_max() const noexcept { return k_max_; }
  /// Radius of the compact continuum source.
  double support() const noexcept { return support_; }

  /// Resonance zeros of f with Re k > 0 (searched box recorded below).
  const std::vector<cplx>& resonances() const noexcept { return poles_; }
  double poles_re_max() const noexcept { return poles_re_max_; }
  double poles_im_min() const noexcept { return poles_im_min_; }
  /// -i kappa for bound (zeros of f(-k)) and virtual (zeros of f(k)) states.
  const std::vector<cplx>& axis_singularities() const noexcept { return axis_; }

  struct SourceView {
    std::span<const cplx> samples;
    double scale;
  };
  SourceView source_view() const noexcept { return {source_, scale_}; }

  /// C(k) = int phi(k, r) Psi0(r) dr for complex k (continuum source).
  cplx transform(cplx k) const;
  /// c(k) = k C(k) / |f(k)| for real k > 0.
  cplx coefficient(double k) const;

  /// (2/pi) sum w c(k) psi_k(r_j), j = 0..last: the t = 0 reconstruction.
  std::vector<cplx> reconstruct(std::size_t last) const;

 private:
  friend SpectralDecomposition decompose(const InitialState&, const Potential&, const KGridSpec&);
  SpectralDecomposition(Potential p, RadialGrid g) : potential_(std::move(p)), grid_(std::move(g)) {}

  Potential potential_;
  RadialGrid grid_;
  std::string label_;
  std::vector<cplx> source_;
  double scale_ = 1.0;
  double support_ = 0.0;
  std::vector<double> k_;
  std::vector<double> w_;
  std::vector<cplx> c_;
  double parseval_ = 0.0;
  double tail_ = 0.0;
  double k_max_ = 0.0;
  std::vector<cplx> poles_;
  double poles_re_max_ = 0.0;
  double poles_im_min_ = 0.0;
  std::vector<cplx> axis_;
};

/// Throws IncompleteBasis when 1 - Parseval exceeds spec.deficit_limit.
SpectralDecomposition decompose(const InitialState& state, const Potential& potential, const KGridSpec& spec = {});

/// C(k) of a state's continuum source, for any complex k.
cplx continuum_transform(const InitialState& state, const Potential& potential, cplx k);

enum class Engine { Spectral, Grid };
std::string to_string(Engine e);

struct WaveFunction {
  double t = 0.0;
  Engine engine = Engine::Spectral;
  RadialGrid grid{1.0, 2};
  std::vector<cplx> samples;  // nodes 0..samples.size()-1 of grid
  double norm = 1.0;          // spectral: Parseval norm; grid: discrete l2 norm (conserved by the scheme)
  std::size_t quadrature_nodes = 0;
};

struct PropagateOptions {
  double r_eval = 0.0;  // 0: source support
  double phase_per_panel = std::numbers::pi / 4.0;
  int gauss_order = 10;
  int refine = 1;
  std::size_t max_nodes = 1'500'000;
  double y_cap = 0.0;   // 0: automatic
  double damping = 46.0;
};

/// Psi(r, t) at fixed t by quadrature of e^{-ik^2 t} c(k) psi_k(r) over k.
/// For t > 0 the k-integral runs on a pole-free contour in the fourth
/// quadrant (checked by the argument principle).
WaveFunction propagate_spectral(const SpectralDecomposition& decomp, double t, const PropagateOptions& opts = {});

/// Quadrature nodes the contour at time t would use (no evaluation).
std::size_t spectral_node_count(const SpectralDecomposition& decomp, double t, const PropagateOptions& opts = {});

struct GridOptions {
  double region_R = 0.0;   // 0: state support
  double flux_tol = 1e-8;
  bool guard = true;
};

/// Crank-Nicolson on the state's grid with a hard wall at r_max.
class GridPropagator {
 public:
  GridPropagator(const InitialState& state, const Potential& potential, double dt, const GridOptions& opts = {});

  double time() const noexcept { return t_; }
  double dt() const noexcept { return dt_; }
  /// Latest time before reflected flux can re-enter [0, R].
  double t_safe() const noexcept { return t_safe_; }
  /// Momentum scale of the continuum source used for the contamination guard.
  double k_resolved() const noexcept { return k_res_; }

  void step(std::size_t n = 1);
  /// Steps to the nearest multiple of dt at or below t; throws BoundaryContamination past t_safe.
  WaveFunction advance_to(double t);
  WaveFunction snapshot() const;
  double discrete_norm() const;

 private:
  RadialGrid grid_;
  double dt_;
  double t_ = 0.0;
  std::size_t steps_ = 0;
  double t_safe_ = 0.0;
  double k_res_ = 0.0;
  bool guard_ = true;
  std::vector<cplx> psi_;
  std::vector<double> diag_;   // H diagonal on interior nodes
  double off_ = 0.0;           // H off-diagonal
  std::vector<cplx> lu_c_;     // Thomas factors of (1 + i dt/2 H)
  std::vector<cplx> lu_m_;
  std::vector<cplx> rhs_;
};

WaveFunction propagate_grid(const InitialState& state, const Potential& potential, double t, double dt,
                            const GridOptions& opts = {});

/// Smallest k such that the discrete sine spectrum above it carries less than
/// tol of the norm.
double resolved_momentum(const RadialGrid& grid, std::span<const cplx> samples, double tol);

}  // namespace qdecay
