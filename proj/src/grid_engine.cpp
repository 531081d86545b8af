#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include <fftw3.h>
#include <fmt/format.h>

#include "qdecay/evolve.hpp"

namespace qdecay {
namespace {

// Far tails of the packet underflow into subnormals, which are very slow;
// flush them to zero while stepping.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Radius beyond which the state carries less than tol of its norm.
double effective_support(const RadialGrid& grid, std::span<const cplx> psi, double tol) {
  double total = 0.0;
  for (const auto& v : psi) total += std::norm(v);
  double tail = 0.0;
  for (std::size_t i = psi.size(); i-- > 0;) {
    tail += std::norm(psi[i]);
    if (tail > tol * total) return grid.r(std::min(psi.size() - 1, i + 1));
  }
  return 0.0;
}

}  // namespace

double resolved_momentum(const RadialGrid& grid, std::span<const cplx> samples, double tol) {
  const std::size_t N = grid.size();
  if (N < 3) return 0.0;
  const int n = static_cast<int>(N - 2);
  std::vector<double> re(static_cast<std::size_t>(n)), im(static_cast<std::size_t>(n));
  std::vector<double> out_re(static_cast<std::size_t>(n)), out_im(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    re[static_cast<std::size_t>(j)] = samples[static_cast<std::size_t>(j) + 1].real();
    im[static_cast<std::size_t>(j)] = samples[static_cast<std::size_t>(j) + 1].imag();
  }
  fftw_plan p_re, p_im;
  {
    std::lock_guard lock(fftw_planner_mutex());
    p_re = fftw_plan_r2r_1d(n, re.data(), out_re.data(), FFTW_RODFT00, FFTW_ESTIMATE);
    p_im = fftw_plan_r2r_1d(n, im.data(), out_im.data(), FFTW_RODFT00, FFTW_ESTIMATE);
  }
  fftw_execute(p_re);
  fftw_execute(p_im);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p_re);
    fftw_destroy_plan(p_im);
  }
  double total = 0.0;
  for (int m = 0; m < n; ++m)
    total += out_re[static_cast<std::size_t>(m)] * out_re[static_cast<std::size_t>(m)] +
             out_im[static_cast<std::size_t>(m)] * out_im[static_cast<std::size_t>(m)];
  if (total == 0.0) return 0.0;
  double tail = 0.0;
  for (int m = n - 1; m >= 0; --m) {
    const double pw = out_re[static_cast<std::size_t>(m)] * out_re[static_cast<std::size_t>(m)] +
                      out_im[static_cast<std::size_t>(m)] * out_im[static_cast<std::size_t>(m)];
    if (tail + pw >= tol * total) return std::numbers::pi * (m + 1) / grid.r_max();
    tail += pw;
  }
  return 0.0;
}

GridPropagator::GridPropagator(const InitialState& state, const Potential& potential, double dt,
                               const GridOptions& opts)
    : grid_(state.grid()), dt_(dt), guard_(opts.guard) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError(fmt::format("dt must be positive, got {}", dt));
  if (!(grid_.r_max() > potential.range()))
    throw DomainError("grid r_max must exceed the potential range");
  const std::size_t N = grid_.size();
  if (N < 4) throw DomainError("grid engine needs at least 4 points");
  const double h = grid_.spacing();

  psi_.assign(state.samples().begin(), state.samples().end());
  psi_.front() = 0.0;
  psi_.back() = 0.0;

  const std::size_t n = N - 2;
  diag_.assign(n, 0.0);
  off_ = -1.0 / (h * h);
  for (std::size_t i = 0; i < n; ++i) diag_[i] = 2.0 / (h * h) + potential(grid_.r(i + 1));
  for (const auto& s : potential.shells()) {
    const std::size_t node = grid_.nearest(s.r);
    if (node >= 1 && node <= n) diag_[node - 1] += s.lambda / h;
  }

  // Thomas factors of A = 1 + i dt/2 H
  const cplx a_off(0.0, 0.5 * dt * off_);
  lu_c_.resize(n);
  lu_m_.resize(n);
  cplx m = cplx(1.0, 0.5 * dt * diag_[0]);
  lu_m_[0] = 1.0 / m;
  lu_c_[0] = a_off * lu_m_[0];
  for (std::size_t i = 1; i < n; ++i) {
    m = cplx(1.0, 0.5 * dt * diag_[i]) - a_off * lu_c_[i - 1];
    lu_m_[i] = 1.0 / m;
    lu_c_[i] = a_off * lu_m_[i];
  }
  rhs_.resize(n);

  const double R = opts.region_R > 0.0 ? opts.region_R : state.support();
  // Velocity scale from the continuum source: bound-state pieces added by a
  // projection carry kinks at the shells but do not propagate.
  const auto& src = state.continuum_source();
  std::vector<cplx> moving(N, 0.0);
  for (std::size_t i = 0; i < std::min(N, src.samples.size()); ++i) moving[i] = src.scale * src.samples[i];
  k_res_ = resolved_momentum(grid_, moving, opts.flux_tol);
  const double k_eff = std::min(k_res_, 0.5 * std::numbers::pi / h);
  const double v = k_eff > 0.0 ? 2.0 * std::sin(k_eff * h) / h : 0.0;
  const double r_sup = effective_support(grid_, psi_, opts.flux_tol);
  const double path = 2.0 * grid_.r_max() - R - r_sup;
  t_safe_ = v > 0.0 ? std::max(0.0, path / v) : std::numeric_limits<double>::infinity();
}

void GridPropagator::step(std::size_t count) {
  const std::size_t n = diag_.size();
  const cplx b_off(0.0, -0.5 * dt_ * off_);
  const cplx a_off(0.0, 0.5 * dt_ * off_);
  cplx* psi = psi_.data() + 1;  // interior view
  FlushDenormals ftz;
  for (std::size_t s = 0; s < count; ++s) {
    // rhs = (1 - i dt/2 H) psi
    for (std::size_t i = 0; i < n; ++i) {
      cplx v = cplx(1.0, -0.5 * dt_ * diag_[i]) * psi[i];
      if (i > 0) v += b_off * psi[i - 1];
      if (i + 1 < n) v += b_off * psi[i + 1];
      rhs_[i] = v;
    }
    // forward / back substitution
    rhs_[0] *= lu_m_[0];
    for (std::size_t i = 1; i < n; ++i) rhs_[i] = (rhs_[i] - a_off * rhs_[i - 1]) * lu_m_[i];
    psi[n - 1] = rhs_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) psi[i] = rhs_[i] - lu_c_[i] * psi[i + 1];
    ++steps_;
  }
  t_ = static_cast<double>(steps_) * dt_;
}

WaveFunction GridPropagator::advance_to(double t) {
  if (!(t >= 0.0)) throw DomainError(fmt::format("time must be >= 0, got {}", t));
  const auto target = static_cast<std::size_t>(std::floor(t / dt_ + 1e-9));
  if (target < steps_) throw DomainError("grid propagator cannot step backwards");
  const double t_end = static_cast<double>(target) * dt_;
  if (guard_ && t_end > t_safe_)
    throw BoundaryContamination(
        fmt::format("t = {} exceeds the boundary-safe time {:.6g} of the grid engine (r_max = {})", t_end, t_safe_,
                    grid_.r_max()),
        t_safe_);
  step(target - steps_);
  return snapshot();
}

WaveFunction GridPropagator::snapshot() const {
  WaveFunction wf;
  wf.t = t_;
  wf.engine = Engine::Grid;
  wf.grid = grid_;
  wf.samples = psi_;
  wf.norm = discrete_norm();
  wf.quadrature_nodes = steps_;
  return wf;
}

double GridPropagator::discrete_norm() const {
  double s = 0.0;
  for (const auto& v : psi_) s += std::norm(v);
  return std::sqrt(s * grid_.spacing());
}

WaveFunction propagate_grid(const InitialState& state, const Potential& potential, double t, double dt,
                            const GridOptions& opts) {
  GridPropagator g(state, potential, dt, opts);
  return g.advance_to(t);
}

}  // namespace qdecay
