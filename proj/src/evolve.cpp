#include "qdecay/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qdecay/quadrature.hpp"

namespace qdecay {
namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;
constexpr std::size_t kChunk = 256;

double seg_distance(cplx a, cplx b, cplx p) {
  const cplx d = b - a;
  const double len2 = std::norm(d);
  double s = len2 > 0.0 ? ((p - a) * std::conj(d)).real() / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::abs(a + s * d - p);
}

double min_distance(cplx a, cplx b, const std::vector<cplx>& pts) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) d = std::min(d, seg_distance(a, b, p));
  return d;
}

// Samples of A cos(q s) + B sin(q s)/q at s = (i - i0) h, i = i0..i1 (inclusive).
void sample_piece(cplx q, double h, std::size_t n, cplx u0, cplx du0, cplx* out) {
  const cplx s = std::sin(0.5 * q * h);
  const cplx delta = -4.0 * s * s;
  cplx d = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j % 512 == 0) {
      const double r = static_cast<double>(j) * h;
      out[j] = transfer(q, r, u0, du0).first;
      d = out[j] - transfer(q, r - h, u0, du0).first;
    } else {
      out[j] = out[j - 1] + d;
    }
    d += delta * out[j];
  }
}

struct Interval {
  std::size_t i0;
  std::size_t i1;
  cplx q;
  cplx u0;
  cplx du0;
};

}  // namespace

std::string to_string(Engine e) { return e == Engine::Spectral ? "spectral" : "grid"; }

// ---------------------------------------------------------------------------

namespace detail {

// C(k) for the decomposition's source, given the regular solution at k.
cplx source_transform(const RadialGrid& grid, std::span<const cplx> source, const RegularSolution& sol,
                      double range, bool aligned) {
  const double h = grid.spacing();
  const std::size_t m = source.size() - 1;
  const double S = grid.r(m);
  if (m == 0) return 0.0;

  if (!aligned) {
    std::vector<cplx> phi(m + 1);
    sol.sample(h, m + 1, phi.data());
    for (std::size_t i = 0; i <= m; ++i) phi[i] *= source[i];
    return quad::simpson<cplx>(phi, h);
  }

  std::vector<Interval> iv;
  for (const auto& p : sol.pieces()) {
    if (p.r0 >= S) break;
    const std::size_t i0 = grid.nearest(p.r0);
    const std::size_t i1 = std::min(grid.nearest(p.r1), m);
    if (i1 > i0) iv.push_back({i0, i1, p.q, p.u0, p.du0});
  }
  if (S > range) {
    const std::size_t i0 = grid.nearest(range);
    if (m > i0) iv.push_back({i0, m, sol.k(), sol.u_range(), sol.du_range()});
  }

  cplx acc = 0.0;
  std::vector<cplx> buf;
  for (const auto& v : iv) {
    const std::size_t n = v.i1 - v.i0 + 1;
    std::span<const cplx> g = source.subspan(v.i0, n);
    const double L = static_cast<double>(n - 1) * h;
    if (std::abs(v.q) * L < 0.1) {
      buf.resize(n);
      sample_piece(v.q, h, n, v.u0, v.du0, buf.data());
      for (std::size_t j = 0; j < n; ++j) buf[j] *= g[j];
      acc += quad::simpson<cplx>(buf, h);
    } else {
      const cplx w = v.du0 / (I * v.q);
      const cplx A = 0.5 * (v.u0 + w);
      const cplx B = 0.5 * (v.u0 - w);
      acc += A * quad::filon_cubic(g, h, v.q) + B * quad::filon_cubic(g, h, -v.q);
    }
  }
  return acc;
}

}  // namespace detail

namespace {

bool breakpoints_aligned(const Potential& pot, const RadialGrid& grid, double S) {
  for (double b : pot.breakpoints())
    if (b < S && !grid.on_node(b)) return false;
  return true;
}

}  // namespace

cplx continuum_transform(const InitialState& state, const Potential& potential, cplx k) {
  const auto& src = state.continuum_source();
  const RadialGrid& grid = state.grid();
  const double S = grid.r(src.samples.size() - 1);
  RegularSolution sol(potential, k);
  return src.scale *
         detail::source_transform(grid, src.samples, sol, potential.range(), breakpoints_aligned(potential, grid, S));
}

cplx SpectralDecomposition::transform(cplx k) const {
  RegularSolution sol(potential_, k);
  const bool aligned = breakpoints_aligned(potential_, grid_, support_);
  return scale_ * detail::source_transform(grid_, source_, sol, potential_.range(), aligned);
}

cplx SpectralDecomposition::coefficient(double k) const {
  RegularSolution sol(potential_, k);
  const bool aligned = breakpoints_aligned(potential_, grid_, support_);
  const cplx C = scale_ * detail::source_transform(grid_, source_, sol, potential_.range(), aligned);
  return k * C / std::abs(sol.jost());
}

std::vector<cplx> SpectralDecomposition::reconstruct(std::size_t last) const {
  last = std::min(last, grid_.size() - 1);
  const std::size_t n_eval = last + 1;
  const std::size_t n_chunks = (k_.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<cplx>> partial(n_chunks, std::vector<cplx>(n_eval, 0.0));

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_chunks); ++ci) {
    auto& acc = partial[static_cast<std::size_t>(ci)];
    std::vector<cplx> phi(n_eval);
    const std::size_t lo = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t hi = std::min(k_.size(), lo + kChunk);
    for (std::size_t n = lo; n < hi; ++n) {
      RegularSolution sol(potential_, k_[n]);
      sol.sample(grid_.spacing(), n_eval, phi.data());
      const cplx coef = w_[n] * c_[n] * k_[n] / std::abs(sol.jost());
      for (std::size_t j = 0; j < n_eval; ++j) acc[j] += coef * phi[j].real();
    }
  }
  std::vector<cplx> out(n_eval, 0.0);
  for (const auto& p : partial)
    for (std::size_t j = 0; j < n_eval; ++j) out[j] += p[j];
  for (auto& v : out) v *= kTwoOverPi;
  return out;
}

// ---------------------------------------------------------------------------

SpectralDecomposition decompose(const InitialState& state, const Potential& potential, const KGridSpec& spec) {
  const RadialGrid& grid = state.grid();
  if (!(grid.r_max() > potential.range()))
    throw DomainError(fmt::format("grid r_max = {} must exceed the potential range {}", grid.r_max(), potential.range()));
  if (spec.gauss_order != 7 && spec.gauss_order != 10 && spec.gauss_order != 15 && spec.gauss_order != 20)
    throw DomainError("gauss_order must be one of 7, 10, 15, 20");

  SpectralDecomposition d(potential, grid);
  d.label_ = state.label();
  d.source_ = state.continuum_source().samples;
  d.scale_ = state.continuum_source().scale;
  d.support_ = grid.r(d.source_.size() - 1);
  const double S = std::max(d.support_, grid.spacing());

  // singularities of the integrand that the k-quadrature must keep away from
  for (double kap : bound_state_kappas(potential)) d.axis_.push_back(cplx(0.0, -kap));
  for (double kap : find_virtual_states(potential)) d.axis_.push_back(cplx(0.0, -kap));
  d.poles_re_max_ = std::max(40.0, 20.0 / potential.range());
  d.poles_im_min_ = -3.5;
  if (!potential.is_free()) {
    const auto ps = find_resonance_poles(potential, {1e-7, d.poles_re_max_, d.poles_im_min_, -1e-10}, 100000);
    for (const auto& p : ps.poles) d.poles_.push_back(p.k_pole);
  }
  std::vector<cplx> sing = d.axis_;
  for (const auto& p : d.poles_) {
    sing.push_back(p);
    sing.push_back(-std::conj(p));
  }

  const auto& rule = quad::gauss_legendre(spec.gauss_order);
  const double max_w = spec.max_width > 0.0 ? spec.max_width : 1.5 / S;
  const bool aligned = breakpoints_aligned(potential, grid, d.support_);

  // panel edges: geometric towards 0, bounded width, kept away from poles
  auto next_edge = [&](double a) {
    double w = max_w;
    if (a > 0.0) w = std::min(w, a);
    else w = std::min(w, 1e-3 * max_w);
    if (!sing.empty()) {
      for (int it = 0; it < 60; ++it) {
        if (w <= 0.5 * min_distance(a, a + w, sing)) break;
        w *= 0.5;
      }
    }
    return a + w;
  };

  auto add_panel = [&](double a, double b) {
    const double step = (b - a) / spec.refine;
    for (int s = 0; s < spec.refine; ++s) {
      const double pa = a + s * step;
      const double pb = pa + step;
      const double mid = 0.5 * (pa + pb);
      const double half = 0.5 * (pb - pa);
      for (std::size_t g = 0; g < rule.x.size(); ++g) {
        d.k_.push_back(mid + half * rule.x[g]);
        d.w_.push_back(half * rule.w[g]);
      }
    }
  };

  auto eval_range = [&](std::size_t from) {
    d.c_.resize(d.k_.size());
    const auto n = static_cast<std::ptrdiff_t>(d.k_.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(from); i < n; ++i) {
      const double k = d.k_[static_cast<std::size_t>(i)];
      RegularSolution sol(potential, k);
      const cplx C = d.scale_ * detail::source_transform(grid, d.source_, sol, potential.range(), aligned);
      d.c_[static_cast<std::size_t>(i)] = k * C / std::abs(sol.jost());
    }
    double mass = 0.0;
    for (std::size_t i = from; i < d.k_.size(); ++i) mass += d.w_[i] * std::norm(d.c_[i]);
    return kTwoOverPi * mass;
  };

  auto fill_to = [&](double& a, double K) {
    while (a < K * (1.0 - 1e-15)) {
      const double b = std::min(next_edge(a), K);
      add_panel(a, b);
      a = b;
      if (d.k_.size() > spec.max_nodes)
        throw IncompleteBasis(fmt::format("k-grid exceeds {} nodes before k = {}", spec.max_nodes, K), 1.0);
    }
  };

  double a = 0.0;
  double parseval = 0.0;
  if (spec.k_max > 0.0) {
    fill_to(a, spec.k_max);
    parseval = eval_range(0);
    d.tail_ = std::max(0.0, 1.0 - parseval);
    d.k_max_ = spec.k_max;
  } else {
    // grow k_max in doublings; stop once the extrapolated tail is below tail_tol
    double K = std::max(20.0 / S, 4.0);
    for (const auto& p : d.poles_)
      if (p.imag() > -0.5) K = std::max(K, 2.0 * p.real());
    fill_to(a, K);
    parseval = eval_range(0);
    double prev_chunk = -1.0;
    double tail = 1.0;
    while (true) {
      const std::size_t from = d.k_.size();
      fill_to(a, 2.0 * K);
      const double chunk = eval_range(from);
      parseval += chunk;
      K *= 2.0;
      if (prev_chunk > 0.0) {
        const double ratio = chunk / prev_chunk;
        tail = ratio < 0.9 ? chunk * ratio / (1.0 - ratio) : chunk * 10.0;
      } else {
        tail = chunk;
      }
      prev_chunk = chunk;
      if (tail < spec.tail_tol && chunk < 10.0 * spec.tail_tol) break;
      if (chunk == 0.0) {
        tail = 0.0;
        break;
      }
    }
    d.tail_ = tail;
    d.k_max_ = K;
  }
  d.parseval_ = parseval;
  const double deficit = 1.0 - parseval;
  if (deficit > spec.deficit_limit)
    throw IncompleteBasis(
        fmt::format("Parseval deficit {:.3e}: k-grid too coarse or bound-state component present", deficit), deficit);
  return d;
}

// ---------------------------------------------------------------------------
// contour

namespace {

struct Contour {
  std::vector<cplx> vertices;  // panel edges along the path, starting at 0
  double X_end = 0.0;
  double Y = 0.0;
};

class PathBuilder {
 public:
  PathBuilder(const SpectralDecomposition& d, double t, const PropagateOptions& o, double s_max)
      : d_(d), t_(t), o_(o), s_max_(s_max) {
    Y_ = o.y_cap > 0.0 ? o.y_cap : std::min(1.5, 3.0 / s_max);
    ell_ = 1.5 / s_max;
  }

  Contour build() {
    collect_poles();
    Contour c;
    c.Y = Y_;
    c.X_end = find_end();
    std::vector<double> crit{0.0, c.X_end};
    if (Y_ < c.X_end) crit.push_back(Y_);
    for (const auto& p : res_)
      if (p.real() > 0.0 && p.real() < c.X_end) crit.push_back(p.real());
    std::sort(crit.begin(), crit.end());
    crit.erase(std::unique(crit.begin(), crit.end()), crit.end());

    const std::size_t panel_cap = o_.max_nodes / static_cast<std::size_t>(o_.gauss_order * o_.refine) + 1;
    c.vertices.push_back(0.0);
    for (std::size_t i = 0; i + 1 < crit.size(); ++i) {
      std::vector<std::pair<double, double>> stack{{crit[i], crit[i + 1]}};
      while (!stack.empty()) {
        auto [xa, xb] = stack.back();
        stack.pop_back();
        const cplx ka = at(xa);
        const cplx kb = at(xb);
        if (accept(ka, kb) || xb - xa < 1e-13 * std::max(1.0, xb)) {
          c.vertices.push_back(kb);
          if (c.vertices.size() > panel_cap) throw_budget(c.vertices.size());
        } else {
          const double xm = 0.5 * (xa + xb);
          stack.push_back({xm, xb});
          stack.push_back({xa, xm});
        }
      }
    }
    return c;
  }

  const std::vector<cplx>& singularities() const { return sing_; }

 private:
  cplx at(double x) const { return {x, -y(x)}; }

  double y(double x) const {
    double v = std::min(x, Y_);
    for (const auto& p : res_) v = std::min(v, 0.5 * std::abs(p.imag()) + 0.5 * std::abs(x - p.real()));
    return v;
  }

  bool accept(cplx a, cplx b) const {
    const double L = std::abs(b - a);
    if (std::abs(b * b - a * a) * t_ > o_.phase_per_panel) return false;
    if (L > ell_) return false;
    if (!sing_.empty() && L > 0.5 * min_distance(a, b, sing_)) return false;
    return true;
  }

  double find_end() const {
    auto ok = [&](double x) {
      const double yy = y(x);
      return 2.0 * x * yy * t_ >= o_.damping + yy * s_max_;
    };
    // no-pole estimate, then walk out past any dips
    double x = std::sqrt(0.5 * o_.damping / t_);
    if (x > Y_) x = (o_.damping + Y_ * s_max_) / (2.0 * Y_ * t_);
    while (!ok(x)) x *= 1.02;
    return std::min(x, std::max(d_.k_max(), 1.0));
  }

  void collect_poles() {
    res_.clear();
    const double im_need = -2.0 * Y_ - 0.25;
    for (const auto& p : d_.resonances()) res_.push_back(p);
    // the contour end is not known before the poles; estimate it generously
    const double x_guess = std::min(std::max(d_.k_max(), 1.0),
                                    std::max(std::sqrt(o_.damping / t_), (o_.damping + Y_ * s_max_) / (Y_ * t_)));
    if (!d_.potential().is_free() && (x_guess > d_.poles_re_max() || im_need < d_.poles_im_min())) {
      const double lo = im_need < d_.poles_im_min() ? 1e-7 : d_.poles_re_max();
      const auto ps = find_resonance_poles(d_.potential(), {lo, x_guess + 1.0, std::min(im_need, d_.poles_im_min()), -1e-10},
                                           1000000);
      for (const auto& p : ps.poles) {
        bool dup = false;
        for (const auto& q : res_) dup = dup || std::abs(q - p.k_pole) < 1e-8;
        if (!dup) res_.push_back(p.k_pole);
      }
    }
    sing_ = d_.axis_singularities();
    for (const auto& p : res_) {
      sing_.push_back(p);
      sing_.push_back(-std::conj(p));
    }
    // only poles shallow enough to dip the path matter for its shape
    std::erase_if(res_, [&](cplx p) { return p.imag() < -2.0 * Y_; });
  }

  [[noreturn]] void throw_budget(std::size_t panels) const {
    const double est = static_cast<double>(panels) * o_.gauss_order * o_.refine;
    const double t_ok = t_ * est / static_cast<double>(o_.max_nodes);
    throw QuadratureBudget(fmt::format("contour at t = {} needs more than {} quadrature nodes; times below "
                                       "about t = {:.3g} are out of budget",
                                       t_, o_.max_nodes, t_ok),
                           t_, t_ok);
  }

  const SpectralDecomposition& d_;
  double t_;
  const PropagateOptions& o_;
  double s_max_;
  double Y_;
  double ell_;
  std::vector<cplx> res_;
  std::vector<cplx> sing_;
};

void verify_pole_free(const Potential& pot, const Contour& c) {
  if (pot.is_free() || c.vertices.size() < 2) return;
  // real axis out, straight down to the path end, back along the path, close near 0
  std::vector<cplx> poly;
  const cplx first = c.vertices[1];
  poly.push_back(first.real());
  poly.push_back(c.X_end);
  for (std::size_t i = c.vertices.size() - 1; i >= 1; --i) poly.push_back(c.vertices[i]);
  const int n = count_zeros(pot, poly);
  if (n != 0)
    throw NumericalError(fmt::format("integration contour encloses {} Jost zero(s); pole list incomplete", n));
}

double eval_extent(const SpectralDecomposition& d, const PropagateOptions& o, std::size_t& last) {
  const double r_eval = o.r_eval > 0.0 ? o.r_eval : d.support();
  if (r_eval > d.grid().r_max() * (1.0 + 1e-12))
    throw DomainError(fmt::format("r_eval = {} exceeds grid r_max = {}", r_eval, d.grid().r_max()));
  last = d.grid().ceil_index(r_eval);
  return d.grid().r(last);
}

}  // namespace

std::size_t spectral_node_count(const SpectralDecomposition& d, double t, const PropagateOptions& o) {
  if (t == 0.0) return d.k().size();
  std::size_t last = 0;
  const double r_eval = eval_extent(d, o, last);
  PathBuilder pb(d, t, o, d.support() + r_eval);
  const auto c = pb.build();
  return (c.vertices.size() - 1) * static_cast<std::size_t>(o.gauss_order * o.refine);
}

WaveFunction propagate_spectral(const SpectralDecomposition& d, double t, const PropagateOptions& o) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError(fmt::format("time must be >= 0, got {}", t));
  std::size_t last = 0;
  const double r_eval = eval_extent(d, o, last);
  const RadialGrid& grid = d.grid();

  WaveFunction wf;
  wf.t = t;
  wf.engine = Engine::Spectral;
  wf.grid = grid;
  wf.norm = std::sqrt(d.parseval());

  if (t == 0.0) {
    wf.samples = d.reconstruct(last);
    wf.quadrature_nodes = d.k().size();
    return wf;
  }

  PathBuilder pb(d, t, o, d.support() + r_eval);
  const Contour c = pb.build();
  verify_pole_free(d.potential(), c);

  const auto& rule = quad::gauss_legendre(o.gauss_order);
  std::vector<cplx> kn;
  std::vector<cplx> wn;
  for (std::size_t p = 0; p + 1 < c.vertices.size(); ++p) {
    const cplx a = c.vertices[p];
    const cplx step = (c.vertices[p + 1] - a) / static_cast<double>(o.refine);
    for (int s = 0; s < o.refine; ++s) {
      const cplx mid = a + (s + 0.5) * step;
      for (std::size_t g = 0; g < rule.x.size(); ++g) {
        kn.push_back(mid + 0.5 * step * rule.x[g]);
        wn.push_back(0.5 * step * rule.w[g]);
      }
    }
  }
  if (kn.size() > o.max_nodes)
    throw QuadratureBudget(fmt::format("t = {} needs {} nodes (budget {})", t, kn.size(), o.max_nodes), t,
                           t * static_cast<double>(kn.size()) / static_cast<double>(o.max_nodes));

  const std::size_t n_eval = last + 1;
  const std::size_t n_chunks = (kn.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<cplx>> partial(n_chunks, std::vector<cplx>(n_eval, 0.0));
  const bool aligned = breakpoints_aligned(d.potential(), grid, d.support());
  const auto& pot = d.potential();
  const auto source = d.source_view();

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_chunks); ++ci) {
    auto& acc = partial[static_cast<std::size_t>(ci)];
    std::vector<cplx> phi(n_eval);
    const std::size_t lo = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t hi = std::min(kn.size(), lo + kChunk);
    for (std::size_t n = lo; n < hi; ++n) {
      const cplx k = kn[n];
      RegularSolution sol(pot, k);
      const cplx C = source.scale * detail::source_transform(grid, source.samples, sol, pot.range(), aligned);
      const cplx denom = sol.jost() * jost(pot, -k);
      const cplx coef = wn[n] * std::exp(-I * k * k * t) * k * k * C / denom;
      sol.sample(grid.spacing(), n_eval, phi.data());
      for (std::size_t j = 0; j < n_eval; ++j) acc[j] += coef * phi[j];
    }
  }
  wf.samples.assign(n_eval, 0.0);
  for (const auto& p : partial)
    for (std::size_t j = 0; j < n_eval; ++j) wf.samples[j] += p[j];
  for (auto& v : wf.samples) v *= kTwoOverPi;
  wf.quadrature_nodes = kn.size();
  (void)r_eval;
  return wf;
}

}  // namespace qdecay
