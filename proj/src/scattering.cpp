#include "qdecay/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

namespace qdecay {
namespace {

constexpr cplx I{0.0, 1.0};

// sin(qL)/q, finite at q -> 0.
cplx sinc_len(cplx q, double L) {
  const cplx z = q * L;
  if (std::abs(z) < 1e-4) {
    const cplx z2 = z * z;
    return L * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
  }
  return std::sin(z) / q;
}

cplx wavenumber(cplx k, double V) { return std::sqrt(k * k - V); }

}  // namespace

std::pair<cplx, cplx> transfer(cplx q, double L, cplx u, cplx du) {
  const cplx c = std::cos(q * L);
  const cplx s = sinc_len(q, L);
  return {u * c + du * s, -q * q * s * u + c * du};
}

RegularSolution::RegularSolution(const Potential& potential, cplx k) : k_(k), range_(potential.range()) {
  std::vector<double> pts{0.0};
  for (double b : potential.breakpoints()) pts.push_back(b);
  const auto& shells = potential.shells();

  auto shell_strength = [&](double r) {
    double lam = 0.0;
    for (const auto& s : shells)
      if (std::abs(s.r - r) <= 1e-14 * std::max(1.0, r)) lam += s.lambda;
    return lam;
  };

  cplx u = 0.0;
  cplx du = 1.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double r0 = pts[i];
    const double r1 = pts[i + 1];
    if (i > 0) du += shell_strength(r0) * u;
    const cplx q = wavenumber(k, potential(0.5 * (r0 + r1)));
    pieces_.push_back({r0, r1, q, u, du});
    std::tie(u, du) = transfer(q, r1 - r0, u, du);
  }
  du += shell_strength(range_) * u;
  ua_ = u;
  dua_ = du;
}

std::pair<cplx, cplx> RegularSolution::at(double r) const {
  if (r <= 0.0) return {0.0, 1.0};
  if (r >= range_) return transfer(k_, r - range_, ua_, dua_);
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), r,
                             [](double x, const Piece& p) { return x < p.r0; });
  const Piece& p = *std::prev(it);
  return transfer(p.q, r - p.r0, p.u0, p.du0);
}

cplx RegularSolution::jost() const { return std::exp(I * k_ * range_) * (dua_ - I * k_ * ua_); }

void RegularSolution::sample(double h, std::size_t n, cplx* out) const {
  constexpr std::size_t reseed = 512;
  std::size_t j = 0;
  auto run = [&](double r0, double r1, cplx q, cplx u0, cplx du0, bool last) {
    const cplx s = std::sin(0.5 * q * h);
    const cplx delta = -4.0 * s * s;
    std::size_t since = reseed;
    cplx d = 0.0;
    while (j < n) {
      const double r = static_cast<double>(j) * h;
      if (!last && r >= r1) break;
      if (since >= reseed) {
        const cplx a = transfer(q, r - r0, u0, du0).first;
        const cplx b = transfer(q, r - h - r0, u0, du0).first;
        out[j] = a;
        d = a - b;
        since = 0;
      } else {
        out[j] = out[j - 1] + d;
      }
      d += delta * out[j];
      ++since;
      ++j;
    }
  };
  if (n == 0) return;
  for (const auto& p : pieces_) run(p.r0, p.r1, p.q, p.u0, p.du0, false);
  run(range_, 0.0, k_, ua_, dua_, true);
}

cplx jost(const Potential& potential, cplx k) { return RegularSolution(potential, k).jost(); }

JostData regular_solution(const Potential& potential, double k, const RadialGrid& grid) {
  if (!(k > 0.0) || !std::isfinite(k))
    throw DomainError(fmt::format("regular_solution needs k > 0 (got {}); use jost_at_zero for k = 0", k));
  RegularSolution sol(potential, k);
  const cplx f = sol.jost();
  std::vector<cplx> u(grid.size());
  sol.sample(grid.spacing(), grid.size(), u.data());
  JostData out{k, f, -std::arg(f), std::vector<double>(grid.size())};
  const double scale = k / std::abs(f);
  for (std::size_t i = 0; i < u.size(); ++i) out.regular_solution[i] = scale * u[i].real();
  return out;
}

std::vector<double> phase_shift_sweep(const Potential& potential, std::span<const double> ks) {
  std::vector<double> out;
  out.reserve(ks.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double d = -std::arg(jost(potential, ks[i]));
    if (i > 0) {
      while (d - prev > std::numbers::pi) d -= 2.0 * std::numbers::pi;
      while (d - prev < -std::numbers::pi) d += 2.0 * std::numbers::pi;
    }
    out.push_back(d);
    prev = d;
  }
  return out;
}

std::vector<double> integrate_rk4(const Potential& potential, double k, const RadialGrid& grid) {
  const double h = grid.spacing();
  const auto brk = potential.breakpoints();
  const double k2 = k * k;
  std::vector<double> out(grid.size(), 0.0);
  double u = 0.0;
  double du = 1.0;

  auto rk4 = [&](double L, double V) {
    // y = (u, u'), y' = (u', (V - k^2) u)
    const double c = V - k2;
    const double k1u = du, k1d = c * u;
    const double k2u = du + 0.5 * L * k1d, k2d = c * (u + 0.5 * L * k1u);
    const double k3u = du + 0.5 * L * k2d, k3d = c * (u + 0.5 * L * k2u);
    const double k4u = du + L * k3d, k4d = c * (u + L * k3u);
    u += L / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    du += L / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
  };
  auto jump_at = [&](double r) {
    for (const auto& s : potential.shells())
      if (std::abs(s.r - r) <= 1e-12 * std::max(1.0, r)) du += s.lambda * u;
  };

  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    double r = grid.r(j);
    const double r_next = grid.r(j + 1);
    for (double b : brk) {
      if (b > r + 1e-12 * h && b < r_next - 1e-12 * h) {
        rk4(b - r, potential(0.5 * (r + b)));
        jump_at(b);
        r = b;
      }
    }
    rk4(r_next - r, potential(0.5 * (r + r_next)));
    for (double b : brk)
      if (std::abs(b - r_next) <= 1e-12 * h) jump_at(b);
    out[j + 1] = u;
  }
  return out;
}

double jost_at_zero(const Potential& potential) { return RegularSolution(potential, 0.0).du_range().real(); }

double find_zero_energy_coupling(const PotentialFamily& family, double lo, double hi) {
  if (!(lo < hi)) std::swap(lo, hi);
  auto g = [&](double lam) { return jost_at_zero(family(lam)); };
  const double glo = g(lo);
  const double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo > 0.0) == (ghi > 0.0))
    throw NotBracketed(fmt::format("f(0) has the same sign at both ends of [{}, {}] ({} and {})", lo, hi, glo, ghi));
  std::uintmax_t iters = 200;
  const auto [a, b] =
      boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(53), iters);
  const double root = std::abs(g(a)) <= std::abs(g(b)) ? a : b;
  if (!(std::abs(g(root)) < 1e-12))
    throw NumericalError(fmt::format("zero-energy coupling refinement stalled at {} (f(0) = {})", root, g(root)));
  return root;
}

double bound_state_function(const Potential& potential, double kappa) {
  RegularSolution sol(potential, cplx(0.0, kappa));
  return (sol.du_range() + kappa * sol.u_range()).real();
}

namespace {

double virtual_state_function(const Potential& potential, double kappa) {
  RegularSolution sol(potential, cplx(0.0, kappa));
  return (sol.du_range() - kappa * sol.u_range()).real();
}

// Scan (0, kappa_max] for sign changes and refine each one.
template <class F>
std::vector<double> imaginary_axis_roots(F&& g, double range, double kappa_max) {
  if (!(kappa_max > 0.0)) kappa_max = 50.0 / range;
  std::vector<double> ks;
  for (double x = 1e-8 / range; x < 0.05 / range; x *= 1.1) ks.push_back(x);
  const double step = 0.005 / range;
  for (double x = 0.05 / range; x < kappa_max; x += step) ks.push_back(x);
  ks.push_back(kappa_max);

  std::vector<double> roots;
  double a = ks[0];
  double ga = g(a);
  for (std::size_t i = 1; i < ks.size(); ++i) {
    const double b = ks[i];
    const double gb = g(b);
    if (gb == 0.0) {
      roots.push_back(b);
    } else if (ga != 0.0 && (ga > 0.0) != (gb > 0.0)) {
      std::uintmax_t iters = 200;
      const auto [x0, x1] =
          boost::math::tools::toms748_solve(g, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(53), iters);
      roots.push_back(std::abs(g(x0)) <= std::abs(g(x1)) ? x0 : x1);
    }
    a = b;
    ga = gb;
  }
  return roots;
}

}  // namespace

std::vector<double> bound_state_kappas(const Potential& potential, double kappa_max) {
  return imaginary_axis_roots([&](double kap) { return bound_state_function(potential, kap); },
                              potential.range(), kappa_max);
}

std::vector<BoundState> find_bound_states(const Potential& potential, const RadialGrid& grid, double kappa_max) {
  if (kappa_max < 0.0) throw DomainError("kappa_max must be positive");
  const double a = potential.range();
  const auto kappas = bound_state_kappas(potential, kappa_max);

  std::vector<BoundState> out;
  for (double kap : kappas) {
    // tail beyond the grid must be negligible to normalize on it
    const double tail = std::exp(-2.0 * kap * (grid.r_max() - a));
    if (tail > 1e-14)
      throw DomainError(fmt::format("grid r_max = {} too short for bound state kappa = {}", grid.r_max(), kap));
    RegularSolution sol(potential, cplx(0.0, kap));
    const std::size_t inner = std::min(grid.size(), grid.floor_index(a) + 1);
    std::vector<cplx> u(inner);
    sol.sample(grid.spacing(), inner, u.data());
    BoundState b{kap, -kap * kap, std::vector<double>(grid.size(), 0.0)};
    const double ua = sol.u_range().real();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = grid.r(i);
      b.wavefunction[i] = (i < inner && r < a) ? u[i].real() : ua * std::exp(-kap * (r - a));
    }
    std::vector<double> dens(grid.size());
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = b.wavefunction[i] * b.wavefunction[i];
    const double n = std::sqrt(grid.integrate(dens, grid.size() - 1));
    for (auto& v : b.wavefunction) v /= n;
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<double> find_virtual_states(const Potential& potential, double kappa_max) {
  return imaginary_axis_roots([&](double kap) { return virtual_state_function(potential, kap); },
                              potential.range(), kappa_max);
}

InitialState project_out_bound_states(const InitialState& state, const std::vector<BoundState>& bound) {
  if (bound.empty()) return state;
  const auto& grid = state.grid();
  std::vector<cplx> s(state.samples().begin(), state.samples().end());
  const std::size_t last = grid.size() - 1;
  for (const auto& b : bound)
    if (b.wavefunction.size() != grid.size()) throw DomainError("bound state and initial state grids differ");
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : bound) {
      std::vector<cplx> bc(b.wavefunction.begin(), b.wavefunction.end());
      const cplx ov = inner_product(grid, bc, s, last);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] -= ov * b.wavefunction[i];
    }
  }
  return InitialState::rebuild(grid, std::move(s), grid.r_max(), state.continuum_source(),
                               state.label() + " (bound-projected)", 1e-8);
}

// ---------------------------------------------------------------------------
// argument principle + Newton

namespace {

struct ArgWalk {
  double total = 0.0;
  double min_abs = std::numeric_limits<double>::infinity();
};

ArgWalk walk_edge(const Potential& pot, cplx z0, cplx z1) {
  ArgWalk w;
  const double len = std::abs(z1 - z0);
  double s = 0.0;
  double ds = std::min(1.0, 0.25 / std::max(len, 1e-300));
  cplx f0 = jost(pot, z0);
  w.min_abs = std::abs(f0);
  while (s < 1.0) {
    const double s1 = std::min(1.0, s + ds);
    const cplx f1 = jost(pot, z0 + (z1 - z0) * s1);
    const double d = std::arg(f1 / f0);
    if (std::abs(d) > 0.3 && (s1 - s) * len > 1e-12) {
      ds *= 0.5;
      continue;
    }
    w.total += d;
    w.min_abs = std::min(w.min_abs, std::abs(f1));
    f0 = f1;
    s = s1;
    if (std::abs(d) < 0.1) ds *= 1.5;
  }
  return w;
}

}  // namespace

int count_zeros(const Potential& potential, std::span<const cplx> polygon) {
  double total = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto w = walk_edge(potential, polygon[i], polygon[(i + 1) % polygon.size()]);
    if (w.min_abs < 1e-13) throw NumericalError("Jost zero on the counting contour");
    total += w.total;
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

namespace {

struct NewtonResult {
  cplx k;
  double residual;
  bool ok;
};

NewtonResult newton(const Potential& pot, cplx k) {
  cplx f = jost(pot, k);
  for (int it = 0; it < 80; ++it) {
    const double hstep = 1e-7 * std::max(1.0, std::abs(k));
    const cplx df = (jost(pot, k + hstep) - jost(pot, k - hstep)) / (2.0 * hstep);
    if (df == cplx(0.0)) break;
    const cplx step = f / df;
    k -= step;
    f = jost(pot, k);
    if (!std::isfinite(k.real()) || !std::isfinite(k.imag())) return {k, INFINITY, false};
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(k))) break;
  }
  return {k, std::abs(f), std::abs(f) < 1e-10};
}

struct BoxSearch {
  const Potential& pot;
  std::vector<ResonancePole> found;
  bool failed = false;

  int count_box(const SearchBox& b) {
    const std::array<cplx, 4> poly{cplx(b.re_lo, b.im_lo), cplx(b.re_hi, b.im_lo), cplx(b.re_hi, b.im_hi),
                                   cplx(b.re_lo, b.im_hi)};
    return count_zeros(pot, poly);
  }

  static bool inside(const SearchBox& b, cplx k, double slack) {
    return k.real() >= b.re_lo - slack && k.real() <= b.re_hi + slack && k.imag() >= b.im_lo - slack &&
           k.imag() <= b.im_hi + slack;
  }

  void run(const SearchBox& b, int n, int depth) {
    if (n <= 0) return;
    const double w = b.re_hi - b.re_lo;
    const double hgt = b.im_hi - b.im_lo;
    const double diam = std::hypot(w, hgt);
    if (n == 1 || diam < 1e-6) {
      const auto r = newton(pot, cplx(0.5 * (b.re_lo + b.re_hi), 0.5 * (b.im_lo + b.im_hi)));
      if (r.ok && inside(b, r.k, 1e-9 * std::max(1.0, std::abs(r.k)))) {
        found.push_back({r.k, n, r.residual});
        return;
      }
      if (diam < 1e-6 || depth > 60) {
        failed = true;
        return;
      }
    }
    SearchBox lo = b;
    SearchBox hi = b;
    // split slightly off-centre so that symmetric zeros do not land on the cut
    const double frac = 0.5 + 0.0137 * ((depth % 3) - 1);
    if (w >= hgt) {
      lo.re_hi = hi.re_lo = b.re_lo + frac * w;
    } else {
      lo.im_hi = hi.im_lo = b.im_lo + frac * hgt;
    }
    int n_lo = 0;
    try {
      n_lo = count_box(lo);
    } catch (const NumericalError&) {
      // a zero sits on the cut: shift it
      const double f2 = frac + 0.031;
      if (w >= hgt) {
        lo.re_hi = hi.re_lo = b.re_lo + f2 * w;
      } else {
        lo.im_hi = hi.im_lo = b.im_lo + f2 * hgt;
      }
      n_lo = count_box(lo);
    }
    run(lo, n_lo, depth + 1);
    run(hi, n - n_lo, depth + 1);
  }
};

}  // namespace

PoleSearch find_resonance_poles(const Potential& potential, const SearchBox& box, std::size_t n_max) {
  if (!(box.re_lo < box.re_hi && box.im_lo < box.im_hi))
    throw DomainError("search box must have re_lo < re_hi and im_lo < im_hi");
  if (box.im_hi > 0.0) throw DomainError("search box must lie in the lower half plane");
  PoleSearch out;
  BoxSearch search{potential, {}, false};
  out.zero_count = search.count_box(box);
  search.run(box, out.zero_count, 0);

  auto poles = std::move(search.found);
  std::sort(poles.begin(), poles.end(), [](const ResonancePole& a, const ResonancePole& b) {
    return a.k_pole.real() != b.k_pole.real() ? a.k_pole.real() < b.k_pole.real() : a.k_pole.imag() < b.k_pole.imag();
  });
  std::vector<ResonancePole> merged;
  for (const auto& p : poles) {
    if (!merged.empty() && std::abs(merged.back().k_pole - p.k_pole) < 1e-8) {
      if (p.residual < merged.back().residual) merged.back() = p;
      continue;
    }
    merged.push_back(p);
  }
  if (merged.size() > n_max) merged.resize(n_max);
  out.poles = std::move(merged);
  out.newton_failed = search.failed;
  if (search.failed)
    out.diagnostic = fmt::format("Newton failed to refine some of the {} zeros counted in the box", out.zero_count);
  if (out.zero_count > 0 && out.poles.empty()) {
    out.newton_failed = true;
    out.diagnostic = "Newton diverged from all seeds";
  }
  return out;
}

}  // namespace qdecay
