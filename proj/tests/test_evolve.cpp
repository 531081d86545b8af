#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"

#include "qdecay/decay.hpp"
#include "qdecay/evolve.hpp"

using namespace qdecay;

namespace {

double l2_on(const RadialGrid& g, std::span<const cplx> a, std::span<const cplx> b, std::size_t last) {
  std::vector<double> d(last + 1);
  for (std::size_t i = 0; i <= last; ++i) d[i] = std::norm(a[i] - b[i]);
  return std::sqrt(g.integrate(d, last));
}

double density_to(const WaveFunction& w, double R) {
  std::vector<double> d(w.samples.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(w.samples[i]);
  return w.grid.integrate_to(d, R);
}

}  // namespace

TEST_CASE("free SineBox coefficients equal the sine transform") {
  const RadialGrid g(2.0, 2001);
  const auto st = build_initial_state(SineBox{1, 1.0}, g);
  const auto d = decompose(st, Potential::free_particle(1.0));
  for (double k : {0.01, 0.5, 3.14159, 10.0, 123.4, 2000.0}) {
    // f = 1: c(k) = int sin(kr) Psi0(r) dr
    CHECK(std::abs(d.coefficient(k) - oracle::sine_box_transform(1, 1.0, k)) < 1e-9);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < d.k().size(); j += 7)
    worst = std::max(worst, std::abs(d.coefficients()[j] - oracle::sine_box_transform(1, 1.0, d.k()[j])));
  CHECK(worst < 1e-9);
  CHECK(std::abs(d.parseval() - 1.0) < 1e-6);
  CHECK(d.tail_mass() < 1e-12);
}

TEST_CASE("Parseval and t = 0 reconstruction") {
  const RadialGrid g(2.0, 2001);
  SUBCASE("SineBox, lambda = 6") {
    const auto st = build_initial_state(SineBox{1, 1.0}, g);
    const auto d = decompose(st, build_delta_shell(6.0, 1.0));
    CHECK(std::abs(d.parseval() - 1.0) < 1e-6);
    const auto rec = d.reconstruct(g.nearest(1.5));
    CHECK(l2_on(g, rec, st.samples(), rec.size() - 1) < 1e-6);
  }
  SUBCASE("GaussianBump, lambda = -0.5") {
    const auto st = build_initial_state(GaussianBump{0.5, 0.1, 1.0}, g);
    const auto d = decompose(st, build_delta_shell(-0.5, 1.0));
    CHECK(std::abs(d.parseval() - 1.0) < 1e-6);
    const auto rec = d.reconstruct(g.size() - 1);
    CHECK(l2_on(g, rec, st.samples(), g.size() - 1) < 1e-6);
  }
  SUBCASE("spectral engine at t = 0 returns the samples") {
    const auto st = build_initial_state(SineBox{2, 1.0}, g);
    const auto d = decompose(st, build_delta_shell(4.0, 1.0));
    const auto w = propagate_spectral(d, 0.0);
    CHECK(l2_on(g, w.samples, st.samples(), w.samples.size() - 1) < 1e-6);
  }
}

TEST_CASE("bound component left in the state is reported") {
  const RadialGrid g(40.0, 40001);
  const auto pot = build_delta_shell(-2.0, 1.0);
  const auto st = build_initial_state(SineBox{1, 1.0}, g);
  const auto bound = find_bound_states(pot, g);
  REQUIRE(bound.size() == 1);
  std::vector<cplx> ub(bound[0].wavefunction.begin(), bound[0].wavefunction.end());
  const double overlap2 = std::norm(inner_product(g, ub, st.samples(), g.size() - 1));
  REQUIRE(overlap2 > 1e-3);
  try {
    (void)decompose(st, pot);
    FAIL("expected IncompleteBasis");
  } catch (const IncompleteBasis& e) {
    CHECK(std::abs(e.deficit() - overlap2) < 1e-6);
  }
  // after projection the basis is complete
  const auto d = decompose(project_out_bound_states(st, bound), pot);
  CHECK(std::abs(d.parseval() - 1.0) < 1e-6);
}

TEST_CASE("free half-line Gaussian follows the image solution") {
  const RadialGrid g(12.0, 12001);
  const GaussianBump fam{1.5, 0.2, 3.0};
  const auto st = build_initial_state(fam, g);
  const std::size_t peak = g.nearest(fam.r0);
  const double scale = st.samples()[peak].real() / family_shape(fam, fam.r0);
  const auto d = decompose(st, Potential::free_particle(1.0));
  PropagateOptions po;
  po.r_eval = 10.0;
  for (double t : {0.5, 5.0, 50.0}) {
    const auto w = propagate_spectral(d, t, po);
    std::vector<cplx> ref(w.samples.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = scale * oracle::free_half_line_bump(g.r(i), t, fam.r0, fam.sigma);
    CAPTURE(t);
    CHECK(l2_on(g, w.samples, ref, ref.size() - 1) < 1e-6);
    CHECK(std::abs(w.norm - 1.0) < 1e-8);
  }
}

TEST_CASE("propagation composes in time") {
  // Psi(t1) from the closed form, evolved by t2, against the closed form at t1 + t2.
  const RadialGrid g(15.0, 15001);
  const double r0 = 3.0, sigma = 0.3, t1 = 0.1, t2 = 0.2;
  std::vector<cplx> s(g.size());
  for (std::size_t i = 1; i < g.size(); ++i) s[i] = oracle::free_half_line_bump(g.r(i), t1, r0, sigma);
  const auto st = InitialState::from_samples(g, s, g.r_max(), "evolved bump");
  const double scale = std::abs(st.samples()[g.nearest(r0)]) / std::abs(s[g.nearest(r0)]);
  const auto d = decompose(st, Potential::free_particle(1.0));
  PropagateOptions po;
  po.r_eval = 8.0;
  const auto w = propagate_spectral(d, t2, po);
  std::vector<cplx> ref(w.samples.size());
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = scale * oracle::free_half_line_bump(g.r(i), t1 + t2, r0, sigma);
  CHECK(l2_on(g, w.samples, ref, ref.size() - 1) < 1e-6);
}

TEST_CASE("panel halving leaves P(t) unchanged") {
  const RadialGrid g(2.0, 2001);
  const auto st = build_initial_state(SineBox{1, 1.0}, g);
  KGridSpec ks;
  ks.tail_tol = 1e-10;
  const auto d = decompose(st, build_delta_shell(6.0, 1.0), ks);
  PropagateOptions po;
  po.r_eval = 1.0;
  for (double t : {3.0, 300.0, 3e4}) {
    const auto a = propagate_spectral(d, t, po);
    po.refine = 2;
    const auto b = propagate_spectral(d, t, po);
    po.refine = 1;
    CHECK(b.quadrature_nodes == 2 * a.quadrature_nodes);
    CHECK(a.quadrature_nodes == spectral_node_count(d, t, po));
    const double pa = density_to(a, 1.0), pb = density_to(b, 1.0);
    CAPTURE(t);
    CHECK(std::abs(pa - pb) < 1e-8 * pb);
  }
}

TEST_CASE("spectral evaluation beyond the grid is rejected") {
  const RadialGrid g(2.0, 2001);
  const auto d = decompose(build_initial_state(SineBox{1, 1.0}, g), build_delta_shell(6.0, 1.0));
  PropagateOptions po;
  po.r_eval = 3.0;
  CHECK_THROWS_AS(propagate_spectral(d, 1.0, po), DomainError);
  CHECK_THROWS_AS(propagate_spectral(d, -1.0), DomainError);
}

TEST_CASE("quadrature budget is enforced") {
  const RadialGrid g(2.0, 2001);
  const auto d = decompose(build_initial_state(SineBox{1, 1.0}, g), build_delta_shell(6.0, 1.0));
  PropagateOptions po;
  po.max_nodes = 100;
  CHECK_THROWS_AS(propagate_spectral(d, 0.01, po), QuadratureBudget);
}

TEST_CASE("grid engine: identity, unitarity, guard") {
  const RadialGrid g(2.0, 2001);
  const auto st = build_initial_state(SineBox{1, 1.0}, g);
  const auto pot = build_delta_shell(6.0, 1.0);

  GridPropagator gp(st, pot, 1e-4);
  const auto w0 = gp.snapshot();
  CHECK(l2_on(g, w0.samples, st.samples(), g.size() - 1) == 0.0);
  const double n0 = gp.discrete_norm();
  gp.step(10000);
  CHECK(gp.time() == doctest::Approx(1.0));
  CHECK(std::abs(gp.discrete_norm() / n0 - 1.0) < 1e-8);

  GridPropagator guarded(st, pot, 1e-4);
  CHECK(guarded.t_safe() > 0.0);
  CHECK_THROWS_AS(guarded.advance_to(guarded.t_safe() + 0.1), BoundaryContamination);
  try {
    (void)propagate_grid(st, pot, 5.0, 1e-4);
    FAIL("expected BoundaryContamination");
  } catch (const BoundaryContamination& e) {
    CHECK(e.t_safe() > 0.0);
    CHECK(e.t_safe() < 5.0);
  }
  CHECK_THROWS_AS(GridPropagator(st, pot, 0.0), DomainError);
}

TEST_CASE("grid engine agrees with the spectral engine") {
  const RadialGrid g(12.0, 12001);
  const auto pot = build_delta_shell(6.0, 1.0);
  const auto st = build_initial_state(GaussianBump{2.0, 0.2, 3.5}, g);
  const auto d = decompose(st, pot, KGridSpec{.tail_tol = 1e-12});
  GridOptions go;
  go.region_R = 3.5;
  GridPropagator gp(st, pot, 5e-5, go);
  PropagateOptions po;
  po.r_eval = 3.5;
  for (double t : {0.05, 0.1}) {
    REQUIRE(t <= gp.t_safe());
    const auto ws = propagate_spectral(d, t, po);
    const auto wg = gp.advance_to(t);
    const std::size_t last = g.nearest(3.5);
    CAPTURE(t);
    CHECK(l2_on(g, ws.samples, wg.samples, last) < 1e-4);
    CHECK(std::abs(nonescape(ws, 3.5) - nonescape(wg, 3.5)) < 1e-4);
  }
}

TEST_CASE("grid engine error shrinks under refinement") {
  // smooth packet, free evolution, image solution as reference
  const GaussianBump fam{1.5, 0.2, 3.0};
  const double t = 0.05;
  double prev = 1e300;
  for (std::size_t n : {4001u, 8001u, 16001u}) {
    const RadialGrid g(8.0, n);
    const auto st = build_initial_state(fam, g);
    const double scale = st.samples()[g.nearest(fam.r0)].real() / family_shape(fam, fam.r0);
    const double h = g.spacing();
    const auto w = propagate_grid(st, Potential::free_particle(1.0), t, 0.1 * h);
    std::vector<cplx> ref(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) ref[i] = scale * oracle::free_half_line_bump(g.r(i), t, fam.r0, fam.sigma);
    const double err = l2_on(g, w.samples, ref, g.nearest(6.0));
    CAPTURE(n);
    CHECK(err < 0.5 * prev);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("resolved momentum of a single sine mode") {
  const RadialGrid g(2.0, 2001);
  std::vector<cplx> s(g.size());
  const double q = 7.0 * std::numbers::pi / g.r_max();
  for (std::size_t i = 0; i < g.size(); ++i) s[i] = std::sin(q * g.r(i));
  const double k = resolved_momentum(g, s, 1e-8);
  CHECK(k >= q * (1.0 - 1e-9));
  CHECK(k < q + 2.0 * std::numbers::pi / g.r_max());
}
