#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"

#include "qdecay/scattering.hpp"

using namespace qdecay;

namespace {

PotentialFamily shell_family(double a) {
  return [a](double lam) { return build_delta_shell(lam, a); };
}

}  // namespace

TEST_CASE("free potential: f = 1, no phase shift") {
  const auto pot = Potential::free_particle(1.0);
  const RadialGrid g(5.0, 5001);
  for (double k : {0.1, 1.0, 7.5}) {
    const auto jd = regular_solution(pot, k, g);
    CHECK(std::abs(jd.f0 - 1.0) < 1e-14);
    CHECK(std::abs(jd.phase_shift) < 1e-14);
    CHECK(std::abs(jd.regular_solution[2000] - std::sin(k * 2.0)) < 1e-12);
  }
  CHECK(jost_at_zero(pot) == 1.0);
}

TEST_CASE("delta shell Jost function matches the piecewise matcher") {
  for (double lam : {6.0, -2.0, 0.5, -1.0}) {
    for (double a : {0.5, 1.0, 2.0}) {
      const auto pot = build_delta_shell(lam, a);
      for (double k : {0.05, 1.0, 2.7, 13.0}) {
        const cplx ref = oracle::delta_shell_jost(lam, a, k);
        CHECK(std::abs(jost(pot, k) - ref) < 1e-12 * std::max(1.0, std::abs(ref)));
      }
      // analytic continuation into the lower half plane
      const cplx kc(3.0, -0.7);
      const cplx ref = oracle::delta_shell_jost(lam, a, kc);
      CHECK(std::abs(jost(pot, kc) - ref) < 1e-11 * std::max(1.0, std::abs(ref)));
    }
  }
  const RadialGrid g(3.0, 3001);
  const auto jd = regular_solution(build_delta_shell(6.0, 1.0), 1.0, g);
  CHECK(std::abs(jd.f0 - oracle::delta_shell_jost(6.0, 1.0, 1.0)) < 1e-12);
}

TEST_CASE("unitarity |f(-k)/f(k)| = 1 on the real axis") {
  const auto pot = build_delta_shell(6.0, 1.0);
  for (double k = 0.01; k < 30.0; k *= 1.37) {
    const double s = std::abs(jost(pot, -k) / jost(pot, k));
    REQUIRE(std::abs(s - 1.0) < 1e-10);
  }
}

TEST_CASE("regular solution: real, vanishing at 0, agrees with RK4") {
  const auto pot = build_delta_shell(6.0, 1.0);
  const RadialGrid g(3.0, 3001);
  const double k = 2.3;
  const auto jd = regular_solution(pot, k, g);
  CHECK(jd.regular_solution[0] == 0.0);
  const auto rk = integrate_rk4(pot, k, g);
  // rk is the raw u with u'(0) = 1; jd is scaled by k/|f|
  const double scale = k / std::abs(jd.f0);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(scale * rk[i] - jd.regular_solution[i]));
  CHECK(worst < 1e-8);
  // exterior: sin(kr + delta)
  const double r = 2.5;
  CHECK(jd.regular_solution[2500] == doctest::Approx(std::sin(k * r + jd.phase_shift)).epsilon(1e-10));

  CHECK_THROWS_AS(regular_solution(pot, 0.0, g), DomainError);
  CHECK_THROWS_AS(regular_solution(pot, -1.0, g), DomainError);
}

TEST_CASE("phase shift is continuous over [0.1, 10] for lambda = 6") {
  const auto pot = build_delta_shell(6.0, 1.0);
  std::vector<double> ks;
  for (double k = 0.1; k <= 10.0; k += 0.01) ks.push_back(k);
  const auto d = phase_shift_sweep(pot, ks);
  for (std::size_t i = 1; i < d.size(); ++i) {
    REQUIRE(std::abs(d[i] - d[i - 1]) < 0.5);
    // agrees with the matcher mod pi
    const double ref = -std::arg(oracle::delta_shell_jost(6.0, 1.0, ks[i]));
    const double diff = std::remainder(d[i] - ref, std::numbers::pi);
    REQUIRE(std::abs(diff) < 1e-10);
  }
}

TEST_CASE("jost_at_zero equals 1 + lambda a") {
  for (double lam = -3.0; lam <= 3.0001; lam += 0.25)
    for (double a : {0.5, 1.0, 2.0}) REQUIRE(std::abs(jost_at_zero(build_delta_shell(lam, a)) - oracle::delta_shell_f0(lam, a)) < 1e-10);
  CHECK(std::abs(jost_at_zero(build_delta_shell(-1.0, 1.0))) < 1e-15);
}

TEST_CASE("jost_at_zero agrees with a zero-energy RK4 integration") {
  for (double lam : {-2.0, -0.4, 3.0}) {
    const auto pot = build_delta_shell(lam, 1.0);
    const RadialGrid g(3.0, 30001);
    const auto u = integrate_rk4(pot, 1e-9, g);
    const double h = g.spacing();
    const double slope = (u[25000 + 1] - u[25000 - 1]) / (2.0 * h);
    CHECK(slope == doctest::Approx(jost_at_zero(pot)).epsilon(1e-7));
  }
}

TEST_CASE("zero-energy coupling") {
  CHECK(std::abs(find_zero_energy_coupling(shell_family(1.0), -2.0, -0.5) + 1.0) < 1e-10);
  CHECK(std::abs(find_zero_energy_coupling(shell_family(2.0), -1.0, -0.25) + 0.5) < 1e-10);
  const double ls = find_zero_energy_coupling(shell_family(1.0), -2.0, -0.5);
  CHECK(std::abs(jost_at_zero(build_delta_shell(ls, 1.0))) < 1e-12);
  CHECK_THROWS_AS(find_zero_energy_coupling(shell_family(1.0), 1.0, 2.0), NotBracketed);
}

TEST_CASE("bound states: counts agree with grid diagonalization") {
  const RadialGrid g(40.0, 40001);
  CHECK(find_bound_states(Potential::free_particle(1.0), g).empty());

  for (double lam : {-0.5, -0.9, 0.5, 6.0}) {
    CHECK(find_bound_states(build_delta_shell(lam, 1.0), g).empty());
    CHECK(oracle::fd_negative_count(oracle::fd_delta_shell(lam, 1.0, 40.0, 4000)) == 0);
  }
  for (double lam : {-2.0, -3.0, -1.5}) {
    const auto b = find_bound_states(build_delta_shell(lam, 1.0), g);
    REQUIRE(b.size() == 1);
    CHECK(oracle::fd_negative_count(oracle::fd_delta_shell(lam, 1.0, 40.0, 4000)) == 1);
  }
}

TEST_CASE("lambda = -2 bound energy matches the extrapolated FD spectrum") {
  const RadialGrid g(40.0, 40001);
  for (double lam : {-2.0, -3.0}) {
    const auto b = find_bound_states(build_delta_shell(lam, 1.0), g);
    REQUIRE(b.size() == 1);
    const double e_fd = oracle::fd_lowest_extrapolated(lam, 1.0, 40.0, 2000);
    CHECK(std::abs(b[0].energy - e_fd) < 1e-6 * std::abs(e_fd));
    CHECK(b[0].kappa == doctest::Approx(oracle::delta_shell_kappa(lam, 1.0)).epsilon(1e-12));
    CHECK(std::abs(jost(build_delta_shell(lam, 1.0), cplx(0.0, b[0].kappa))) < 1e-12);

    // normalized, exponential tail outside the shell
    std::vector<double> dens(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dens[i] = b[0].wavefunction[i] * b[0].wavefunction[i];
    CHECK(std::abs(g.integrate(dens, g.size() - 1) - 1.0) < 1e-10);
    const double u2 = b[0].wavefunction[2000], u5 = b[0].wavefunction[5000];
    CHECK(std::abs(u5 / u2 - std::exp(-b[0].kappa * 3.0)) < 1e-8 * std::exp(-b[0].kappa * 3.0));
  }
}

TEST_CASE("grid too short for the bound-state tail is rejected") {
  const RadialGrid g(3.0, 3001);
  CHECK_THROWS_AS(find_bound_states(build_delta_shell(-1.1, 1.0), g), DomainError);
}

TEST_CASE("projecting out bound states") {
  const RadialGrid g(40.0, 40001);
  const auto pot = build_delta_shell(-2.0, 1.0);
  const auto bound = find_bound_states(pot, g);
  const auto st = build_initial_state(SineBox{1, 1.0}, g);

  const auto same = project_out_bound_states(st, {});
  CHECK(std::abs(same.inner(st) - 1.0) < 1e-12);

  const auto proj = project_out_bound_states(st, bound);
  std::vector<cplx> ub(bound[0].wavefunction.begin(), bound[0].wavefunction.end());
  CHECK(std::abs(inner_product(g, ub, proj.samples(), g.size() - 1)) < 1e-10);
  CHECK(std::abs(proj.norm() - 1.0) < 1e-10);

  auto pure = InitialState::from_samples(g, ub, g.r_max(), "bound");
  CHECK_THROWS_AS(project_out_bound_states(pure, bound), DegenerateState);
}

TEST_CASE("resonance poles of the lambda = 6 shell") {
  const auto pot = build_delta_shell(6.0, 1.0);
  const auto s = find_resonance_poles(pot, {0.5, 12.0, -3.0, -1e-6}, 20);
  REQUIRE_FALSE(s.poles.empty());
  CHECK(s.zero_count == static_cast<int>(s.poles.size()));
  CHECK_FALSE(s.newton_failed);
  auto lowest = s.poles.front();
  for (const auto& p : s.poles) {
    CHECK(p.k_pole.imag() < 0.0);
    CHECK(std::abs(jost(pot, p.k_pole)) < 1e-10);
    CHECK(std::abs(oracle::delta_shell_jost(6.0, 1.0, p.k_pole)) < 1e-9);
    // the mirrored partner -conj(k) is a zero too
    CHECK(std::abs(jost(pot, -std::conj(p.k_pole))) < 1e-9);
    if (p.k_pole.real() < lowest.k_pole.real()) lowest = p;
  }
  CHECK(lowest.k_pole.real() > 2.0);
  CHECK(lowest.k_pole.real() < 4.0);
  // lambda = -2 has its first pole further out and deeper
  const auto s2 = find_resonance_poles(build_delta_shell(-2.0, 1.0), {0.5, 5.0, -3.0, -1e-6}, 5);
  REQUIRE(s2.poles.size() == 1);
  CHECK(s2.poles[0].k_pole.real() == doctest::Approx(3.711855379).epsilon(1e-8));
  CHECK(s2.poles[0].k_pole.imag() == doctest::Approx(-0.703551996).epsilon(1e-8));
  CHECK(lowest.k_pole.real() == doctest::Approx(2.757938321).epsilon(1e-8));
  CHECK(lowest.k_pole.imag() == doctest::Approx(-0.140432732).epsilon(1e-8));
}

TEST_CASE("no poles for the free particle") {
  const auto s = find_resonance_poles(Potential::free_particle(1.0), {0.1, 10.0, -3.0, -1e-6}, 10);
  CHECK(s.poles.empty());
  CHECK(s.zero_count == 0);
}

TEST_CASE("argument principle count") {
  const auto pot = build_delta_shell(6.0, 1.0);
  const std::vector<cplx> box{{2.5, -0.05}, {2.5, -0.5}, {3.0, -0.5}, {3.0, -0.05}};
  CHECK(count_zeros(pot, box) == 1);
  const std::vector<cplx> empty{{0.1, -0.1}, {0.1, -0.3}, {2.0, -0.3}, {2.0, -0.1}};
  CHECK(count_zeros(pot, empty) == 0);
}

TEST_CASE("virtual state of a weak attractive shell") {
  // f(-i kappa) = 0 with 1 + lam (e^{2 kappa a} - 1) / (2 kappa)... solved via the matcher
  const auto pot = build_delta_shell(-0.9, 1.0);
  const auto v = find_virtual_states(pot);
  REQUIRE(v.size() >= 1);
  for (double kappa : v) CHECK(std::abs(oracle::delta_shell_jost(-0.9, 1.0, cplx(0.0, -kappa))) < 1e-10);
  CHECK(bound_state_kappas(pot).empty());
}
