#pragma once

// Reference values computed without the library's scattering or propagation
// code: closed forms, plain matching, finite-difference spectra.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

// Delta shell lam*delta(r-a): u = sin(kr)/k inside, jump u'(a+) - u'(a-) = lam u(a),
// outside u = A e^{ikr} + B e^{-ikr} with u ~ (f(-k) e^{ikr} - f(k) e^{-ikr}) / 2ik.
inline cplx delta_shell_jost(double lam, double a, cplx k) {
  const cplx ua = std::sin(k * a) / k;
  const cplx dua = std::cos(k * a) + lam * ua;
  // solve A e^{ika} + B e^{-ika} = ua,  ik (A e^{ika} - B e^{-ika}) = dua
  const cplx em = std::exp(-I * k * a);
  const cplx B = 0.5 * (ua - dua / (I * k)) / em;
  return -2.0 * I * k * B;
}

// Zero-energy slope beyond the shell: u = r inside, u'(a+) = 1 + lam a.
inline double delta_shell_f0(double lam, double a) { return 1.0 + lam * a; }

// kappa of the delta-shell bound state from 1 + lam (1 - e^{-2 kappa a}) / (2 kappa) = 0.
inline double delta_shell_kappa(double lam, double a) {
  auto g = [&](double kap) { return 1.0 + lam * (-std::expm1(-2.0 * kap * a)) / (2.0 * kap); };
  double lo = 1e-12, hi = std::abs(lam) + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Number of eigenvalues below E of the tridiagonal matrix (Sturm sequence).
inline std::size_t sturm_count(const std::vector<double>& diag, double off, double E) {
  std::size_t count = 0;
  double q = diag[0] - E;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = diag[i] - E - off * off / q;
    if (q < 0.0) ++count;
  }
  return count;
}

// FD Hamiltonian -u'' + (lam/h) delta_{node a} on (0, r_max) with Dirichlet walls.
struct FdHamiltonian {
  std::vector<double> diag;
  double off;
};

inline FdHamiltonian fd_delta_shell(double lam, double a, double r_max, std::size_t intervals) {
  const double h = r_max / static_cast<double>(intervals);
  FdHamiltonian H{std::vector<double>(intervals - 1, 2.0 / (h * h)), -1.0 / (h * h)};
  const auto node = static_cast<std::size_t>(std::llround(a / h));
  H.diag[node - 1] += lam / h;
  return H;
}

inline std::size_t fd_negative_count(const FdHamiltonian& H) { return sturm_count(H.diag, H.off, 0.0); }

inline double fd_lowest(const FdHamiltonian& H) {
  double lo = -1e6, hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sturm_count(H.diag, H.off, mid) >= 1 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Lowest eigenvalue at h, h/2, h/4 with two Richardson passes in h^2.
inline double fd_lowest_extrapolated(double lam, double a, double r_max, std::size_t intervals) {
  const double e1 = fd_lowest(fd_delta_shell(lam, a, r_max, intervals));
  const double e2 = fd_lowest(fd_delta_shell(lam, a, r_max, 2 * intervals));
  const double e3 = fd_lowest(fd_delta_shell(lam, a, r_max, 4 * intervals));
  const double r12 = (4.0 * e2 - e1) / 3.0;
  const double r23 = (4.0 * e3 - e2) / 3.0;
  return (16.0 * r23 - r12) / 15.0;
}

// Free whole-line evolution of exp(-x^2 / 2 s^2) under i psi_t = -psi_xx.
inline cplx free_gaussian(double x, double t, double sigma) {
  const cplx s2 = sigma * sigma + 2.0 * I * t;
  return std::sqrt(sigma * sigma / s2) * std::exp(-x * x / (2.0 * s2));
}

// Half-line evolution by the image method: odd extension of the bump.
inline cplx free_half_line_bump(double r, double t, double r0, double sigma) {
  return free_gaussian(r - r0, t, sigma) - free_gaussian(r + r0, t, sigma);
}

// int_0^R sqrt(2/R) sin(n pi r / R) sin(k r) dr.
inline double sine_box_transform(int n, double R, double k) {
  const double q = n * std::numbers::pi / R;
  auto sinc_int = [&](double w) { return std::abs(w) < 1e-12 ? R : std::sin(w * R) / w; };
  return std::sqrt(2.0 / R) * 0.5 * (sinc_int(q - k) - sinc_int(q + k));
}

// Composite Simpson L2 norm of a difference on a uniform grid (odd sample count).
inline double l2(std::span<const cplx> a, std::span<const cplx> b, double h, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * std::norm(a[i] - b[i]);
  }
  return std::sqrt(acc * h / 3.0);
}

}  // namespace oracle
