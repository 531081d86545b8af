#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qdecay {

using cplx = std::complex<double>;

namespace quad {

/// Gauss-Legendre rule on [-1, 1]. Supported orders: 7, 10, 15, 20.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

const GaussRule& gauss_legendre(int n);

/// Composite Simpson weights for `intervals` uniform intervals of width h.
/// An odd interval count closes with the 3/8 rule; one interval falls back to
/// the trapezoid rule.
std::vector<double> simpson_weights(std::size_t intervals, double h);

template <class T>
T simpson(std::span<const T> f, double h) {
  if (f.size() < 2) return T{};
  const auto w = simpson_weights(f.size() - 1, h);
  T acc{};
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * f[i];
  return acc;
}

/// mu_n(theta) = int_0^1 s^n exp(i theta s) ds for n = 0..3, complex theta.
std::array<cplx, 4> unit_moments(cplx theta);

/// int_0^{N h} g(x) exp(i q x) dx for samples g_j = g(j h), j = 0..N, using the
/// exact oscillatory integral of a local cubic interpolant on every cell
/// (linear / quadratic when N < 3). Accurate uniformly in q h; q may be complex.
cplx filon_cubic(std::span<const cplx> g, double h, cplx q);

}  // namespace quad
}  // namespace qdecay
