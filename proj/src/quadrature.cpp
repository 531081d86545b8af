#include "qdecay/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace qdecay::quad {
namespace {

template <unsigned N>
GaussRule expand_boost_rule() {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& a = rule::abscissa();
  const auto& w = rule::weights();
  GaussRule out;
  // boost stores the non-negative half; zero (odd N) is the first entry.
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      out.x.push_back(0.0);
      out.w.push_back(w[i]);
    } else {
      out.x.push_back(-a[i]);
      out.w.push_back(w[i]);
      out.x.push_back(a[i]);
      out.w.push_back(w[i]);
    }
  }
  return out;
}

// Monomial coefficients of the Lagrange basis on nodes s_m.
std::vector<std::array<double, 4>> lagrange_coefficients(const std::vector<double>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<std::array<double, 4>> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
    double denom = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == m) continue;
      std::array<double, 4> next{0.0, 0.0, 0.0, 0.0};
      for (std::size_t p = 0; p < 3; ++p) {
        next[p + 1] += poly[p];
        next[p] -= nodes[j] * poly[p];
      }
      poly = next;
      denom *= nodes[m] - nodes[j];
    }
    for (auto& c : poly) c /= denom;
    out[m] = poly;
  }
  return out;
}

struct Stencil {
  int first;                                // first node index relative to the cell start
  std::vector<std::array<double, 4>> coef;  // Lagrange coefficients in s = (x - x_cell)/h
};

Stencil make_stencil(int n_nodes, int first) {
  std::vector<double> nodes;
  for (int m = 0; m < n_nodes; ++m) nodes.push_back(static_cast<double>(first + m));
  return {first, lagrange_coefficients(nodes)};
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const GaussRule g7 = expand_boost_rule<7>();
  static const GaussRule g10 = expand_boost_rule<10>();
  static const GaussRule g15 = expand_boost_rule<15>();
  static const GaussRule g20 = expand_boost_rule<20>();
  switch (n) {
    case 7: return g7;
    case 10: return g10;
    case 15: return g15;
    case 20: return g20;
    default: throw std::invalid_argument("gauss_legendre: unsupported order");
  }
}

std::vector<double> simpson_weights(std::size_t intervals, double h) {
  std::vector<double> w(intervals + 1, 0.0);
  if (intervals == 0) return w;
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  std::size_t simpson_end = intervals;
  if (intervals % 2 == 1) {
    // 3/8 rule on the last three intervals.
    simpson_end = intervals - 3;
    const double c = 3.0 * h / 8.0;
    w[simpson_end] += c;
    w[simpson_end + 1] += 3.0 * c;
    w[simpson_end + 2] += 3.0 * c;
    w[simpson_end + 3] += c;
  }
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

std::array<cplx, 4> unit_moments(cplx theta) {
  std::array<cplx, 4> mu{};
  const cplx it(-theta.imag(), theta.real());  // i * theta
  if (std::abs(theta) < 1.0) {
    for (int n = 0; n < 4; ++n) {
      cplx term = 1.0;  // (i theta)^m / m!
      cplx acc = term / static_cast<double>(n + 1);
      for (int m = 1; m < 30; ++m) {
        term *= it / static_cast<double>(m);
        acc += term / static_cast<double>(n + m + 1);
        if (std::abs(term) < 1e-18) break;
      }
      mu[n] = acc;
    }
    return mu;
  }
  const cplx e = std::exp(it);
  mu[0] = (e - 1.0) / it;
  for (int n = 1; n < 4; ++n) mu[n] = (e - static_cast<double>(n) * mu[n - 1]) / it;
  return mu;
}

cplx filon_cubic(std::span<const cplx> g, double h, cplx q) {
  if (g.size() < 2) return 0.0;
  const int n_int = static_cast<int>(g.size()) - 1;
  const int n_nodes = std::min(4, n_int + 1);

  // Stencils: left edge, interior, right edge (only those that occur).
  static const std::vector<Stencil> stencils = [] {
    std::vector<Stencil> s;
    s.push_back(make_stencil(2, 0));   // N == 1
    s.push_back(make_stencil(3, 0));   // N == 2, first cell
    s.push_back(make_stencil(3, -1));  // N == 2, second cell
    s.push_back(make_stencil(4, 0));   // N >= 3, first cell
    s.push_back(make_stencil(4, -1));  // interior
    s.push_back(make_stencil(4, -2));  // last cell
    return s;
  }();

  const cplx theta = q * h;
  const auto mu = unit_moments(theta);
  auto weights = [&](const Stencil& st) {
    std::array<cplx, 4> w{};
    for (std::size_t m = 0; m < st.coef.size(); ++m) {
      cplx acc = 0.0;
      for (int p = 0; p < 4; ++p) acc += st.coef[m][p] * mu[p];
      w[m] = acc;
    }
    return w;
  };

  auto pick = [&](int cell) -> const Stencil& {
    if (n_nodes == 2) return stencils[0];
    if (n_nodes == 3) return cell == 0 ? stencils[1] : stencils[2];
    if (cell == 0) return stencils[3];
    if (cell == n_int - 1) return stencils[5];
    return stencils[4];
  };

  const cplx it(-theta.imag(), theta.real());
  const cplx step = std::exp(it);
  auto cell_sum = [&](const Stencil& st, int j) {
    const auto w = weights(st);
    cplx cell = 0.0;
    for (std::size_t m = 0; m < st.coef.size(); ++m) cell += w[m] * g[j + st.first + static_cast<int>(m)];
    return cell;
  };

  if (n_nodes < 4) {
    cplx acc = 0.0;
    cplx phase = 1.0;
    for (int j = 0; j < n_int; ++j) {
      acc += phase * cell_sum(pick(j), j);
      phase *= step;
    }
    return h * acc;
  }

  cplx acc = cell_sum(stencils[3], 0);
  acc += std::exp(it * static_cast<double>(n_int - 1)) * cell_sum(stencils[5], n_int - 1);
  // interior cells share one weight set
  const auto w = weights(stencils[4]);
  const cplx w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3];
  cplx phase = step;
  const cplx* gp = g.data();
  for (int j = 1; j < n_int - 1; ++j) {
    if (j % 256 == 0) phase = std::exp(it * static_cast<double>(j));
    const cplx cell = w0 * gp[j - 1] + w1 * gp[j] + w2 * gp[j + 1] + w3 * gp[j + 2];
    acc += phase * cell;
    phase *= step;
  }
  return h * acc;
}

}  // namespace qdecay::quad
