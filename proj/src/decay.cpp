#include "qdecay/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace qdecay {

double nonescape(const WaveFunction& wf, double R) {
  if (!(R >= 0.0)) throw DomainError(fmt::format("region radius must be >= 0, got {}", R));
  if (wf.samples.empty()) throw DomainError("empty wavefunction");
  const double r_avail = wf.grid.r(wf.samples.size() - 1);
  if (R > r_avail * (1.0 + 1e-12))
    throw DomainError(fmt::format("region R = {} exceeds the evaluated grid (r <= {})", R, r_avail));
  std::vector<double> dens(wf.samples.size());
  for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = std::norm(wf.samples[i]);
  const double P = wf.grid.integrate_to(dens, std::min(R, r_avail));
  return std::max(0.0, P);
}

std::vector<double> sample_times(const TimeSpec& spec) {
  if (!(spec.t_min > 0.0) || !(spec.t_max >= spec.t_min) || spec.per_decade < 1)
    throw DomainError("time spec needs 0 < t_min <= t_max and per_decade >= 1");
  std::vector<double> out;
  const double decades = std::log10(spec.t_max / spec.t_min);
  const auto n = static_cast<int>(std::floor(decades * spec.per_decade + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(spec.t_min * std::pow(10.0, static_cast<double>(i) / spec.per_decade));
  if (out.back() < spec.t_max * (1.0 - 1e-12)) out.push_back(spec.t_max);
  else out.back() = spec.t_max;
  return out;
}

DecayCurve decay_curve(const InitialState& state, const Potential& potential, double R, const CurveOptions& opts) {
  const auto d = decompose(state, potential, opts.kgrid);
  return decay_curve(d, R, opts);
}

DecayCurve decay_curve(const SpectralDecomposition& d, double R, const CurveOptions& opts) {
  if (!(R > 0.0)) throw DomainError(fmt::format("region R must be positive, got {}", R));
  if (R > d.grid().r_max()) throw DomainError(fmt::format("region R = {} exceeds grid r_max = {}", R, d.grid().r_max()));
  const auto ts = sample_times(opts.times);
  const std::size_t n = ts.size();

  PropagateOptions base = opts.propagate;
  base.r_eval = R;
  PropagateOptions fine = base;
  fine.refine = base.refine * 2;

  std::vector<double> P(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> change(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> nodes(n, 0);
  std::vector<std::string> failure(n);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const auto wf = propagate_spectral(d, ts[i], base);
      P[i] = std::min(nonescape(wf, R), 1.0 + 1e-10);
      nodes[i] = wf.quadrature_nodes;
      if (opts.halving_gate) {
        const double P2 = nonescape(propagate_spectral(d, ts[i], fine), R);
        change[i] = P[i] > 0.0 ? std::abs(P2 - P[i]) / P[i] : std::numeric_limits<double>::infinity();
      }
    } catch (const QuadratureBudget& e) {
      failure[i] = e.what();
    }
  }

  DecayCurve c;
  c.region_R = R;
  c.parseval = d.parseval();
  c.k_max = d.k_max();
  c.tail_mass = d.tail_mass();
  c.resonances = d.resonances().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!failure[i].empty()) {
      c.truncated = true;
      if (c.truncation_reason.empty()) c.truncation_reason = failure[i];
      continue;
    }
    c.times.push_back(ts[i]);
    c.values.push_back(P[i]);
    c.gate_change.push_back(change[i]);
    c.nodes.push_back(nodes[i]);
    const bool ok = !opts.halving_gate || change[i] < opts.gate_tol;
    c.reliable.push_back(ok);
    if (ok) c.max_reliable_t = ts[i];
  }
  return c;
}

// ---------------------------------------------------------------------------

ExponentFit fit_exponent(const std::vector<double>& times, const std::vector<double>& values, double t_lo,
                         double t_hi) {
  if (times.size() != values.size()) throw DomainError("times and values differ in length");
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError(fmt::format("bad fit window [{}, {}]", t_lo, t_hi));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo * (1.0 - 1e-12) || times[i] > t_hi * (1.0 + 1e-12)) continue;
    if (!(values[i] > 0.0))
      throw DomainError(fmt::format("P(t = {}) = {} is not positive: quadrature noise floor reached", times[i], values[i]));
    x.push_back(std::log(times[i]));
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 8)
    throw DomainError(fmt::format("fit window [{}, {}] holds {} samples; at least 8 are needed", t_lo, t_hi, x.size()));

  const auto m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  ExponentFit f;
  f.t_lo = std::exp(x.front());
  f.t_hi = std::exp(x.back());
  f.exponent = sxy / sxx;
  const double b = my - f.exponent * mx;
  f.amplitude = std::exp(b);
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (b + f.exponent * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / m);
  f.stderr_exponent = x.size() > 2 ? std::sqrt(ss / (m - 2.0) / sxx) : 0.0;
  f.samples = x.size();
  for (std::size_t i = 0; i + 1 < x.size(); ++i) f.local_exponents.push_back((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
  const auto [lo, hi] = std::minmax_element(f.local_exponents.begin(), f.local_exponents.end());
  f.unstable = (*hi - *lo) > 0.3;
  return f;
}

ExponentFit fit_exponent(const DecayCurve& curve, double t_lo, double t_hi) {
  std::vector<double> t, v;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    if (!curve.reliable[i]) continue;
    t.push_back(curve.times[i]);
    v.push_back(curve.values[i]);
  }
  return fit_exponent(t, v, t_lo, t_hi);
}

ExponentFit fit_exponent(const DecayCurve& curve) {
  if (!(curve.max_reliable_t > 0.0)) throw DomainError("curve has no reliable samples");
  const double t_hi = curve.max_reliable_t;
  return fit_exponent(curve, t_hi / std::pow(10.0, 1.5), t_hi);
}

// ---------------------------------------------------------------------------

std::vector<ScanPoint> scan_coupling(const PotentialFamily& family, const std::vector<double>& lambdas,
                                     const InitialState& state, double R, const CurveOptions& opts,
                                     const Window& window) {
  std::vector<ScanPoint> out(lambdas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(lambdas.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    ScanPoint& sp = out[i];
    sp.lambda = lambdas[i];
    try {
      const Potential pot = family(lambdas[i]);
      const auto bound = find_bound_states(pot, state.grid());
      sp.bound_states = bound.size();
      const InitialState s = project_out_bound_states(state, bound);
      const auto curve = decay_curve(s, pot, R, opts);
      sp.truncated = curve.truncated;
      sp.fit = window.t_lo > 0.0 ? fit_exponent(curve, window.t_lo, window.t_hi) : fit_exponent(curve);
    } catch (const std::exception& e) {
      sp.error = e.what();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double moment_from_transform(auto&& C_over_f, double S) {
  // g(k) = C(k)/|f(k)| is even in k: Richardson in k^2 on k0, k0/2, k0/4
  const double k0 = 0.02 / S;
  const double g1 = C_over_f(k0);
  const double g2 = C_over_f(0.5 * k0);
  const double g3 = C_over_f(0.25 * k0);
  const double r12 = (4.0 * g2 - g1) / 3.0;
  const double r23 = (4.0 * g3 - g2) / 3.0;
  return (16.0 * r23 - r12) / 15.0;
}

double real_part_checked(cplx z) { return z.real(); }

}  // namespace

double small_k_moment(const InitialState& state, const Potential& potential) {
  const double S = state.grid().r(state.continuum_source().samples.size() - 1);
  return moment_from_transform(
      [&](double k) {
        return real_part_checked(continuum_transform(state, potential, k)) / std::abs(jost(potential, k));
      },
      S);
}

double small_k_moment(const SpectralDecomposition& d) {
  return moment_from_transform(
      [&](double k) { return real_part_checked(d.transform(k)) / std::abs(jost(d.potential(), k)); }, d.support());
}

EngineeredState engineer_vanishing_moment(const InitialState& a, const InitialState& b, const Potential& potential) {
  if (!(a.grid() == b.grid())) throw DomainError("states live on different grids");
  const double ma = small_k_moment(a, potential);
  const double mb = small_k_moment(b, potential);
  if (!(std::abs(mb) > 1e-12 * std::max(1.0, std::abs(ma))))
    throw DegenerateCombination(fmt::format("partner state has vanishing small-k moment ({})", mb));
  const double alpha = ma / mb;

  const auto sa = a.samples();
  const auto sb = b.samples();
  std::vector<cplx> s(sa.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = sa[i] - alpha * sb[i];

  const auto& srca = a.continuum_source();
  const auto& srcb = b.continuum_source();
  InitialState::ContinuumSource src;
  src.samples.assign(std::max(srca.samples.size(), srcb.samples.size()), 0.0);
  for (std::size_t i = 0; i < srca.samples.size(); ++i) src.samples[i] += srca.scale * srca.samples[i];
  for (std::size_t i = 0; i < srcb.samples.size(); ++i) src.samples[i] -= alpha * srcb.scale * srcb.samples[i];
  src.scale = 1.0;

  const double support = std::max(a.support(), b.support());
  try {
    auto st = InitialState::rebuild(a.grid(), std::move(s), support, std::move(src),
                                    fmt::format("{} - ({:.6g}) * {}", a.label(), alpha, b.label()), 1e-8);
    const double mc = small_k_moment(st, potential);
    return EngineeredState{std::move(st), alpha, ma, mb, mc};
  } catch (const DegenerateState& e) {
    throw DegenerateCombination(fmt::format("states are proportional near k = 0: {}", e.what()));
  }
}

}  // namespace qdecay
