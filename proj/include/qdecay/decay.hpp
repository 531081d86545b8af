#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdecay/evolve.hpp"

namespace qdecay {

/// P(t) = int_0^R |Psi(r, t)|^2 dr. Throws DomainError when R exceeds the
/// evaluated part of the wavefunction.
double nonescape(const WaveFunction& wf, double R);

struct TimeSpec {
  double t_min = 1.0;
  double t_max = 1e5;
  int per_decade = 10;
};

/// Log-spaced times t_min * 10^(i / per_decade), ending exactly at t_max.
std::vector<double> sample_times(const TimeSpec& spec);

struct CurveOptions {
  TimeSpec times;
  KGridSpec kgrid{.tail_tol = 1e-10};
  PropagateOptions propagate;
  bool halving_gate = true;
  double gate_tol = 1e-8;
};

struct DecayCurve {
  double region_R = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> gate_change;  // relative change of P under panel halving (NaN if gate off)
  std::vector<bool> reliable;
  std::vector<std::size_t> nodes;
  std::string engine = "spectral";
  bool truncated = false;
  double max_reliable_t = 0.0;
  std::string truncation_reason;
  // quadrature metadata
  double parseval = 0.0;
  double k_max = 0.0;
  double tail_mass = 0.0;
  std::size_t resonances = 0;
};

/// P(t_i) on log-spaced times; the state must already be free of bound components.
DecayCurve decay_curve(const InitialState& state, const Potential& potential, double R, const CurveOptions& opts = {});
DecayCurve decay_curve(const SpectralDecomposition& decomp, double R, const CurveOptions& opts = {});

struct ExponentFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double exponent = 0.0;
  double amplitude = 0.0;   // P ~ amplitude * t^exponent
  double residual = 0.0;    // rms of log P about the fit
  double stderr_exponent = 0.0;
  std::size_t samples = 0;
  std::vector<double> local_exponents;
  bool unstable = false;
};

/// Least-squares slope of log P against log t over [t_lo, t_hi].
ExponentFit fit_exponent(const std::vector<double>& times, const std::vector<double>& values, double t_lo, double t_hi);
ExponentFit fit_exponent(const DecayCurve& curve, double t_lo, double t_hi);
/// Default window: the last 1.5 decades of reliable samples.
ExponentFit fit_exponent(const DecayCurve& curve);

struct Window {
  double t_lo = 0.0;  // 0: default window
  double t_hi = 0.0;
};

struct ScanPoint {
  double lambda = 0.0;
  std::optional<ExponentFit> fit;
  std::size_t bound_states = 0;
  bool truncated = false;
  std::string error;  // empty on success
};

/// Exponent per coupling; failures are recorded per point.
std::vector<ScanPoint> scan_coupling(const PotentialFamily& family, const std::vector<double>& lambdas,
                                     const InitialState& state, double R, const CurveOptions& opts = {},
                                     const Window& window = {});

struct EngineeredState {
  InitialState state;
  double alpha;
  double moment_a;
  double moment_b;
  double moment_combined;
};

/// lim_{k->0} c(k)/k by Richardson extrapolation in k^2.
double small_k_moment(const SpectralDecomposition& decomp);
double small_k_moment(const InitialState& state, const Potential& potential);

/// state_a - alpha state_b (normalized) with the small-k moment removed.
/// Throws DegenerateCombination when the inputs are proportional near k = 0.
EngineeredState engineer_vanishing_moment(const InitialState& a, const InitialState& b, const Potential& potential);

}  // namespace qdecay
