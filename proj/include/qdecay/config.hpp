#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdecay/decay.hpp"
#include "qdecay/model.hpp"

namespace qdecay {

/// Bad or inconsistent config; field() names the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::invalid_argument(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct PotentialConfig {
  std::string family = "delta_shell";  // delta_shell | free
  double lambda = 6.0;
  double a = 1.0;
};

struct StateConfig {
  std::string family = "sine_box";  // sine_box | gaussian_bump
  int n = 1;
  double R = 1.0;
  double r0 = 0.5;
  double sigma = 0.1;
};

struct GridConfig {
  double r_max = 2.0;
  std::size_t n_points = 2001;
};

struct EvolveConfig {
  std::vector<double> times{0.0, 1.0, 10.0};
  double r_eval = 0.0;  // 0: region_R
};

struct GridEngineConfig {
  double dt = 1e-4;
  double flux_tol = 1e-8;
};

struct ScanConfig {
  std::vector<double> lambdas{2.0, 4.0, 6.0, 8.0};
};

struct FitConfig {
  double t_lo = 0.0;  // 0: last 1.5 reliable decades
  double t_hi = 0.0;
};

struct PolesConfig {
  double re_lo = 1e-3;
  double re_hi = 20.0;
  double im_lo = -3.0;
  double im_hi = -1e-6;
  std::size_t n_max = 20;
  double kappa_max = 0.0;  // 0: 50 / a
};

struct ToleranceConfig {
  double tail_tol = 1e-10;
  double deficit_limit = 1e-3;
  double gate_tol = 1e-8;
  bool halving_gate = true;
  std::size_t max_nodes = 1'500'000;
};

struct RunConfig {
  PotentialConfig potential;
  StateConfig state;
  bool project_bound_states = true;
  double region_R = 1.0;
  GridConfig grid;
  TimeSpec time;
  std::string engine = "spectral";  // spectral | grid
  EvolveConfig evolve;
  GridEngineConfig grid_engine;
  ScanConfig scan;
  FitConfig fit;
  PolesConfig poles;
  ToleranceConfig tolerances;
};

/// Parse JSON text; unknown keys and bad values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical JSON (sorted keys, every field present).
std::string dump_config(const RunConfig& cfg, int indent = 2);

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& cfg);

Potential make_potential(const PotentialConfig& p);
Potential make_potential(const PotentialConfig& p, double lambda);
StateFamily make_family(const StateConfig& s);
RadialGrid make_grid(const GridConfig& g);
CurveOptions make_curve_options(const RunConfig& cfg);

}  // namespace qdecay
