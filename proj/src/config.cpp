#include "qdecay/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>
#include "json.hpp"

namespace qdecay {
namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  template <class T>
  void get(const std::string& k, T& out) {
    seen_.insert(k);
    auto it = j_.find(k);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError(key(k), "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(key(k), "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError(key(k), "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (it->template get<long long>() < 0) throw ConfigError(key(k), "must be non-negative");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(key(k), "expected a string");
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!it->is_array()) throw ConfigError(key(k), "expected an array of numbers");
        for (const auto& v : *it)
          if (!v.is_number()) throw ConfigError(key(k), "expected an array of numbers");
      }
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key(k), e.what());
    }
  }

  Reader child(const std::string& k) {
    seen_.insert(k);
    static const json empty = json::object();
    auto it = j_.find(k);
    return Reader(it == j_.end() ? empty : *it, key(k));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(key(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

bool finite_pos(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", fmt::format("invalid JSON: {}", e.what()));
  }
  RunConfig c;
  Reader r(j, "");
  {
    auto p = r.child("potential");
    p.get("family", c.potential.family);
    p.get("lambda", c.potential.lambda);
    p.get("a", c.potential.a);
    p.finish();
  }
  {
    auto s = r.child("state");
    s.get("family", c.state.family);
    s.get("n", c.state.n);
    s.get("R", c.state.R);
    s.get("r0", c.state.r0);
    s.get("sigma", c.state.sigma);
    s.finish();
  }
  r.get("project_bound_states", c.project_bound_states);
  r.get("region_R", c.region_R);
  {
    auto g = r.child("grid");
    g.get("r_max", c.grid.r_max);
    g.get("n_points", c.grid.n_points);
    g.finish();
  }
  {
    auto t = r.child("time");
    t.get("t_min", c.time.t_min);
    t.get("t_max", c.time.t_max);
    t.get("per_decade", c.time.per_decade);
    t.finish();
  }
  r.get("engine", c.engine);
  {
    auto e = r.child("evolve");
    e.get("times", c.evolve.times);
    e.get("r_eval", c.evolve.r_eval);
    e.finish();
  }
  {
    auto g = r.child("grid_engine");
    g.get("dt", c.grid_engine.dt);
    g.get("flux_tol", c.grid_engine.flux_tol);
    g.finish();
  }
  {
    auto s = r.child("scan");
    s.get("lambdas", c.scan.lambdas);
    s.finish();
  }
  {
    auto f = r.child("fit");
    f.get("t_lo", c.fit.t_lo);
    f.get("t_hi", c.fit.t_hi);
    f.finish();
  }
  {
    auto p = r.child("poles");
    p.get("re_lo", c.poles.re_lo);
    p.get("re_hi", c.poles.re_hi);
    p.get("im_lo", c.poles.im_lo);
    p.get("im_hi", c.poles.im_hi);
    p.get("n_max", c.poles.n_max);
    p.get("kappa_max", c.poles.kappa_max);
    p.finish();
  }
  {
    auto t = r.child("tolerances");
    t.get("tail_tol", c.tolerances.tail_tol);
    t.get("deficit_limit", c.tolerances.deficit_limit);
    t.get("gate_tol", c.tolerances.gate_tol);
    t.get("halving_gate", c.tolerances.halving_gate);
    t.get("max_nodes", c.tolerances.max_nodes);
    t.finish();
  }
  r.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c, int indent) {
  json j;
  j["potential"] = {{"family", c.potential.family}, {"lambda", c.potential.lambda}, {"a", c.potential.a}};
  j["state"] = {{"family", c.state.family}, {"n", c.state.n},         {"R", c.state.R},
                {"r0", c.state.r0},         {"sigma", c.state.sigma}};
  j["project_bound_states"] = c.project_bound_states;
  j["region_R"] = c.region_R;
  j["grid"] = {{"r_max", c.grid.r_max}, {"n_points", c.grid.n_points}};
  j["time"] = {{"t_min", c.time.t_min}, {"t_max", c.time.t_max}, {"per_decade", c.time.per_decade}};
  j["engine"] = c.engine;
  j["evolve"] = {{"times", c.evolve.times}, {"r_eval", c.evolve.r_eval}};
  j["grid_engine"] = {{"dt", c.grid_engine.dt}, {"flux_tol", c.grid_engine.flux_tol}};
  j["scan"] = {{"lambdas", c.scan.lambdas}};
  j["fit"] = {{"t_lo", c.fit.t_lo}, {"t_hi", c.fit.t_hi}};
  j["poles"] = {{"re_lo", c.poles.re_lo}, {"re_hi", c.poles.re_hi}, {"im_lo", c.poles.im_lo},
                {"im_hi", c.poles.im_hi}, {"n_max", c.poles.n_max}, {"kappa_max", c.poles.kappa_max}};
  j["tolerances"] = {{"tail_tol", c.tolerances.tail_tol},
                     {"deficit_limit", c.tolerances.deficit_limit},
                     {"gate_tol", c.tolerances.gate_tol},
                     {"halving_gate", c.tolerances.halving_gate},
                     {"max_nodes", c.tolerances.max_nodes}};
  return j.dump(indent);
}

void validate(const RunConfig& c) {
  const auto& p = c.potential;
  require(p.family == "delta_shell" || p.family == "free", "potential.family", "must be 'delta_shell' or 'free'");
  require(finite_pos(p.a), "potential.a", "must be positive");
  require(std::isfinite(p.lambda), "potential.lambda", "must be finite");

  const auto& s = c.state;
  require(s.family == "sine_box" || s.family == "gaussian_bump", "state.family",
          "must be 'sine_box' or 'gaussian_bump'");
  require(finite_pos(s.R), "state.R", "must be positive");
  if (s.family == "sine_box") {
    require(s.n >= 1, "state.n", "must be >= 1");
  } else {
    require(finite_pos(s.r0), "state.r0", "must be positive");
    require(finite_pos(s.sigma), "state.sigma", "must be positive");
    require(s.r0 < s.R, "state.r0", "must be inside (0, state.R)");
  }

  require(finite_pos(c.grid.r_max), "grid.r_max", "must be positive");
  require(c.grid.n_points >= 2, "grid.n_points", "must be >= 2");
  require(c.grid.r_max > p.a, "grid.r_max", "must exceed potential.a");
  require(s.R <= c.grid.r_max, "state.R", "must not exceed grid.r_max");
  require(finite_pos(c.region_R), "region_R", "must be positive");
  require(c.region_R <= c.grid.r_max, "region_R", fmt::format("must not exceed grid.r_max = {}", c.grid.r_max));

  require(finite_pos(c.time.t_min), "time.t_min", "must be positive");
  require(std::isfinite(c.time.t_max) && c.time.t_max >= c.time.t_min, "time.t_max", "must be >= time.t_min");
  require(c.time.per_decade >= 1, "time.per_decade", "must be >= 1");

  require(c.engine == "spectral" || c.engine == "grid", "engine", "must be 'spectral' or 'grid'");
  for (double t : c.evolve.times) require(std::isfinite(t) && t >= 0.0, "evolve.times", "entries must be >= 0");
  require(std::isfinite(c.evolve.r_eval) && c.evolve.r_eval >= 0.0 && c.evolve.r_eval <= c.grid.r_max,
          "evolve.r_eval", "must lie in [0, grid.r_max]");
  require(finite_pos(c.grid_engine.dt), "grid_engine.dt", "must be positive");
  require(finite_pos(c.grid_engine.flux_tol), "grid_engine.flux_tol", "must be positive");
  for (double l : c.scan.lambdas) require(std::isfinite(l), "scan.lambdas", "entries must be finite");

  require(c.fit.t_lo >= 0.0 && c.fit.t_hi >= 0.0, "fit", "window bounds must be >= 0");
  if (c.fit.t_lo > 0.0) require(c.fit.t_hi > c.fit.t_lo, "fit.t_hi", "must exceed fit.t_lo");

  require(c.poles.re_lo < c.poles.re_hi, "poles.re_hi", "must exceed poles.re_lo");
  require(c.poles.im_lo < c.poles.im_hi, "poles.im_hi", "must exceed poles.im_lo");
  require(c.poles.im_hi < 0.0, "poles.im_hi", "search box must lie in the lower half plane");
  require(c.poles.n_max >= 1, "poles.n_max", "must be >= 1");
  require(c.poles.kappa_max >= 0.0, "poles.kappa_max", "must be >= 0");

  require(finite_pos(c.tolerances.tail_tol), "tolerances.tail_tol", "must be positive");
  require(finite_pos(c.tolerances.deficit_limit), "tolerances.deficit_limit", "must be positive");
  require(finite_pos(c.tolerances.gate_tol), "tolerances.gate_tol", "must be positive");
  require(c.tolerances.max_nodes >= 1000, "tolerances.max_nodes", "must be >= 1000");
}

Potential make_potential(const PotentialConfig& p) { return make_potential(p, p.lambda); }

Potential make_potential(const PotentialConfig& p, double lambda) {
  if (p.family == "free") return Potential::free_particle(p.a);
  return build_delta_shell(lambda, p.a);
}

StateFamily make_family(const StateConfig& s) {
  if (s.family == "sine_box") return SineBox{s.n, s.R};
  return GaussianBump{s.r0, s.sigma, s.R};
}

RadialGrid make_grid(const GridConfig& g) { return RadialGrid(g.r_max, g.n_points); }

CurveOptions make_curve_options(const RunConfig& c) {
  CurveOptions o;
  o.times = c.time;
  o.kgrid.tail_tol = c.tolerances.tail_tol;
  o.kgrid.deficit_limit = c.tolerances.deficit_limit;
  o.propagate.max_nodes = c.tolerances.max_nodes;
  o.halving_gate = c.tolerances.halving_gate;
  o.gate_tol = c.tolerances.gate_tol;
  return o;
}

}  // namespace qdecay
