#include "qdecay/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <fmt/format.h>
#include "json.hpp"

#include "qdecay/decay.hpp"
#include "qdecay/evolve.hpp"
#include "qdecay/scattering.hpp"

namespace qdecay {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string num(double x) { return fmt::format("{:.17g}", x); }

struct Setup {
  Potential potential;
  RadialGrid grid;
  InitialState state;
  std::size_t bound_states = 0;
};

Setup prepare(const RunConfig& cfg) {
  Potential pot = make_potential(cfg.potential);
  RadialGrid grid = make_grid(cfg.grid);
  InitialState st = build_initial_state(make_family(cfg.state), grid);
  std::size_t nb = 0;
  if (!pot.is_free()) {
    auto bound = find_bound_states(pot, grid, cfg.poles.kappa_max);
    nb = bound.size();
    if (nb > 0 && cfg.project_bound_states) st = project_out_bound_states(st, bound);
  }
  return Setup{std::move(pot), std::move(grid), std::move(st), nb};
}

class Output {
 public:
  Output(const RunOptions& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    path_ = (fs::path(opts.out_dir) / name).string();
    f_.open(path_, std::ios::binary | std::ios::trunc);
    if (!f_) throw ConfigError("--out", fmt::format("cannot write '{}'", path_));
  }
  void line(const std::string& s) { f_ << s << '\n'; }
  void close() {
    f_.close();
    if (!f_) throw std::runtime_error(fmt::format("error writing '{}'", path_));
  }

 private:
  std::string path_;
  std::ofstream f_;
};

json provenance_json(const std::string& command, const RunConfig& cfg, const RunOptions& opts) {
  return {{"tool", "qdecay"},
          {"version", version()},
          {"command", command},
          {"seed", opts.seed},
          {"config", json::parse(dump_config(cfg, -1))}};
}

void write_json(const RunOptions& opts, const std::string& name, const json& j) {
  Output o(opts, name);
  o.line(j.dump(2));
  o.close();
}

json fit_json(const ExponentFit& f) {
  return {{"exponent", f.exponent},
          {"amplitude", f.amplitude},
          {"residual", f.residual},
          {"stderr", f.stderr_exponent},
          {"t_lo", f.t_lo},
          {"t_hi", f.t_hi},
          {"samples", f.samples},
          {"unstable", f.unstable},
          {"local_exponents", f.local_exponents}};
}

DecayCurve grid_curve(const Setup& s, const RunConfig& cfg) {
  GridOptions go;
  go.region_R = cfg.region_R;
  go.flux_tol = cfg.grid_engine.flux_tol;
  GridPropagator prop(s.state, s.potential, cfg.grid_engine.dt, go);
  DecayCurve c;
  c.engine = "grid";
  c.region_R = cfg.region_R;
  for (double t : sample_times(cfg.time)) {
    if (t > prop.t_safe()) {
      c.truncated = true;
      c.truncation_reason =
          fmt::format("grid engine boundary-safe time {:.6g} reached (grid.r_max = {})", prop.t_safe(), cfg.grid.r_max);
      break;
    }
    const auto wf = prop.advance_to(t);
    c.times.push_back(t);
    c.values.push_back(nonescape(wf, cfg.region_R));
    c.gate_change.push_back(std::nan(""));
    c.reliable.push_back(true);
    c.nodes.push_back(wf.quadrature_nodes);
    c.max_reliable_t = t;
  }
  return c;
}

}  // namespace

const char* version() noexcept { return QDECAY_VERSION; }

void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

std::vector<std::string> provenance_lines(const std::string& command, const RunConfig& cfg, const RunOptions& opts) {
  return {fmt::format("# qdecay {} {}", version(), command), fmt::format("# seed: {}", opts.seed),
          fmt::format("# config: {}", dump_config(cfg, -1))};
}

int cmd_evolve(const RunConfig& cfg, const RunOptions& opts) {
  const Setup s = prepare(cfg);
  const double r_eval = cfg.evolve.r_eval > 0.0 ? cfg.evolve.r_eval : cfg.region_R;
  const std::size_t last = s.grid.floor_index(r_eval);

  std::vector<WaveFunction> snaps;
  if (cfg.engine == "spectral") {
    KGridSpec ks;
    ks.tail_tol = cfg.tolerances.tail_tol;
    ks.deficit_limit = cfg.tolerances.deficit_limit;
    const auto d = decompose(s.state, s.potential, ks);
    PropagateOptions po;
    po.r_eval = r_eval;
    po.max_nodes = cfg.tolerances.max_nodes;
    for (double t : cfg.evolve.times) snaps.push_back(propagate_spectral(d, t, po));
  } else {
    GridOptions go;
    go.region_R = r_eval;
    go.flux_tol = cfg.grid_engine.flux_tol;
    GridPropagator prop(s.state, s.potential, cfg.grid_engine.dt, go);
    auto times = cfg.evolve.times;
    std::sort(times.begin(), times.end());
    for (double t : times) snaps.push_back(prop.advance_to(t));
  }

  json summary = provenance_json("evolve", cfg, opts);
  summary["bound_states"] = s.bound_states;
  summary["snapshots"] = json::array();
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto& wf = snaps[i];
    const std::string name = fmt::format("evolve_{:03d}.csv", i);
    Output o(opts, name);
    for (const auto& l : provenance_lines("evolve", cfg, opts)) o.line(l);
    o.line(fmt::format("# t: {}", num(wf.t)));
    o.line("r,re_psi,im_psi");
    const std::size_t n = std::min(last + 1, wf.samples.size());
    for (std::size_t j = 0; j < n; ++j)
      o.line(fmt::format("{},{},{}", num(wf.grid.r(j)), num(wf.samples[j].real()), num(wf.samples[j].imag())));
    o.close();
    summary["snapshots"].push_back({{"file", name},
                                    {"t", wf.t},
                                    {"engine", to_string(wf.engine)},
                                    {"norm", wf.norm},
                                    {"P_region", nonescape(wf, std::min(cfg.region_R, wf.grid.r(n - 1)))},
                                    {"nodes", wf.quadrature_nodes}});
  }
  write_json(opts, "evolve.json", summary);
  std::cout << fmt::format("wrote {} snapshot(s) to {}\n", snaps.size(), opts.out_dir);
  return kOk;
}

int cmd_decay(const RunConfig& cfg, const RunOptions& opts) {
  const Setup s = prepare(cfg);
  const DecayCurve c =
      cfg.engine == "grid" ? grid_curve(s, cfg) : decay_curve(s.state, s.potential, cfg.region_R, make_curve_options(cfg));

  Output o(opts, "decay.csv");
  for (const auto& l : provenance_lines("decay", cfg, opts)) o.line(l);
  o.line("t,P,local_exponent,gate_change,reliable");
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    double le = std::nan("");
    if (i > 0 && c.values[i] > 0.0 && c.values[i - 1] > 0.0)
      le = std::log(c.values[i] / c.values[i - 1]) / std::log(c.times[i] / c.times[i - 1]);
    o.line(fmt::format("{},{},{},{},{}", num(c.times[i]), num(c.values[i]), num(le), num(c.gate_change[i]),
                       c.reliable[i] ? 1 : 0));
  }
  o.close();

  json j = provenance_json("decay", cfg, opts);
  j["engine"] = c.engine;
  j["region_R"] = c.region_R;
  j["bound_states"] = s.bound_states;
  j["truncated"] = c.truncated;
  j["truncation_reason"] = c.truncation_reason;
  j["max_reliable_t"] = c.max_reliable_t;
  j["parseval"] = c.parseval;
  j["k_max"] = c.k_max;
  j["tail_mass"] = c.tail_mass;
  j["resonances"] = c.resonances;

  int code = c.truncated ? kDegraded : kOk;
  try {
    const ExponentFit f = cfg.fit.t_lo > 0.0 ? fit_exponent(c, cfg.fit.t_lo, cfg.fit.t_hi) : fit_exponent(c);
    j["fit"] = fit_json(f);
    j["exponent"] = f.exponent;
    std::cout << fmt::format("exponent {:.4f} +- {:.1e} over t in [{:.4g}, {:.4g}]{}\n", f.exponent,
                             f.stderr_exponent, f.t_lo, f.t_hi, f.unstable ? " (unstable)" : "");
  } catch (const DomainError& e) {
    j["fit"] = nullptr;
    j["exponent"] = nullptr;
    j["fit_error"] = e.what();
    std::cerr << "fit failed: " << e.what() << "\n";
    if (code == kOk) code = kNumericalFailure;
  }
  write_json(opts, "fit.json", j);
  if (c.truncated) std::cerr << "curve truncated: " << c.truncation_reason << "\n";
  return code;
}

int cmd_scan(const RunConfig& cfg, const RunOptions& opts) {
  const RadialGrid grid = make_grid(cfg.grid);
  const InitialState st = build_initial_state(make_family(cfg.state), grid);
  const PotentialConfig pc = cfg.potential;
  const PotentialFamily family = [pc](double lambda) { return make_potential(pc, lambda); };
  const Window w{cfg.fit.t_lo, cfg.fit.t_hi};
  const auto points = scan_coupling(family, cfg.scan.lambdas, st, cfg.region_R, make_curve_options(cfg), w);

  Output o(opts, "scan.csv");
  for (const auto& l : provenance_lines("scan", cfg, opts)) o.line(l);
  o.line("lambda,exponent,residual,stderr,t_lo,t_hi,unstable,bound_states,truncated,error");
  int code = kOk;
  for (const auto& p : points) {
    std::string err = p.error;
    for (auto& ch : err)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    if (p.fit) {
      const auto& f = *p.fit;
      o.line(fmt::format("{},{},{},{},{},{},{},{},{},", num(p.lambda), num(f.exponent), num(f.residual),
                         num(f.stderr_exponent), num(f.t_lo), num(f.t_hi), f.unstable ? 1 : 0, p.bound_states,
                         p.truncated ? 1 : 0));
    } else {
      o.line(fmt::format("{},nan,nan,nan,nan,nan,0,{},{},{}", num(p.lambda), p.bound_states, p.truncated ? 1 : 0, err));
      code = kDegraded;
    }
    if (p.truncated) code = kDegraded;
  }
  o.close();
  std::cout << fmt::format("scanned {} coupling(s)\n", points.size());
  return code;
}

int cmd_poles(const RunConfig& cfg, const RunOptions& opts) {
  const Potential pot = make_potential(cfg.potential);
  const SearchBox box{cfg.poles.re_lo, cfg.poles.re_hi, cfg.poles.im_lo, cfg.poles.im_hi};
  const auto search = find_resonance_poles(pot, box, cfg.poles.n_max);

  json j = provenance_json("poles", cfg, opts);
  j["jost_at_zero"] = jost_at_zero(pot);
  j["box"] = {{"re_lo", box.re_lo}, {"re_hi", box.re_hi}, {"im_lo", box.im_lo}, {"im_hi", box.im_hi}};
  j["zero_count"] = search.zero_count;
  j["newton_failed"] = search.newton_failed;
  j["diagnostic"] = search.diagnostic;
  j["poles"] = json::array();
  for (const auto& p : search.poles)
    j["poles"].push_back({{"re", p.k_pole.real()}, {"im", p.k_pole.imag()}, {"order", p.order}, {"residual", p.residual}});
  // -conj(k) partners lie in the mirrored box
  j["mirror_poles"] = json::array();
  for (const auto& p : search.poles) j["mirror_poles"].push_back({{"re", -p.k_pole.real()}, {"im", p.k_pole.imag()}});
  j["bound_states"] = json::array();
  for (double kappa : bound_state_kappas(pot, cfg.poles.kappa_max))
    j["bound_states"].push_back({{"kappa", kappa}, {"energy", -kappa * kappa}});
  j["virtual_states"] = json::array();
  for (double kappa : find_virtual_states(pot, cfg.poles.kappa_max)) j["virtual_states"].push_back({{"kappa", kappa}});
  write_json(opts, "poles.json", j);
  std::cout << fmt::format("{} pole(s), {} bound state(s)\n", j["poles"].size(), j["bound_states"].size());
  return search.newton_failed ? kDegraded : kOk;
}

int run_command(const std::string& name, const RunConfig& cfg, const RunOptions& opts) {
  try {
    if (name == "evolve") return cmd_evolve(cfg, opts);
    if (name == "decay") return cmd_decay(cfg, opts);
    if (name == "scan") return cmd_scan(cfg, opts);
    if (name == "poles") return cmd_poles(cfg, opts);
    std::cerr << "unknown command '" << name << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const QuadratureBudget& e) {
    std::cerr << "quadrature budget exceeded: " << e.what() << "\n";
    return kDegraded;
  } catch (const BoundaryContamination& e) {
    std::cerr << "boundary contamination: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace qdecay
