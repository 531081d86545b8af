#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdecay/config.hpp"
#include "qdecay/decay.hpp"
#include "qdecay/evolve.hpp"
#include "qdecay/pipeline.hpp"
#include "qdecay/scattering.hpp"

namespace py = pybind11;
using namespace qdecay;

namespace {

template <class T>
py::array_t<T> to_array(std::span<const T> v) {
  py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::dict curve_dict(const DecayCurve& c) {
  py::dict d;
  d["region_R"] = c.region_R;
  d["times"] = to_array<double>(c.times);
  d["values"] = to_array<double>(c.values);
  d["gate_change"] = to_array<double>(c.gate_change);
  d["reliable"] = std::vector<bool>(c.reliable);
  d["engine"] = c.engine;
  d["truncated"] = c.truncated;
  d["max_reliable_t"] = c.max_reliable_t;
  d["truncation_reason"] = c.truncation_reason;
  d["parseval"] = c.parseval;
  d["k_max"] = c.k_max;
  return d;
}

py::dict fit_dict(const ExponentFit& f) {
  py::dict d;
  d["exponent"] = f.exponent;
  d["amplitude"] = f.amplitude;
  d["residual"] = f.residual;
  d["stderr"] = f.stderr_exponent;
  d["t_lo"] = f.t_lo;
  d["t_hi"] = f.t_hi;
  d["samples"] = f.samples;
  d["unstable"] = f.unstable;
  d["local_exponents"] = f.local_exponents;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "qdecay core: scattering data, spectral and grid propagation, decay exponents";
  m.attr("__version__") = version();

  auto domain = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<NotBracketed>(m, "NotBracketed", numerical.ptr());
  py::register_exception<DegenerateState>(m, "DegenerateState", numerical.ptr());
  py::register_exception<DegenerateCombination>(m, "DegenerateCombination", numerical.ptr());
  py::register_exception<IncompleteBasis>(m, "IncompleteBasis", numerical.ptr());
  py::register_exception<QuadratureBudget>(m, "QuadratureBudget", numerical.ptr());
  py::register_exception<BoundaryContamination>(m, "BoundaryContamination", numerical.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  (void)domain;

  py::class_<Potential>(m, "Potential")
      .def_static("free_particle", &Potential::free_particle, py::arg("range_a") = 1.0)
      .def_property_readonly("range", &Potential::range)
      .def_property_readonly("is_free", &Potential::is_free)
      .def("__call__", [](const Potential& p, double r) { return p(r); })
      .def_property_readonly("shells", [](const Potential& p) {
        py::list out;
        for (const auto& s : p.shells()) out.append(py::make_tuple(s.r, s.lambda));
        return out;
      });
  m.def("build_delta_shell", &build_delta_shell, py::arg("lam"), py::arg("a"));

  py::class_<RadialGrid>(m, "RadialGrid")
      .def(py::init<double, std::size_t>(), py::arg("r_max"), py::arg("n_points"))
      .def_property_readonly("r_max", &RadialGrid::r_max)
      .def_property_readonly("size", &RadialGrid::size)
      .def_property_readonly("spacing", &RadialGrid::spacing)
      .def("r", [](const RadialGrid& g) {
        py::array_t<double> a(static_cast<py::ssize_t>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i) a.mutable_at(i) = g.r(i);
        return a;
      });

  py::class_<SineBox>(m, "SineBox")
      .def(py::init([](int n, double R) { return SineBox{n, R}; }), py::arg("n") = 1, py::arg("R") = 1.0)
      .def_readwrite("n", &SineBox::n)
      .def_readwrite("R", &SineBox::R);
  py::class_<GaussianBump>(m, "GaussianBump")
      .def(py::init([](double r0, double sigma, double R) { return GaussianBump{r0, sigma, R}; }), py::arg("r0"),
           py::arg("sigma"), py::arg("R"))
      .def_readwrite("r0", &GaussianBump::r0)
      .def_readwrite("sigma", &GaussianBump::sigma)
      .def_readwrite("R", &GaussianBump::R);

  py::class_<InitialState>(m, "InitialState")
      .def_property_readonly("samples", [](const InitialState& s) { return to_array<cplx>(s.samples()); })
      .def_property_readonly("support", &InitialState::support)
      .def_property_readonly("label", &InitialState::label)
      .def("norm", &InitialState::norm)
      .def("inner", &InitialState::inner);
  m.def("build_initial_state", [](const StateFamily& f, const RadialGrid& g) { return build_initial_state(f, g); },
        py::arg("family"), py::arg("grid"));

  m.def("jost", [](const Potential& p, cplx k) { return jost(p, k); }, py::arg("potential"), py::arg("k"));
  m.def("jost_at_zero", &jost_at_zero, py::arg("potential"));
  m.def("find_zero_energy_coupling", &find_zero_energy_coupling, py::arg("family"), py::arg("lo"), py::arg("hi"));

  py::class_<BoundState>(m, "BoundState")
      .def_readonly("kappa", &BoundState::kappa)
      .def_readonly("energy", &BoundState::energy)
      .def_property_readonly("wavefunction",
                             [](const BoundState& b) { return to_array<double>(b.wavefunction); });
  m.def("find_bound_states", &find_bound_states, py::arg("potential"), py::arg("grid"), py::arg("kappa_max") = 0.0);
  m.def("project_out_bound_states", &project_out_bound_states, py::arg("state"), py::arg("bound"));

  m.def(
      "find_resonance_poles",
      [](const Potential& p, double re_lo, double re_hi, double im_lo, double im_hi, std::size_t n_max) {
        const auto s = find_resonance_poles(p, SearchBox{re_lo, re_hi, im_lo, im_hi}, n_max);
        std::vector<cplx> poles;
        for (const auto& q : s.poles) poles.push_back(q.k_pole);
        return poles;
      },
      py::arg("potential"), py::arg("re_lo"), py::arg("re_hi"), py::arg("im_lo"), py::arg("im_hi"),
      py::arg("n_max") = 20);

  py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
      .def_property_readonly("parseval", &SpectralDecomposition::parseval)
      .def_property_readonly("k_max", &SpectralDecomposition::k_max)
      .def_property_readonly("k", [](const SpectralDecomposition& d) { return to_array<double>(d.k()); })
      .def_property_readonly("coefficients",
                             [](const SpectralDecomposition& d) { return to_array<cplx>(d.coefficients()); })
      .def_property_readonly("resonances", &SpectralDecomposition::resonances);
  m.def(
      "decompose",
      [](const InitialState& s, const Potential& p, double tail_tol) {
        KGridSpec spec;
        spec.tail_tol = tail_tol;
        return decompose(s, p, spec);
      },
      py::arg("state"), py::arg("potential"), py::arg("tail_tol") = 1e-13);

  py::class_<WaveFunction>(m, "WaveFunction")
      .def_readonly("t", &WaveFunction::t)
      .def_readonly("norm", &WaveFunction::norm)
      .def_readonly("quadrature_nodes", &WaveFunction::quadrature_nodes)
      .def_property_readonly("engine", [](const WaveFunction& w) { return to_string(w.engine); })
      .def_property_readonly("samples", [](const WaveFunction& w) { return to_array<cplx>(w.samples); })
      .def_property_readonly("r", [](const WaveFunction& w) {
        py::array_t<double> a(static_cast<py::ssize_t>(w.samples.size()));
        for (std::size_t i = 0; i < w.samples.size(); ++i) a.mutable_at(i) = w.grid.r(i);
        return a;
      });
  m.def(
      "propagate_spectral",
      [](const SpectralDecomposition& d, double t, double r_eval) {
        PropagateOptions o;
        o.r_eval = r_eval;
        return propagate_spectral(d, t, o);
      },
      py::arg("decomp"), py::arg("t"), py::arg("r_eval") = 0.0, py::call_guard<py::gil_scoped_release>());
  m.def(
      "propagate_grid",
      [](const InitialState& s, const Potential& p, double t, double dt) { return propagate_grid(s, p, t, dt); },
      py::arg("state"), py::arg("potential"), py::arg("t"), py::arg("dt"), py::call_guard<py::gil_scoped_release>());
  m.def("nonescape", &nonescape, py::arg("wf"), py::arg("R"));

  m.def(
      "decay_curve",
      [](const InitialState& s, const Potential& p, double R, double t_min, double t_max, int per_decade) {
        CurveOptions o;
        o.times = TimeSpec{t_min, t_max, per_decade};
        DecayCurve c;
        {
          py::gil_scoped_release release;
          c = decay_curve(s, p, R, o);
        }
        return curve_dict(c);
      },
      py::arg("state"), py::arg("potential"), py::arg("R"), py::arg("t_min") = 1.0, py::arg("t_max") = 1e5,
      py::arg("per_decade") = 10);
  m.def(
      "fit_exponent",
      [](const std::vector<double>& t, const std::vector<double>& p, double lo, double hi) {
        return fit_dict(fit_exponent(t, p, lo, hi));
      },
      py::arg("times"), py::arg("values"), py::arg("t_lo"), py::arg("t_hi"));
  m.def(
      "engineer_vanishing_moment",
      [](const InitialState& a, const InitialState& b, const Potential& p) {
        auto e = engineer_vanishing_moment(a, b, p);
        return py::make_tuple(e.state, e.alpha);
      },
      py::arg("state_a"), py::arg("state_b"), py::arg("potential"));

  m.def("parse_config", [](const std::string& text) { return dump_config(parse_config(text)); },
        "Validate a JSON run config and return its canonical form.");
  m.def("dump_config", []() { return dump_config(RunConfig{}); }, "Default run config as JSON.");
  m.def(
      "run_command",
      [](const std::string& name, const std::string& config_json, const std::string& out_dir) {
        const RunConfig cfg = parse_config(config_json.empty() ? "{}" : config_json);
        py::gil_scoped_release release;
        return run_command(name, cfg, RunOptions{out_dir, 0});
      },
      py::arg("name"), py::arg("config_json") = "", py::arg("out_dir") = ".");
}
