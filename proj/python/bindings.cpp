#include <pybind11/pybind11.h>
#include <pybind11/complex.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bykov/cli.hpp"
#include "bykov/error.hpp"
#include "bykov/ode.hpp"
#include "bykov/orbit.hpp"
#include "bykov/resonance.hpp"

namespace py = pybind11;
using namespace bykov;

namespace {

std::pair<double, double> pair_of(const LiftPoint& p) { return {p.x, p.y}; }

py::dict grid_dict(const ScanGrid& g) {
  py::list cells;
  for (const auto& c : g.cells) {
    py::dict d;
    d["i"] = c.i;
    d["j"] = c.j;
    d["param1"] = c.param1;
    d["param2"] = c.param2;
    d["class"] = c.cls;
    d["exponents"] = c.exponents;
    d["rotation"] = c.rotation;
    d["flags"] = c.flags;
    cells.append(d);
  }
  py::dict out;
  out["axis1"] = py::make_tuple(g.axis1.name, g.axis1.min, g.axis1.max, g.axis1.count);
  out["axis2"] = py::make_tuple(g.axis2.name, g.axis2.min, g.axis2.max, g.axis2.count);
  out["fixed"] = g.fixed;
  out["cells"] = cells;
  return out;
}

}  // namespace

PYBIND11_MODULE(_bykov, m) {
  m.doc() = "Return map of a perturbed Bykov attractor and the associated 4D vector field";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);

  py::class_<MapConstants>(m, "MapConstants")
      .def_static("from_delta", &MapConstants::from_delta, py::arg("delta"), py::arg("K"))
      .def_readonly("delta1", &MapConstants::delta1)
      .def_readonly("delta2", &MapConstants::delta2)
      .def_readonly("delta", &MapConstants::delta)
      .def_readonly("K", &MapConstants::K)
      .def_readonly("M", &MapConstants::M)
      .def("__repr__", [](const MapConstants& c) {
        return "MapConstants(delta=" + std::to_string(c.delta) + ", K=" + std::to_string(c.K) + ")";
      });

  m.def(
      "derive_constants",
      [](double C1, double E1, double C2, double E2, double omega) {
        return derive_constants({C1, E1, C2, E2, omega});
      },
      py::arg("C1"), py::arg("E1"), py::arg("C2"), py::arg("E2"), py::arg("omega") = 1.0);

  py::class_<Params>(m, "Params")
      .def(py::init([](double A, double lambda, double omega) { return Params{A, lambda, omega}; }), py::arg("A"),
           py::arg("lam"), py::arg("omega"))
      .def_readwrite("A", &Params::A)
      .def_readwrite("lam", &Params::lambda)
      .def_readwrite("omega", &Params::omega);

  m.def(
      "return_map", [](double x, double y, const Params& mu, const MapConstants& c) {
        return pair_of(return_map({x, y}, mu, c));
      },
      py::arg("x"), py::arg("y"), py::arg("mu"), py::arg("constants"));
  m.def(
      "jacobian",
      [](double x, double y, const Params& mu, const MapConstants& c) {
        const Jacobian2 j = jacobian({x, y}, mu, c);
        return std::array<std::array<double, 2>, 2>{{{j.a11, j.a12}, {j.a21, j.a22}}};
      },
      py::arg("x"), py::arg("y"), py::arg("mu"), py::arg("constants"));

  m.def("g_ell", &g_ell, py::arg("omega"), py::arg("ell"), py::arg("constants"));
  m.def("omega_star", &omega_star, py::arg("ell"), py::arg("constants"));
  m.def(
      "wedge_membership",
      [](const Params& mu, int ell, const MapConstants& c) { return std::string(to_string(wedge_membership(mu, ell, c))); },
      py::arg("mu"), py::arg("ell"), py::arg("constants"));
  m.def(
      "fixed_points",
      [](const Params& mu, const MapConstants& c, int ell) {
        py::list out;
        for (const auto& r : fixed_points(mu, c, ell)) {
          py::dict d;
          d["x"] = r.x;
          d["y"] = r.y;
          d["trace"] = r.trace;
          d["det"] = r.det;
          d["class"] = std::string(to_string(r.cls));
          d["eigenvalues"] = r.eigenvalues;
          out.append(d);
        }
        return out;
      },
      py::arg("mu"), py::arg("constants"), py::arg("ell") = 1);
  m.def(
      "bt_points",
      [](double lambda, int ell, const MapConstants& c) {
        py::list out;
        const auto [a, b] = bt_points(lambda, ell, c);
        for (const BTPoint& p : {a, b}) {
          py::dict d;
          d["branch"] = std::string(to_string(p.branch));
          d["x"] = p.x;
          d["y"] = p.y;
          d["A"] = p.A;
          d["omega"] = p.omega;
          d["a20"] = p.coeffs.a20;
          d["b11"] = p.coeffs.b11;
          d["b20"] = p.coeffs.b20;
          out.append(d);
        }
        return out;
      },
      py::arg("lam"), py::arg("ell"), py::arg("constants"));

  m.def(
      "iterate",
      [](double x, double y, const Params& mu, const MapConstants& c, int n, int transient) {
        const OrbitResult r = iterate({x, y}, mu, c, n, transient);
        py::dict d;
        d["final"] = pair_of(r.final_point);
        d["exponents"] = r.exponents;
        d["rotation"] = r.displacement / kTwoPi;
        d["outcome"] = std::string(to_string(r.outcome));
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("mu"), py::arg("constants"), py::arg("n") = 3000,
      py::arg("transient") = 1000);
  m.def(
      "classify_attractor",
      [](const Params& mu, const MapConstants& c, int ell) {
        const AttractorReport r = classify_attractor(mu, c, default_seeds(mu, c, ell));
        return py::make_tuple(std::string(to_string(r.cls)), r.exponents, r.rotation);
      },
      py::arg("mu"), py::arg("constants"), py::arg("ell") = 1);
  m.def(
      "scan_map",
      [](std::tuple<std::string, double, double, int> a1, std::tuple<std::string, double, double, int> a2,
         const Params& base, const MapConstants& c, int iterations, int transient, unsigned threads) {
        MapScanSpec spec;
        spec.axis1 = {std::get<0>(a1), std::get<1>(a1), std::get<2>(a1), std::get<3>(a1)};
        spec.axis2 = {std::get<0>(a2), std::get<1>(a2), std::get<2>(a2), std::get<3>(a2)};
        spec.base = base;
        spec.settings.iterations = iterations;
        spec.settings.transient = transient;
        ScanGrid g;
        {
          py::gil_scoped_release release;
          g = scan_map(spec, c, threads);
        }
        return grid_dict(g);
      },
      py::arg("axis1"), py::arg("axis2"), py::arg("base"), py::arg("constants"), py::arg("iterations") = 3000,
      py::arg("transient") = 1000, py::arg("threads") = 1);

  m.def(
      "vector_field",
      [](std::array<double, 4> s, double alpha, double beta, double omega, double tau1, double tau2) {
        return vector_field(s, OdeParams::make(alpha, beta, omega, tau1, tau2));
      },
      py::arg("state"), py::arg("alpha") = 1.0, py::arg("beta") = -0.1, py::arg("omega") = 1.0,
      py::arg("tau1") = 0.0, py::arg("tau2") = 0.0);
  m.def(
      "lyapunov_spectrum",
      [](double tau1, double tau2, double t_final, std::array<double, 4> s0, double alpha, double beta,
         double omega) {
        SpectrumSettings st;
        st.t_final = t_final;
        SpectrumResult<4> r;
        const OdeParams p = OdeParams::make(alpha, beta, omega, tau1, tau2);
        {
          py::gil_scoped_release release;
          r = lyapunov_spectrum(BykovField{p}, s0, st);
        }
        py::dict d;
        d["exponents"] = r.exponents;
        d["count_nonnegative"] = r.count_nonnegative;
        d["divergence_average"] = r.divergence_average;
        d["failed"] = r.failed;
        return d;
      },
      py::arg("tau1"), py::arg("tau2"), py::arg("t_final") = 1000.0,
      py::arg("s0") = std::array<double, 4>{0.1, 0.1, 0.0, -0.99}, py::arg("alpha") = 1.0, py::arg("beta") = -0.1,
      py::arg("omega") = 1.0);

  m.def(
      "run_cli",
      [](const std::string& subcommand, const std::map<std::string, std::string>& values) {
        cli::RunConfig cfg;
        cfg.subcommand = subcommand;
        cfg.values = values;
        std::ostringstream out, err;
        const int status = cli::run(cfg, out, err);
        return py::make_tuple(status, out.str(), err.str());
      },
      py::arg("subcommand"), py::arg("values"),
      "Runs a subcommand in-process; returns (exit status, stdout text, stderr text).");
}
