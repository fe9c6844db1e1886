#include "bykov/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "bykov/error.hpp"
#include "bykov/ode.hpp"
#include "bykov/parallel.hpp"

namespace bykov::cli {

namespace {

struct Entry {
  std::string name;
  std::string summary;
  std::vector<KeySpec> keys;
};

std::vector<KeySpec> map_keys(std::vector<KeySpec> extra) {
  std::vector<KeySpec> k{{"delta", "3", "saddle-value product delta = delta1*delta2 (> 1)"},
                         {"K", "1", "constant (C1+E2)/(E1*E2) of the global maps (> 0)"}};
  k.insert(k.end(), extra.begin(), extra.end());
  return k;
}

std::vector<KeySpec> ode_keys(std::vector<KeySpec> extra) {
  std::vector<KeySpec> k{{"alpha", "1", "alpha > 0"},
                         {"beta", "-0.1", "beta < 0 with |beta| < alpha"},
                         {"omega", "1", "rotation speed of the saddle-foci (> 0)"}};
  k.insert(k.end(), extra.begin(), extra.end());
  return k;
}

const std::vector<KeySpec> kSpectrumKeys = {
    {"t-final", "1000", "integration time"},
    {"renorm-dt", "0.5", "Gram-Schmidt renormalisation interval"},
    {"transient", "-1", "discarded initial time; negative means 10% of t-final"},
    {"rtol", "1e-9", "relative tolerance of the integrator"},
    {"atol", "1e-9", "absolute tolerance of the integrator"},
    {"s0", "0.1,0.1,0,-0.99", "initial state x1,x2,x3,x4"},
};

std::vector<KeySpec> concat(std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> t = {
      {"constants", "derived constants delta, K, M and omega*_ell (JSON)",
       map_keys({{"ell", "1", "resonance index for omega*"},
                 {"C1", "", "contracting eigenvalue at O1 (with E1, C2, E2 overrides delta and K)"},
                 {"E1", "", "expanding eigenvalue at O1"},
                 {"C2", "", "contracting eigenvalue at O2"},
                 {"E2", "", "expanding eigenvalue at O2"}})},
      {"fixed-points", "(1,ell) fixed points with stability (JSON)",
       map_keys({{"ell", "1", "resonance index"},
                 {"A", "", "splitting amplitude", true},
                 {"lambda", "", "perturbation strength", true},
                 {"omega", "", "rotation parameter", true}})},
      {"bt", "Bogdanov-Takens points: closed form, Newton-located and coefficients (JSON)",
       map_keys({{"ell", "1", "resonance index, or a list such as 1,2"},
                 {"lambda", "0.1", "perturbation strength"}})},
      {"surfaces", "sampled SN1/SN2/Hopf/PD/NF surfaces (CSV)",
       map_keys({{"ell", "1", "resonance index"},
                 {"A", "", "A range a:b", true},
                 {"lambda", "", "lambda range a:b", true},
                 {"omega", "", "omega range a:b", true},
                 {"grid", "32,16,64", "nodes along A,lambda,omega"}})},
      {"wedge", "(1,ell) wedge membership over an (omega, A) grid (CSV grid)",
       map_keys({{"ell", "1", "resonance index"},
                 {"lambda", "", "perturbation strength", true},
                 {"A", "0:0.5", "A range"},
                 {"omega", "", "omega range a:b", true},
                 {"grid", "200,200", "nodes along omega,A"}})},
      {"iterate", "single orbit: outcome, exponents, rotation (JSON)",
       map_keys({{"ell", "1", "resonance index used for the default y0"},
                 {"A", "", "splitting amplitude", true},
                 {"lambda", "", "perturbation strength", true},
                 {"omega", "", "rotation parameter", true},
                 {"x0", "0", "initial x"},
                 {"y0", "", "initial y (default exp(-2 ell pi delta/(K omega)))"},
                 {"n", "3000", "iterations"},
                 {"transient", "1000", "discarded iterations"}})},
      {"manifolds", "saddle manifold traces (CSV) or an omega sweep of crossing counts (JSON)",
       map_keys({{"ell", "1", "resonance index"},
                 {"A", "", "splitting amplitude", true},
                 {"lambda", "", "perturbation strength", true},
                 {"omega", "", "omega value, or a range a:b for a homoclinic sweep", true},
                 {"sweep-count", "21", "omega samples of a sweep"},
                 {"generations", "10", "fundamental-domain generations"},
                 {"step-cap", "0.01", "maximal spacing along a trace"},
                 {"offset", "1e-6", "distance of the fundamental segment from the saddle"},
                 {"max-points", "200000", "point budget per trace"}})},
      {"scan-map", "attractor classes over a 2D parameter grid (CSV grid)",
       map_keys({{"ell", "1", "resonance index for the seeds"},
                 {"A", "", "A value or range", true},
                 {"lambda", "", "lambda value or range", true},
                 {"omega", "", "omega value or range", true},
                 {"grid", "200,200", "nodes along the two ranged axes"},
                 {"iterations", "3000", "iterations per seed"},
                 {"transient", "1000", "discarded iterations per seed"},
                 {"seeds", "8", "deterministic seeds spread along x"},
                 {"random-seeds", "0", "extra seeds drawn from --seed"}})},
      {"ode-spectrum", "Lyapunov spectrum of the 4D field (JSON)",
       ode_keys(concat({{"tau1", "0", "tau1 in [0,1]"}, {"tau2", "0", "tau2 in [0,1]"}}, kSpectrumKeys))},
      {"ode-scan", "non-negative exponent counts over a (tau1, tau2) grid (CSV grid)",
       ode_keys(concat({{"tau1", "0:1", "tau1 range"},
                        {"tau2", "0:1", "tau2 range"},
                        {"grid", "50,50", "nodes along tau1,tau2"},
                        {"network-flag", "1e-8", "x1^2+x2^2+x3^2 below which a cell is flagged"}},
                       kSpectrumKeys))},
      {"ode-check", "equilibria, spectra at O1/O2 and structural invariants (JSON)",
       ode_keys({{"tau1", "0", "tau1 in [0,1]"},
                 {"tau2", "0", "tau2 in [0,1]"},
                 {"samples", "1000", "random states per structural check"}})},
  };
  return t;
}

const Entry& entry(const std::string& name) {
  for (const auto& e : table()) {
    if (e.name == name) return e;
  }
  std::string known;
  for (const auto& e : table()) known += (known.empty() ? "" : ", ") + e.name;
  throw InvalidArgument("unknown subcommand '" + name + "' (expected one of: " + known + ")");
}

const std::vector<KeySpec> kShared = {
    {"out", "", "output path (JSON defaults to stdout; CSV grids need a file)"},
    {"threads", "", "worker threads (default: available parallelism)"},
    {"seed", "0", "seed for random sampling"},
    {"gnuplot-hint", "false", "print a plotting recipe to stderr"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

// Typed read access to validated bindings.
struct Bindings {
  const RunConfig& cfg;
  const std::string& raw(const std::string& k) const {
    const auto it = cfg.values.find(k);
    if (it == cfg.values.end()) throw InvalidArgument("missing value for '" + k + "'");
    return it->second;
  }
  bool has(const std::string& k) const {
    const auto it = cfg.values.find(k);
    return it != cfg.values.end() && !it->second.empty();
  }
  double num(const std::string& k) const { return parse_double(k, raw(k)); }
  int integer(const std::string& k) const { return static_cast<int>(parse_int(k, raw(k))); }
  Range range(const std::string& k) const { return parse_range(k, raw(k)); }
};

int positive_count(const std::string& key, long v) {
  if (v < 1) throw InvalidArgument(key + " must be >= 1 (got " + std::to_string(v) + ")");
  if (v > 100000000) throw InvalidArgument(key + " is unreasonably large");
  return static_cast<int>(v);
}

MapConstants map_constants(const Bindings& b) {
  const bool any = b.has("C1") || b.has("E1") || b.has("C2") || b.has("E2");
  if (any) {
    for (const char* k : {"C1", "E1", "C2", "E2"}) {
      if (!b.has(k)) throw InvalidArgument("saddle values need all of C1, E1, C2, E2 (missing " + std::string(k) + ")");
    }
    SaddleValues sv{b.num("C1"), b.num("E1"), b.num("C2"), b.num("E2"), 1.0};
    if (!(sv.C1 > 0 && sv.E1 > 0 && sv.C2 > 0 && sv.E2 > 0)) {
      throw InvalidArgument("saddle values C1, E1, C2, E2 must be positive");
    }
    return derive_constants(sv);
  }
  return MapConstants::from_delta(b.num("delta"), b.num("K"));
}

int ell_of(const Bindings& b) {
  const long ell = parse_int("ell", b.raw("ell"));
  if (ell < 1) throw InvalidArgument("ell must be >= 1 (got " + std::to_string(ell) + ")");
  return static_cast<int>(ell);
}

OdeParams ode_params(const Bindings& b, double tau1, double tau2) {
  OdeParams p{b.num("alpha"), b.num("beta"), b.num("omega"), tau1, tau2};
  p.validate();
  return p;
}

SpectrumSettings spectrum_settings(const Bindings& b) {
  SpectrumSettings s;
  s.t_final = b.num("t-final");
  s.renorm_dt = b.num("renorm-dt");
  s.transient = b.num("transient");
  s.integrator.rtol = b.num("rtol");
  s.integrator.atol = b.num("atol");
  if (!(s.t_final > 0.0)) throw InvalidArgument("t-final must be positive");
  if (!(s.renorm_dt > 0.0)) throw InvalidArgument("renorm-dt must be positive");
  if (!(s.integrator.rtol > 0.0) || !(s.integrator.atol > 0.0)) throw InvalidArgument("rtol and atol must be positive");
  const double tr = s.transient < 0.0 ? 0.1 * s.t_final : s.transient;
  if (!(tr < s.t_final)) throw InvalidArgument("transient must be smaller than t-final");
  return s;
}

State4 initial_state(const Bindings& b) {
  const auto v = parse_double_list("s0", b.raw("s0"));
  if (v.size() != 4) throw InvalidArgument("s0 needs four comma-separated numbers");
  return {v[0], v[1], v[2], v[3]};
}

std::vector<long> grid_of(const Bindings& b, std::size_t n) {
  auto g = parse_int_list("grid", b.raw("grid"));
  if (g.size() != n) {
    throw InvalidArgument("grid needs " + std::to_string(n) + " comma-separated counts (got '" + b.raw("grid") + "')");
  }
  for (long v : g) positive_count("grid", v);
  return g;
}

Params map_params(const Bindings& b) {
  Params mu{b.num("A"), b.num("lambda"), b.num("omega")};
  if (!(mu.omega > 0.0)) throw InvalidArgument("omega must be positive");
  if (mu.lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
  return mu;
}

// Map scans: the ranged parameters become the axes in the order omega, A,
// lambda; the remaining one is fixed.
MapScanSpec map_scan_spec(const Bindings& b) {
  MapScanSpec spec;
  spec.ell = ell_of(b);
  const auto g = grid_of(b, 2);
  std::vector<std::pair<std::string, Range>> ranged;
  for (const char* name : {"omega", "A", "lambda"}) {
    const Range r = b.range(name);
    if (r.is_range()) ranged.emplace_back(name, r);
    else set_param(spec.base, name, r.min);
  }
  if (ranged.size() != 2) {
    throw InvalidArgument("scan-map needs exactly two ranged parameters among omega, A, lambda (got " +
                          std::to_string(ranged.size()) + ")");
  }
  spec.axis1 = {ranged[0].first, ranged[0].second.min, ranged[0].second.max, static_cast<int>(g[0])};
  spec.axis2 = {ranged[1].first, ranged[1].second.min, ranged[1].second.max, static_cast<int>(g[1])};
  for (const auto& [name, r] : ranged) {
    if (name == "omega" && !(r.min > 0.0)) throw InvalidArgument("omega range must be positive");
    if (name == "lambda" && r.min < 0.0) throw InvalidArgument("lambda range must be non-negative");
  }
  spec.settings.iterations = positive_count("iterations", parse_int("iterations", b.raw("iterations")));
  spec.settings.transient = static_cast<int>(parse_int("transient", b.raw("transient")));
  if (spec.settings.transient < 0 || spec.settings.transient >= spec.settings.iterations) {
    throw InvalidArgument("transient must satisfy 0 <= transient < iterations");
  }
  spec.seed_count = positive_count("seeds", parse_int("seeds", b.raw("seeds")));
  const long extra = parse_int("random-seeds", b.raw("random-seeds"));
  if (extra < 0) throw InvalidArgument("random-seeds must be >= 0");
  std::mt19937_64 rng(b.cfg.seed);
  for (long k = 0; k < extra; ++k) {
    // Raw engine output keeps the draw identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    spec.extra_seeds.push_back({kTwoPi * u, 0.5 * v});
  }
  return spec;
}

OdeScanSpec ode_scan_spec(const Bindings& b) {
  OdeScanSpec spec;
  const Range t1 = b.range("tau1");
  const Range t2 = b.range("tau2");
  const auto g = grid_of(b, 2);
  spec.axis1 = {"tau1", t1.min, t1.max, static_cast<int>(g[0])};
  spec.axis2 = {"tau2", t2.min, t2.max, static_cast<int>(g[1])};
  spec.base = ode_params(b, 0.0, 0.0);
  spec.initial = initial_state(b);
  spec.spectrum = spectrum_settings(b);
  spec.network_flag = b.num("network-flag");
  return spec;
}

void warn_outside_v(RunConfig& cfg, const Range& A, const Range& lambda) {
  if (lambda.max > A.min) {
    cfg.warnings.push_back("outside V: lambda > A for part of the requested parameters (heteroclinic-tangle "
                           "regime, the wedge picture does not apply); run proceeds");
  }
}

// Per-subcommand semantic checks; building the library inputs is the check.
void check(RunConfig& cfg) {
  const Bindings b{cfg};
  const std::string& s = cfg.subcommand;
  if (s == "constants") {
    map_constants(b);
    ell_of(b);
  } else if (s == "fixed-points" || s == "iterate") {
    map_constants(b);
    ell_of(b);
    const Params mu = map_params(b);
    warn_outside_v(cfg, {mu.A, mu.A}, {mu.lambda, mu.lambda});
    if (s == "iterate") {
      const long n = positive_count("n", parse_int("n", b.raw("n")));
      const long tr = parse_int("transient", b.raw("transient"));
      if (tr < 0 || tr >= n) throw InvalidArgument("transient must satisfy 0 <= transient < n");
      b.num("x0");
      if (b.has("y0")) b.num("y0");
    }
  } else if (s == "bt") {
    map_constants(b);
    for (long e : parse_int_list("ell", b.raw("ell"))) {
      if (e < 1) throw InvalidArgument("ell must be >= 1");
    }
    if (b.num("lambda") < 0.0) throw InvalidArgument("lambda must be non-negative");
  } else if (s == "surfaces") {
    map_constants(b);
    ell_of(b);
    grid_of(b, 3);
    const Range A = b.range("A"), l = b.range("lambda"), w = b.range("omega");
    if (!(w.min > 0.0)) throw InvalidArgument("omega range must be positive");
    if (l.min < 0.0) throw InvalidArgument("lambda range must be non-negative");
    warn_outside_v(cfg, A, l);
  } else if (s == "wedge") {
    map_constants(b);
    ell_of(b);
    grid_of(b, 2);
    const Range A = b.range("A"), w = b.range("omega");
    const double l = b.num("lambda");
    if (!(w.min > 0.0)) throw InvalidArgument("omega range must be positive");
    if (l < 0.0) throw InvalidArgument("lambda must be non-negative");
    warn_outside_v(cfg, A, {l, l});
  } else if (s == "manifolds") {
    map_constants(b);
    ell_of(b);
    const Range w = b.range("omega");
    if (!(w.min > 0.0)) throw InvalidArgument("omega must be positive");
    positive_count("sweep-count", parse_int("sweep-count", b.raw("sweep-count")));
    positive_count("generations", parse_int("generations", b.raw("generations")));
    positive_count("max-points", parse_int("max-points", b.raw("max-points")));
    if (!(b.num("step-cap") > 0.0) || !(b.num("offset") > 0.0)) {
      throw InvalidArgument("step-cap and offset must be positive");
    }
    const double A = b.num("A"), l = b.num("lambda");
    warn_outside_v(cfg, {A, A}, {l, l});
  } else if (s == "scan-map") {
    map_constants(b);
    const MapScanSpec spec = map_scan_spec(b);
    const Range A = b.range("A"), l = b.range("lambda");
    (void)spec;
    warn_outside_v(cfg, A, l);
  } else if (s == "ode-spectrum") {
    ode_params(b, b.num("tau1"), b.num("tau2"));
    spectrum_settings(b);
    initial_state(b);
  } else if (s == "ode-scan") {
    ode_scan_spec(b);
  } else if (s == "ode-check") {
    ode_params(b, b.num("tau1"), b.num("tau2"));
    positive_count("samples", parse_int("samples", b.raw("samples")));
  }
}

bool is_grid_csv(const std::string& s) { return s == "wedge" || s == "scan-map" || s == "ode-scan"; }

std::string json_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '"': o += "\\\""; break;
      case '\\': o += "\\\\"; break;
      case '\n': o += "\\n"; break;
      case '\t': o += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          o += buf;
        } else {
          o += ch;
        }
    }
  }
  return o;
}

void error_record(std::ostream& err, const std::string& kind, const std::string& message) {
  err << "{\"error\":{\"kind\":\"" << kind << "\",\"message\":\"" << json_escape(message) << "\"}}\n";
}

void complex_array(JsonWriter& j, const std::string& k, const auto& values) {
  j.key(k).begin_array();
  for (const auto& z : values) j.begin_array().value(z.real()).value(z.imag()).end_array();
  j.end_array();
}

void constants_json(JsonWriter& j, const MapConstants& c) {
  j.key("constants").begin_object();
  j.field("delta1", c.delta1).field("delta2", c.delta2).field("delta", c.delta).field("K", c.K).field("M", c.M);
  j.end_object();
}

void fixed_point_json(JsonWriter& j, const FixedPointRecord& r) {
  j.begin_object();
  j.field("ell", r.ell).field("x", r.x).field("y", r.y).field("s", r.s);
  j.field("trace", r.trace).field("det", r.det);
  complex_array(j, "eigenvalues", r.eigenvalues);
  j.field("class", to_string(r.cls)).field("residual", r.residual).field("newton_iterations", r.newton_iterations);
  j.end_object();
}

void coeffs_json(JsonWriter& j, const std::string& k, const BTCoefficients& c) {
  j.key(k).begin_object();
  j.field("C", c.coeffC).field("a20", c.a20).field("b11", c.b11).field("b20", c.b20);
  j.field("noise", c.noise).field("inconclusive", c.inconclusive).field("nondegenerate", c.nondegenerate);
  j.end_object();
}

void bt_json(JsonWriter& j, const BTPoint& p) {
  j.begin_object();
  j.field("ell", p.ell).field("branch", to_string(p.branch)).field("x", p.x).field("y", p.y);
  j.field("A", p.A).field("lambda", p.lambda).field("omega", p.omega).field("admissible", p.admissible);
  j.end_object();
}

void run_constants(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const int ell = ell_of(b);
  JsonWriter j(os);
  j.begin_object();
  constants_json(j, c);
  j.field("ell", ell).field("omega_star", omega_star(ell, c)).field("G_at_omega_star", g_ell(omega_star(ell, c), ell, c));
  j.field("bt_scale", bt_scale(ell, c));
  j.end_object();
  j.finish();
}

void run_fixed_points(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const int ell = ell_of(b);
  const Params mu = map_params(b);
  const auto fps = fixed_points(mu, c, ell);
  JsonWriter j(os);
  j.begin_object();
  constants_json(j, c);
  j.key("params").begin_object().field("A", mu.A).field("lambda", mu.lambda).field("omega", mu.omega).end_object();
  j.field("ell", ell).field("G", g_ell(mu.omega, ell, c)).field("wedge", to_string(wedge_membership(mu, ell, c)));
  j.key("records").begin_array();
  for (const auto& r : fps) fixed_point_json(j, r);
  j.end_array();
  j.end_object();
  j.finish();
}

void run_bt(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const double lambda = b.num("lambda");
  JsonWriter j(os);
  j.begin_object();
  constants_json(j, c);
  j.field("lambda", lambda);
  j.key("points").begin_array();
  for (long ell : parse_int_list("ell", b.raw("ell"))) {
    const auto [first, second] = bt_points(lambda, static_cast<int>(ell), c);
    for (const BTPoint& closed : {first, second}) {
      // Start Newton off the closed form so the located point is independent.
      const BTPoint located = locate_bt(closed.branch, lambda, static_cast<int>(ell), c, closed.A + 0.01,
                                        closed.omega * 1.02);
      j.begin_object();
      j.key("closed_form");
      bt_json(j, closed);
      j.key("located");
      bt_json(j, located);
      j.field("error_A", std::abs(located.A - closed.A)).field("error_omega", std::abs(located.omega - closed.omega));
      coeffs_json(j, "finite_difference", bt_nondegeneracy(located, c));
      coeffs_json(j, "table", bt_table_coefficients(closed, c));
      j.end_object();
    }
  }
  j.end_array();
  j.end_object();
  j.finish();
}

void run_surfaces(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const Range A = b.range("A"), l = b.range("lambda"), w = b.range("omega");
  const auto g = grid_of(b, 3);
  const ParamBox box{A.min, A.max, l.min, l.max, w.min, w.max};
  const GridResolution res{static_cast<int>(g[0]), static_cast<int>(g[1]), static_cast<int>(g[2])};
  write_surfaces_csv(sample_surfaces(box, ell_of(b), c, res, cfg.threads), os);
}

void run_wedge(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const int ell = ell_of(b);
  const Range A = b.range("A"), w = b.range("omega");
  const auto g = grid_of(b, 2);
  ScanGrid grid;
  grid.axis1 = {"omega", w.min, w.max, static_cast<int>(g[0])};
  grid.axis2 = {"A", A.min, A.max, static_cast<int>(g[1])};
  grid.fixed = {{"lambda", b.num("lambda")}, {"ell", ell}, {"delta", c.delta}, {"K", c.K}};
  for (int i = 0; i < grid.axis1.count; ++i) {
    for (int k = 0; k < grid.axis2.count; ++k) {
      ScanCell cell;
      cell.i = i;
      cell.j = k;
      cell.param1 = grid.axis1.value(i);
      cell.param2 = grid.axis2.value(k);
      const Params mu{cell.param2, b.num("lambda"), cell.param1};
      cell.cls = to_string(wedge_membership(mu, ell, c));
      const double G = g_ell(mu.omega, ell, c);
      cell.flags = "G=" + format_double(G);
      grid.cells.push_back(cell);
    }
  }
  write_grid_csv(grid, 0, os);
}

void run_iterate(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const Params mu = map_params(b);
  const int ell = ell_of(b);
  const LiftPoint p0{b.num("x0"), b.has("y0") ? b.num("y0") : default_seeds(mu, c, ell, 1)[0].y};
  const int n = b.integer("n"), tr = b.integer("transient");
  const OrbitResult r = iterate(p0, mu, c, n, tr);
  JsonWriter j(os);
  j.begin_object();
  constants_json(j, c);
  j.key("params").begin_object().field("A", mu.A).field("lambda", mu.lambda).field("omega", mu.omega).end_object();
  j.key("initial").begin_array().value(p0.x).value(p0.y).end_array();
  j.field("n", n).field("transient", tr);
  j.field("outcome", to_string(r.outcome)).field("escape_iteration", r.escape_iteration);
  j.key("final").begin_array().value(r.final_point.x).value(r.final_point.y).end_array();
  j.key("exponents").begin_array().value(r.exponents[0]).value(r.exponents[1]).end_array();
  j.field("mean_log_det", r.mean_log_det);
  j.field("rotation", r.displacement / kTwoPi);
  const AttractorClass cls =
      r.outcome == OrbitOutcome::Escaped ? AttractorClass::Escaped : classify_exponents(r.exponents, 5e-4);
  j.field("class", to_string(cls));
  j.end_object();
  j.finish();
}

void run_manifolds(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const int ell = ell_of(b);
  ManifoldSettings ms;
  ms.generations = b.integer("generations");
  ms.step_cap = b.num("step-cap");
  ms.offset = b.num("offset");
  ms.max_points = static_cast<std::size_t>(b.integer("max-points"));
  const Range w = b.range("omega");
  const double A = b.num("A"), lambda = b.num("lambda");
  if (w.is_range()) {
    const int n = b.integer("sweep-count");
    std::vector<double> omegas;
    for (int k = 0; k < n; ++k) omegas.push_back(ScanAxis{"omega", w.min, w.max, n}.value(k));
    const HomoclinicSweep sweep = homoclinic_sweep(A, lambda, omegas, ell, c, ms, cfg.threads);
    JsonWriter j(os);
    j.begin_object();
    constants_json(j, c);
    j.field("A", A).field("lambda", lambda).field("ell", ell);
    j.key("probes").begin_array();
    for (const auto& p : sweep.probes) j.begin_object().field("omega", p.omega).field("crossings", p.crossings).end_object();
    j.end_array();
    j.key("brackets").begin_array();
    for (const auto& br : sweep.brackets) {
      j.begin_object().field("omega_lo", br.omega_lo).field("omega_hi", br.omega_hi);
      j.field("crossings_lo", br.crossings_lo).field("crossings_hi", br.crossings_hi).end_object();
    }
    j.end_array();
    j.end_object();
    j.finish();
    return;
  }
  const Params mu{A, lambda, w.min};
  const auto fps = fixed_points(mu, c, ell);
  const auto it = std::find_if(fps.begin(), fps.end(), [](const auto& r) { return r.cls == StabilityClass::Saddle; });
  if (it == fps.end()) throw DomainError("no saddle (1," + std::to_string(ell) + ") fixed point at these parameters", w.min);
  std::vector<ManifoldTrace> traces;
  for (ManifoldSide side : {ManifoldSide::Unstable, ManifoldSide::Stable}) {
    for (int o : {1, -1}) {
      ManifoldSettings s = ms;
      s.orientation = o;
      traces.push_back(manifold_trace(*it, mu, c, side, s));
    }
  }
  write_trace_csv(traces, os);
}

void run_scan_map(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const MapConstants c = map_constants(b);
  const MapScanSpec spec = map_scan_spec(b);
  write_grid_csv(scan_map(spec, c, cfg.threads), 2, os);
}

void run_ode_spectrum(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const OdeParams p = ode_params(b, b.num("tau1"), b.num("tau2"));
  const SpectrumSettings s = spectrum_settings(b);
  const State4 s0 = initial_state(b);
  const auto r = lyapunov_spectrum(BykovField{p}, s0, s);
  JsonWriter j(os);
  j.begin_object();
  j.key("params").begin_object().field("alpha", p.alpha).field("beta", p.beta).field("omega", p.omega);
  j.field("tau1", p.tau1).field("tau2", p.tau2).end_object();
  j.key("s0").begin_array();
  for (double v : s0) j.value(v);
  j.end_array();
  j.key("exponents").begin_array();
  for (double v : r.exponents) j.value(v);
  j.end_array();
  j.field("count_nonnegative", r.count_nonnegative).field("count_positive", r.count_positive);
  j.field("count_zero", r.count_zero).field("threshold", s.threshold);
  j.field("integration_time", r.integration_time).field("renorm_interval", r.renorm_interval);
  j.field("divergence_average", r.divergence_average).field("min_axis_distance", r.min_axis_distance);
  j.field("failed", r.failed).field("reached_time", r.reached_time).field("message", r.message);
  j.end_object();
  j.finish();
}

void run_ode_scan(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  write_grid_csv(ode_scan(ode_scan_spec(b), cfg.threads), 4, os);
}

void run_ode_check(const RunConfig& cfg, std::ostream& os) {
  const Bindings b{cfg};
  const OdeParams p = ode_params(b, b.num("tau1"), b.num("tau2"));
  const EquilibriaReport e = equilibria_check(p);
  const StructuralReport s = structural_checks(p, cfg.seed, b.integer("samples"));
  JsonWriter j(os);
  j.begin_object();
  j.key("params").begin_object().field("alpha", p.alpha).field("beta", p.beta).field("omega", p.omega);
  j.field("tau1", p.tau1).field("tau2", p.tau2).end_object();
  j.field("residual_O1", e.residual_O1).field("residual_O2", e.residual_O2);
  j.field("eigen_checked", e.eigen_checked);
  if (e.eigen_checked) {
    complex_array(j, "eigen_O1", e.eigen_O1);
    complex_array(j, "eigen_O2", e.eigen_O2);
  }
  complex_array(j, "expected_O1", e.expected_O1);
  complex_array(j, "expected_O2", e.expected_O2);
  j.field("eigen_mismatch", e.eigen_mismatch);
  j.key("saddle").begin_object().field("C1", e.saddle.C1).field("E1", e.saddle.E1);
  j.field("C2", e.saddle.C2).field("E2", e.saddle.E2).end_object();
  constants_json(j, e.constants);
  j.key("structural").begin_object();
  j.field("samples", s.samples).field("sphere", s.sphere).field("subspace_12", s.subspace_12);
  j.field("subspace_3", s.subspace_3).field("gamma_pi", s.gamma_pi).field("so2", s.so2);
  j.field("jacobian_fd", s.jacobian_fd);
  j.end_object();
  j.end_object();
  j.finish();
}

using Runner = std::function<void(const RunConfig&, std::ostream&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"constants", run_constants},   {"fixed-points", run_fixed_points}, {"bt", run_bt},
      {"surfaces", run_surfaces},     {"wedge", run_wedge},               {"iterate", run_iterate},
      {"manifolds", run_manifolds},   {"scan-map", run_scan_map},         {"ode-spectrum", run_ode_spectrum},
      {"ode-scan", run_ode_scan},     {"ode-check", run_ode_check},
  };
  return r;
}

void write_grid_meta(const RunConfig& cfg, std::ostream& os) {
  JsonWriter j(os);
  j.begin_object();
  j.field("subcommand", cfg.subcommand);
  j.key("config").begin_object();
  for (const auto& [k, v] : cfg.values) j.field(k, v);
  j.end_object();
  j.field("seed", static_cast<long>(cfg.seed));
  j.end_object();
  j.finish();
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& e : table()) n.push_back(e.name);
    return n;
  }();
  return names;
}

const std::string& describe(const std::string& subcommand) { return entry(subcommand).summary; }

std::vector<KeySpec> keys_for(const std::string& subcommand) {
  return concat(entry(subcommand).keys, kShared);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty()) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig validate(RunConfig cfg) {
  const Entry& e = entry(cfg.subcommand);
  const auto keys = keys_for(cfg.subcommand);
  std::set<std::string> known;
  for (const auto& k : keys) known.insert(k.name);
  for (const auto& [k, v] : cfg.values) {
    if (!known.count(k)) {
      std::string list;
      for (const auto& ks : keys) list += (list.empty() ? "" : ", ") + ks.name;
      throw InvalidArgument("unknown key '" + k + "' for " + cfg.subcommand + " (known: " + list + ")");
    }
  }
  std::vector<std::string> missing;
  for (const auto& k : e.keys) {
    const auto it = cfg.values.find(k.name);
    if (it == cfg.values.end() || it->second.empty()) {
      if (k.required) missing.push_back(k.name);
      else if (!k.fallback.empty()) cfg.values[k.name] = k.fallback;
    }
  }
  if (!missing.empty()) {
    std::string req, miss;
    for (const auto& k : e.keys) {
      if (k.required) req += (req.empty() ? "" : ", ") + k.name;
    }
    for (const auto& m : missing) miss += (miss.empty() ? "" : ", ") + m;
    throw InvalidArgument(cfg.subcommand + " is missing " + miss + " (required keys: " + req + ")");
  }
  // Shared keys move out of the bindings into typed fields.
  auto take = [&](const std::string& k) -> std::optional<std::string> {
    const auto it = cfg.values.find(k);
    if (it == cfg.values.end()) return std::nullopt;
    std::string v = it->second;
    cfg.values.erase(it);
    return v;
  };
  if (auto v = take("out")) cfg.out = *v;
  if (auto v = take("threads"); v && !v->empty()) {
    const long t = parse_int("threads", *v);
    if (t < 1 || t > 4096) throw InvalidArgument("threads must be in [1, 4096]");
    cfg.threads = static_cast<unsigned>(t);
  }
  if (cfg.threads == 0) cfg.threads = default_threads();
  if (auto v = take("seed"); v && !v->empty()) {
    const long s = parse_int("seed", *v);
    if (s < 0) throw InvalidArgument("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = take("gnuplot-hint"); v && !v->empty()) {
    if (*v == "true" || *v == "1" || *v == "yes") cfg.gnuplot_hint = true;
    else if (*v == "false" || *v == "0" || *v == "no") {
      // keep whatever the flag said
    } else {
      throw InvalidArgument("gnuplot-hint must be true or false (got '" + *v + "')");
    }
  }
  const bool csv = is_grid_csv(cfg.subcommand) || cfg.subcommand == "surfaces" ||
                   (cfg.subcommand == "manifolds" && !parse_range("omega", cfg.values.at("omega")).is_range());
  cfg.format = csv ? "csv" : "json";
  if (is_grid_csv(cfg.subcommand) && cfg.out.empty()) {
    throw InvalidArgument(cfg.subcommand + " writes a CSV grid and needs --out PATH");
  }
  check(cfg);
  cfg.validated = true;
  return cfg;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = config.validated ? config : validate(config);
  } catch (const IoError& e) {
    error_record(err, "io", e.what());
    return 4;
  } catch (const std::exception& e) {
    error_record(err, "validation", e.what());
    return 2;
  }
  for (const auto& w : cfg.warnings) err << "warning: " << w << "\n";
  try {
    std::ostringstream buffer;
    runners().at(cfg.subcommand)(cfg, buffer);
    if (cfg.out.empty()) {
      out << buffer.str();
    } else {
      std::ofstream f(cfg.out, std::ios::binary);
      if (!f) throw IoError("cannot open output file '" + cfg.out + "'");
      f << buffer.str();
      if (!f) throw IoError("write failed for '" + cfg.out + "'");
      if (is_grid_csv(cfg.subcommand)) {
        std::ofstream meta(cfg.out + ".meta.json", std::ios::binary);
        if (!meta) throw IoError("cannot open '" + cfg.out + ".meta.json'");
        write_grid_meta(cfg, meta);
      }
    }
    if (cfg.gnuplot_hint) err << gnuplot_hint(cfg);
  } catch (const IoError& e) {
    error_record(err, "io", e.what());
    return 4;
  } catch (const InvalidArgument& e) {
    error_record(err, "validation", e.what());
    return 2;
  } catch (const std::exception& e) {
    error_record(err, "runtime", e.what());
    return 3;
  }
  return 0;
}

void write_error_record(std::ostream& err, const std::string& kind, const std::string& message) {
  error_record(err, kind, message);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidArgument(key + ": expected a number, got '" + text + "'");
  }
  if (!std::isfinite(v)) throw InvalidArgument(key + ": value must be finite");
  return v;
}

long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidArgument(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

Range parse_range(const std::string& key, const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() == 1) {
    const double v = parse_double(key, parts[0]);
    return {v, v};
  }
  if (parts.size() != 2) throw InvalidArgument(key + ": expected a value or a range min:max, got '" + text + "'");
  const Range r{parse_double(key, parts[0]), parse_double(key, parts[1])};
  if (r.min > r.max) throw InvalidArgument(key + ": range needs min <= max (got '" + text + "')");
  return r;
}

std::vector<long> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<long> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_int(key, p));
  if (out.empty()) throw InvalidArgument(key + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_double(key, p));
  if (out.empty()) throw InvalidArgument(key + ": empty list");
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

void write_grid_csv(const ScanGrid& grid, std::size_t exponent_columns, std::ostream& os) {
  const std::size_t ncols = std::max<std::size_t>(exponent_columns, 2);
  os << "i,j,param1,param2,class";
  for (std::size_t k = 0; k < ncols; ++k) os << ",lyap" << k + 1;
  os << ",rotation,flags\n";
  for (const auto& c : grid.cells) {
    os << c.i << ',' << c.j << ',' << format_double(c.param1) << ',' << format_double(c.param2) << ',' << c.cls;
    for (std::size_t k = 0; k < ncols; ++k) {
      os << ',' << (k < c.exponents.size() ? format_double(c.exponents[k]) : "nan");
    }
    os << ',' << format_double(c.rotation) << ',' << c.flags << '\n';
  }
}

void write_surfaces_csv(const std::vector<SurfaceSample>& samples, std::ostream& os) {
  os << "label,branch,A,lambda,omega,residual\n";
  for (const auto& s : samples) {
    os << to_string(s.label) << ',' << to_string(s.branch) << ',' << format_double(s.A) << ','
       << format_double(s.lambda) << ',' << format_double(s.omega) << ',' << format_double(s.residual) << '\n';
  }
}

void write_trace_csv(const std::vector<ManifoldTrace>& traces, std::ostream& os) {
  os << "trace,side,k,x,y\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (std::size_t k = 0; k < traces[t].points.size(); ++k) {
      const auto& p = traces[t].points[k];
      os << t << ',' << to_string(traces[t].side) << ',' << k << ',' << format_double(p.x) << ','
         << format_double(p.y) << '\n';
    }
  }
}

void JsonWriter::separator() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!first_.empty()) {
    if (!first_.back()) os_ << ',';
    first_.back() = false;
  }
}

JsonWriter& JsonWriter::begin_object() {
  separator();
  os_ << '{';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  first_.pop_back();
  os_ << '}';
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separator();
  os_ << '[';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  first_.pop_back();
  os_ << ']';
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
  separator();
  os_ << '"' << json_escape(k) << "\":";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separator();
  os_ << (std::isfinite(v) ? format_double(v) : "null");
  return *this;
}

JsonWriter& JsonWriter::value(int v) {
  separator();
  os_ << v;
  return *this;
}

JsonWriter& JsonWriter::value(long v) {
  separator();
  os_ << v;
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separator();
  os_ << (v ? "true" : "false");
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  separator();
  os_ << '"' << json_escape(v) << '"';
  return *this;
}

void JsonWriter::finish() { os_ << '\n'; }

std::string gnuplot_hint(const RunConfig& cfg) {
  const std::string f = cfg.out.empty() ? "OUTPUT" : cfg.out;
  std::ostringstream h;
  h << "# gnuplot recipe for " << cfg.subcommand << "\n";
  if (cfg.subcommand == "scan-map" || cfg.subcommand == "wedge") {
    h << "set datafile separator ','\n"
         "cls(s) = s eq 'PeriodicSink' || s eq 'Inside' ? 1 : s eq 'InvariantCircle' || s eq 'Boundary' ? 2 : "
         "s eq 'Chaotic' ? 3 : 0\n"
         "set xlabel 'param1'; set ylabel 'param2'\n"
         "plot '"
      << f << "' skip 1 using 3:4:(cls(strcol(5))) with points pt 5 ps 0.5 palette notitle\n";
  } else if (cfg.subcommand == "ode-scan") {
    h << "set datafile separator ','\n"
         "set palette defined (0 'red', 1 'blue', 2 'yellow')\n"
         "set xlabel 'tau1'; set ylabel 'tau2'\n"
         "plot '"
      << f << "' skip 1 using 3:4:5 with image notitle\n";
  } else if (cfg.subcommand == "surfaces") {
    h << "set datafile separator ','\n"
         "set xlabel 'A'; set ylabel 'lambda'; set zlabel 'omega'\n"
         "splot for [L in 'SN1 SN2 Hopf PD NF'] '"
      << f << "' skip 1 using (strcol(1) eq L ? $3 : 1/0):4:5 with points pt 7 ps 0.3 title L\n";
  } else if (cfg.subcommand == "manifolds") {
    h << "set datafile separator ','\n"
         "plot '"
      << f << "' skip 1 using (strcol(2) eq 'Unstable' ? $4 : 1/0):5 with lines title 'W^u', \\\n"
              "     '' skip 1 using (strcol(2) eq 'Stable' ? $4 : 1/0):5 with lines title 'W^s'\n";
  } else {
    h << "# JSON output: extract columns with jq, e.g. jq -r '.records[] | [.x,.y] | @tsv' " << f
      << " > pts.dat; plot 'pts.dat'\n";
  }
  return h.str();
}

}  // namespace bykov::cli
