#include "bykov/ode.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>
#include <string>

#include "bykov/error.hpp"
#include "bykov/parallel.hpp"

namespace bykov {

OdeParams OdeParams::make(double alpha, double beta, double omega, double tau1, double tau2) {
  OdeParams p{alpha, beta, omega, tau1, tau2};
  p.validate();
  return p;
}

void OdeParams::validate() const {
  if (!(beta < 0.0 && 0.0 < alpha)) throw InvalidArgument("ODE parameters need beta < 0 < alpha");
  if (!(beta * beta < 8.0 * alpha * alpha)) throw InvalidArgument("ODE parameters need beta^2 < 8 alpha^2");
  if (!(std::abs(beta) < std::abs(alpha))) throw InvalidArgument("ODE parameters need |beta| < |alpha|");
  if (!(omega > 0.0)) throw InvalidArgument("ODE parameters need omega > 0");
  if (!(tau1 >= 0.0 && tau1 <= 1.0)) throw InvalidArgument("tau1 must lie in [0, 1]");
  if (!(tau2 >= 0.0 && tau2 <= 1.0)) throw InvalidArgument("tau2 must lie in [0, 1]");
}

State4 vector_field(const State4& s, const OdeParams& p) {
  const auto [x1, x2, x3, x4] = s;
  const double g = 1.0 - (x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4);
  const double a = p.alpha, b = p.beta, w = p.omega, t1 = p.tau1, t2 = p.tau2;
  return {
      x1 * g - w * x2 - a * x1 * x4 + b * x1 * x4 * x4 + t2 * x1 * x3 * x4,
      x2 * g + w * x1 - a * x2 * x4 + b * x2 * x4 * x4,
      x3 * g + a * x3 * x4 + b * x3 * x4 * x4 + t1 * x4 * x4 * x4 - t2 * x1 * x1 * x4,
      x4 * g - a * (x3 * x3 - x1 * x1 - x2 * x2) - b * x4 * (x1 * x1 + x2 * x2 + x3 * x3) -
          t1 * x3 * x4 * x4,
  };
}

Matrix<4> field_jacobian(const State4& s, const OdeParams& p) {
  const auto [x1, x2, x3, x4] = s;
  const double g = 1.0 - (x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4);
  const double a = p.alpha, b = p.beta, w = p.omega, t1 = p.tau1, t2 = p.tau2;
  Matrix<4> j{};
  j[0] = {g - 2 * x1 * x1 - a * x4 + b * x4 * x4 + t2 * x3 * x4, -2 * x1 * x2 - w,
          -2 * x1 * x3 + t2 * x1 * x4, -2 * x1 * x4 - a * x1 + 2 * b * x1 * x4 + t2 * x1 * x3};
  j[1] = {-2 * x2 * x1 + w, g - 2 * x2 * x2 - a * x4 + b * x4 * x4, -2 * x2 * x3,
          -2 * x2 * x4 - a * x2 + 2 * b * x2 * x4};
  j[2] = {-2 * x3 * x1 - 2 * t2 * x1 * x4, -2 * x3 * x2, g - 2 * x3 * x3 + a * x4 + b * x4 * x4,
          -2 * x3 * x4 + a * x3 + 2 * b * x3 * x4 + 3 * t1 * x4 * x4 - t2 * x1 * x1};
  j[3] = {-2 * x4 * x1 + 2 * a * x1 - 2 * b * x4 * x1, -2 * x4 * x2 + 2 * a * x2 - 2 * b * x4 * x2,
          -2 * x4 * x3 - 2 * a * x3 - 2 * b * x4 * x3 - t1 * x4 * x4,
          g - 2 * x4 * x4 - b * (x1 * x1 + x2 * x2 + x3 * x3) - 2 * t1 * x3 * x4};
  return j;
}

State4 integrate(const State4& s0, const OdeParams& p, double t_final, const IntegratorSettings& settings,
                 std::vector<std::pair<double, State4>>* trajectory) {
  if (!(t_final > 0.0)) throw InvalidArgument("integrate needs t_final > 0");
  if (!(settings.rtol > 0.0) && !(settings.atol > 0.0)) throw InvalidArgument("integrate needs tol > 0");
  auto rhs = [&p](const State4& s) { return vector_field(s, p); };
  DormandPrince<4, decltype(rhs)> stepper(rhs, settings);
  State4 y = s0;
  double t = 0.0;
  if (trajectory) trajectory->emplace_back(0.0, y);
  stepper.advance(y, t, t_final, [&](double tt, const State4& yy) {
    if (trajectory) trajectory->emplace_back(tt, yy);
  });
  return y;
}

std::array<std::complex<double>, 4> eigenvalues4(const Matrix<4>& m) {
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) a(i, k) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  Eigen::EigenSolver<Eigen::Matrix4d> solver(a, false);
  std::array<std::complex<double>, 4> ev;
  for (int i = 0; i < 4; ++i) ev[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
  std::sort(ev.begin(), ev.end(), [](const auto& u, const auto& v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  });
  return ev;
}

EquilibriaReport equilibria_check(const OdeParams& p) {
  p.validate();
  EquilibriaReport r;
  r.residual_O1 = norm(vector_field(kO1, p));
  r.residual_O2 = norm(vector_field(kO2, p));
  const double a = p.alpha, b = p.beta, w = p.omega;
  auto sorted = [](std::array<std::complex<double>, 4> v) {
    std::sort(v.begin(), v.end(), [](const auto& u, const auto& q) {
      return u.real() != q.real() ? u.real() < q.real() : u.imag() < q.imag();
    });
    return v;
  };
  using C = std::complex<double>;
  r.expected_O1 = sorted({C(-(a - b), w), C(-(a - b), -w), C(a + b, 0.0), C(-2.0, 0.0)});
  r.expected_O2 = sorted({C(a + b, w), C(a + b, -w), C(-(a - b), 0.0), C(-2.0, 0.0)});
  if (p.tau1 == 0.0) {
    r.eigen_checked = true;
    r.eigen_O1 = eigenvalues4(field_jacobian(kO1, p));
    r.eigen_O2 = eigenvalues4(field_jacobian(kO2, p));
    for (std::size_t k = 0; k < 4; ++k) {
      r.eigen_mismatch = std::max({r.eigen_mismatch, std::abs(r.eigen_O1[k] - r.expected_O1[k]),
                                   std::abs(r.eigen_O2[k] - r.expected_O2[k])});
    }
  }
  r.saddle = SaddleValues{a - b, a + b, a - b, a + b, w};
  r.constants = derive_constants(r.saddle);
  return r;
}

StructuralReport structural_checks(const OdeParams& p, std::uint64_t seed, int samples) {
  p.validate();
  if (samples < 1) throw InvalidArgument("structural_checks needs samples >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto on_sphere = [&] {
    State4 s{gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
    const double n = norm(s);
    for (double& v : s) v /= n;
    return s;
  };
  auto with_tau = [&](double t1, double t2) {
    OdeParams q = p;
    q.tau1 = t1;
    q.tau2 = t2;
    return q;
  };
  StructuralReport r;
  r.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const OdeParams q = with_tau(unit(rng), unit(rng));
    const State4 s = on_sphere();
    r.sphere = std::max(r.sphere, std::abs(dot(s, vector_field(s, q))));

    const State4 axis{0.0, 0.0, gauss(rng), gauss(rng)};
    const State4 fa = vector_field(axis, q);
    r.subspace_12 = std::max({r.subspace_12, std::abs(fa[0]), std::abs(fa[1])});

    const State4 plane{gauss(rng), gauss(rng), 0.0, gauss(rng)};
    r.subspace_3 = std::max(r.subspace_3, std::abs(vector_field(plane, with_tau(0.0, 0.0))[2]));

    const State4 gs{-s[0], -s[1], s[2], s[3]};
    const State4 f = vector_field(s, q);
    const State4 fg = vector_field(gs, q);
    const State4 gf{-f[0], -f[1], f[2], f[3]};
    r.gamma_pi = std::max(r.gamma_pi, norm(sub(fg, gf)));

    const OdeParams q0 = with_tau(q.tau1, 0.0);
    const double th = kTwoPi * unit(rng);
    const double c = std::cos(th), sn = std::sin(th);
    auto rot = [&](const State4& v) { return State4{c * v[0] - sn * v[1], sn * v[0] + c * v[1], v[2], v[3]}; };
    r.so2 = std::max(r.so2, norm(sub(vector_field(rot(s), q0), rot(vector_field(s, q0)))));

    const State4 z{gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
    const Matrix<4> j = field_jacobian(z, q);
    double err = 0.0, scale = 1.0;
    for (std::size_t col = 0; col < 4; ++col) {
      const double h = 1e-6 * std::max(1.0, std::abs(z[col]));
      State4 zp = z, zm = z;
      zp[col] += h;
      zm[col] -= h;
      const State4 fp = vector_field(zp, q), fm = vector_field(zm, q);
      for (std::size_t i = 0; i < 4; ++i) {
        err = std::max(err, std::abs(j[i][col] - (fp[i] - fm[i]) / (2.0 * h)));
        scale = std::max(scale, std::abs(j[i][col]));
      }
    }
    r.jacobian_fd = std::max(r.jacobian_fd, err / scale);
  }
  return r;
}

ScanGrid ode_scan(const OdeScanSpec& spec, unsigned threads) {
  auto check_axis = [](const ScanAxis& ax) {
    if (ax.name != "tau1" && ax.name != "tau2") {
      throw InvalidArgument("ODE scan axes must be tau1 and tau2 (got '" + ax.name + "')");
    }
    if (ax.count < 1 || ax.min > ax.max || ax.min < 0.0 || ax.max > 1.0) {
      throw InvalidArgument("ODE scan axis " + ax.name + " must satisfy 0 <= min <= max <= 1, count >= 1");
    }
  };
  check_axis(spec.axis1);
  check_axis(spec.axis2);
  if (spec.axis1.name == spec.axis2.name) throw InvalidArgument("ODE scan axes must differ");
  spec.base.validate();

  ScanGrid grid;
  grid.axis1 = spec.axis1;
  grid.axis2 = spec.axis2;
  grid.fixed = {{"alpha", spec.base.alpha},
                {"beta", spec.base.beta},
                {"omega", spec.base.omega},
                {"t_final", spec.spectrum.t_final},
                {"renorm_dt", spec.spectrum.renorm_dt}};
  const std::size_t total = static_cast<std::size_t>(spec.axis1.count) * spec.axis2.count;
  grid.cells.resize(total);
  parallel_for(total, threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / static_cast<std::size_t>(spec.axis2.count));
    const int j = static_cast<int>(idx % static_cast<std::size_t>(spec.axis2.count));
    ScanCell& cell = grid.cells[idx];
    cell.i = i;
    cell.j = j;
    cell.param1 = spec.axis1.value(i);
    cell.param2 = spec.axis2.value(j);
    OdeParams p = spec.base;
    (spec.axis1.name == "tau1" ? p.tau1 : p.tau2) = cell.param1;
    (spec.axis2.name == "tau1" ? p.tau1 : p.tau2) = cell.param2;
    try {
      const auto res = lyapunov_spectrum(BykovField{p}, spec.initial, spec.spectrum);
      cell.exponents.assign(res.exponents.begin(), res.exponents.end());
      std::vector<std::string> flags;
      if (res.failed) {
        cell.cls = "Failed";
        flags.push_back("integration-failed@t=" + std::to_string(res.reached_time));
      } else {
        cell.cls = std::to_string(res.count_nonnegative);
      }
      if (res.min_axis_distance < spec.network_flag) flags.push_back("near-network");
      for (std::size_t k = 0; k < flags.size(); ++k) cell.flags += (k ? ";" : "") + flags[k];
    } catch (const std::exception& e) {
      cell.cls = "Failed";
      cell.exponents.assign(4, std::numeric_limits<double>::quiet_NaN());
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      cell.flags = "error=" + msg;
    }
  });
  return grid;
}

}  // namespace bykov
