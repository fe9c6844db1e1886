#include "bykov/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bykov/error.hpp"
#include "bykov/linalg.hpp"
#include "bykov/parallel.hpp"

namespace bykov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_ell(int ell) {
  if (ell < 1) throw InvalidArgument("ell must be a positive integer (got " + std::to_string(ell) + ")");
}

// y-coordinate shared by every (1, l)-fixed point at this omega.
double fixed_height(double omega, int ell, const MapConstants& c) {
  return std::exp(-2.0 * ell * kPi * c.delta / (c.K * omega));
}

struct FixedResidual {
  double angular;
  double radial;
  double norm() const { return std::max(std::abs(angular), std::abs(radial)); }
};

FixedResidual fixed_residual(const LiftPoint& p, const Params& mu, const MapConstants& c, int ell) {
  const LiftPoint f = return_map(p, mu, c);
  return {f.x - p.x - 2.0 * ell * kPi, f.y - p.y};
}

FixedPointRecord make_record(const LiftPoint& p, const Params& mu, const MapConstants& c, int ell,
                             double residual, int iterations) {
  FixedPointRecord r;
  r.ell = ell;
  r.x = reduce_angle(p.x);
  r.y = p.y;
  r.s = section_radius(p, mu);
  const Jacobian2 j = jacobian(p, mu, c);
  r.trace = j.trace();
  r.det = j.det();
  r.eigenvalues = j.eigenvalues();
  r.cls = classify(r.trace, r.det);
  r.residual = residual;
  r.newton_iterations = iterations;
  return r;
}

}  // namespace

double g_ell(double omega, int ell, const MapConstants& c) {
  require_ell(ell);
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive (got " + std::to_string(omega) + ")");
  const double a = 2.0 * ell * kPi / (c.K * omega);
  return std::exp(-a) - std::exp(-a * c.delta);
}

double g_ell_derivative(double omega, int ell, const MapConstants& c) {
  require_ell(ell);
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive (got " + std::to_string(omega) + ")");
  const double a = 2.0 * ell * kPi / (c.K * omega);
  return a / omega * (std::exp(-a) - c.delta * std::exp(-a * c.delta));
}

double omega_star(int ell, const MapConstants& c) {
  require_ell(ell);
  return 2.0 * ell * kPi * (c.delta - 1.0) / (c.K * std::log(c.delta));
}

const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::SinkNode: return "SinkNode";
    case StabilityClass::SinkFocus: return "SinkFocus";
    case StabilityClass::Saddle: return "Saddle";
    case StabilityClass::SourceNode: return "SourceNode";
    case StabilityClass::SourceFocus: return "SourceFocus";
    case StabilityClass::NonHyperbolic: return "NonHyperbolic";
  }
  return "?";
}

StabilityClass classify(double trace, double det) {
  const auto ev = quadratic_eigenvalues(trace, det);
  const double m0 = std::abs(ev[0]);
  const double m1 = std::abs(ev[1]);
  if (std::abs(m0 - 1.0) < kNonHyperbolicBand || std::abs(m1 - 1.0) < kNonHyperbolicBand) {
    return StabilityClass::NonHyperbolic;
  }
  const bool focus = trace * trace - 4.0 * det < 0.0;
  const int outside = (m0 > 1.0 ? 1 : 0) + (m1 > 1.0 ? 1 : 0);
  if (focus) return outside == 0 ? StabilityClass::SinkFocus : StabilityClass::SourceFocus;
  if (outside == 0) return StabilityClass::SinkNode;
  if (outside == 1) return StabilityClass::Saddle;
  return StabilityClass::SourceNode;
}

FixedPointRecord polish_fixed_point(const LiftPoint& guess, const Params& mu, const MapConstants& c,
                                    int ell, const NewtonSettings& settings) {
  require_ell(ell);
  LiftPoint p = guess;
  for (int it = 0; it <= settings.max_iterations; ++it) {
    const FixedResidual r = fixed_residual(p, mu, c, ell);
    if (r.norm() < settings.tolerance) return make_record(p, mu, c, ell, r.norm(), it);
    if (it == settings.max_iterations) break;
    Jacobian2 j = jacobian(p, mu, c);
    j.a11 -= 1.0;
    j.a22 -= 1.0;
    const double d = j.det();
    if (d == 0.0 || !std::isfinite(d)) throw SolverError("fixed-point Newton: singular Jacobian");
    const double dx = (j.a22 * r.angular - j.a12 * r.radial) / d;
    const double dy = (-j.a21 * r.angular + j.a11 * r.radial) / d;
    p.x -= dx;
    p.y -= dy;
  }
  throw SolverError("fixed-point Newton did not reach tolerance " +
                    std::to_string(settings.tolerance) + " in " +
                    std::to_string(settings.max_iterations) + " iterations");
}

std::vector<FixedPointRecord> fixed_points(const Params& mu, const MapConstants& c, int ell,
                                           const NewtonSettings& settings) {
  require_ell(ell);
  if (mu.lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
  const double g = g_ell(mu.omega, ell, c);
  const double y = fixed_height(mu.omega, ell, c);
  std::vector<FixedPointRecord> out;
  if (mu.lambda == 0.0) {
    if (std::abs(g - mu.A) <= 1e-12) {
      throw InvalidArgument("degenerate circle of fixed points: lambda = 0 and A = G_l(omega)");
    }
    return out;
  }
  const double ratio = (g - mu.A) / mu.lambda;
  if (std::abs(ratio) > 1.0 + 1e-12) return out;
  if (std::abs(ratio) >= 1.0 - 1e-12) {
    // Tangency: J - I is singular, keep the closed form.
    const LiftPoint p{ratio > 0.0 ? 0.5 * kPi : 1.5 * kPi, y};
    out.push_back(make_record(p, mu, c, ell, fixed_residual(p, mu, c, ell).norm(), 0));
    return out;
  }
  const double base = std::asin(ratio);
  for (double x0 : {base, kPi - base}) {
    out.push_back(polish_fixed_point({reduce_angle(x0), y}, mu, c, ell, settings));
  }
  return out;
}

const char* to_string(WedgeMembership w) {
  switch (w) {
    case WedgeMembership::Inside: return "Inside";
    case WedgeMembership::Boundary: return "Boundary";
    case WedgeMembership::Outside: return "Outside";
  }
  return "?";
}

WedgeMembership wedge_membership(const Params& mu, int ell, const MapConstants& c) {
  const double d = std::abs(g_ell(mu.omega, ell, c) - mu.A) - mu.lambda;
  if (std::abs(d) <= 1e-10) return WedgeMembership::Boundary;
  return d < 0.0 ? WedgeMembership::Inside : WedgeMembership::Outside;
}

// ---------------------------------------------------------------------------
// Bogdanov-Takens points

const char* to_string(BTBranch b) { return b == BTBranch::First ? "BT1" : "BT2"; }

double bt_angle(BTBranch b) { return b == BTBranch::First ? 0.5 * kPi : 1.5 * kPi; }

double bt_scale(int ell, const MapConstants& c) {
  const double d = c.delta;
  return -2.0 * c.K * ell * kPi * (d - 1.0) / (std::pow(d, d / (1.0 - d)) * std::log(d));
}

namespace {

struct Taylor2 {
  double a20, b20, b11;
};

// Second derivatives of the translated and rescaled map at the origin.
Taylor2 bt_second_derivatives(const BTPoint& bt, const MapConstants& c, double coeffC, double hu,
                              double hv) {
  const Params mu = bt.params();
  const double shift = 2.0 * bt.ell * kPi;
  auto T = [&](double u, double v) {
    const LiftPoint f = return_map({bt.x + u, bt.y + v / coeffC}, mu, c);
    return std::array<double, 2>{f.x - bt.x - shift, coeffC * (f.y - bt.y)};
  };
  const auto t00 = T(0.0, 0.0);
  const auto tp = T(hu, 0.0);
  const auto tm = T(-hu, 0.0);
  const auto tpp = T(hu, hv);
  const auto tpm = T(hu, -hv);
  const auto tmp = T(-hu, hv);
  const auto tmm = T(-hu, -hv);
  Taylor2 out;
  out.a20 = (tp[0] - 2.0 * t00[0] + tm[0]) / (hu * hu);
  out.b20 = (tp[1] - 2.0 * t00[1] + tm[1]) / (hu * hu);
  out.b11 = (tpp[1] - tpm[1] - tmp[1] + tmm[1]) / (4.0 * hu * hv);
  return out;
}

bool bt_sign_pattern(BTBranch branch, double a20, double b11, double b20) {
  const double combo = a20 + b11 - b20;
  return branch == BTBranch::Second ? (b20 < 0.0 && combo > 0.0) : (b20 > 0.0 && combo < 0.0);
}

}  // namespace

BTCoefficients bt_nondegeneracy(const BTPoint& bt, const MapConstants& c) {
  BTCoefficients out;
  out.coeffC = bt_scale(bt.ell, c);
  const double hu = 1e-4 * std::max(1.0, std::abs(bt.x));
  const double hv = 1e-4 * std::max(1.0, std::abs(out.coeffC * bt.y));
  const Taylor2 coarse = bt_second_derivatives(bt, c, out.coeffC, hu, hv);
  const Taylor2 fine = bt_second_derivatives(bt, c, out.coeffC, 0.5 * hu, 0.5 * hv);
  out.a20 = fine.a20;
  out.b20 = fine.b20;
  out.b11 = fine.b11;
  // Rounding floor: map values are O(1..10), second differences divide by h^2.
  const double floor = 1e-14 * std::max(1.0, 2.0 * bt.ell * kPi) / (0.25 * hu * hv);
  out.noise = std::max({std::abs(coarse.a20 - fine.a20), std::abs(coarse.b20 - fine.b20),
                        std::abs(coarse.b11 - fine.b11), floor});
  const double combo = out.a20 + out.b11 - out.b20;
  out.inconclusive = std::abs(out.b20) < 10.0 * out.noise || std::abs(combo) < 10.0 * out.noise;
  out.nondegenerate = !out.inconclusive && bt_sign_pattern(bt.branch, out.a20, out.b11, out.b20);
  return out;
}

BTCoefficients bt_table_coefficients(const BTPoint& bt, const MapConstants& c) {
  BTCoefficients out;
  out.coeffC = bt_scale(bt.ell, c);
  const double d = c.delta;
  const double lam = bt.lambda;
  if (bt.branch == BTBranch::Second) {
    const double base = bt.A + lam;
    out.a20 = -out.coeffC * c.K * bt.omega * lam / (base * base);
    out.b20 = std::pow(base, d - 2.0) * lam * d * (1.0 - d);
  } else {
    const double base = bt.A - lam;
    out.a20 = out.coeffC * c.K * bt.omega * lam / (base * base);
    out.b20 = -std::pow(base, d - 2.0) * lam * d * (1.0 - d);
  }
  out.b11 = out.b20;
  out.nondegenerate = bt_sign_pattern(bt.branch, out.a20, out.b11, out.b20);
  return out;
}

std::pair<BTPoint, BTPoint> bt_points(double lambda, int ell, const MapConstants& c) {
  require_ell(ell);
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  const double w = omega_star(ell, c);
  const double gmax = g_ell(w, ell, c);
  const double y = fixed_height(w, ell, c);
  auto make = [&](BTBranch b, double A) {
    BTPoint p;
    p.ell = ell;
    p.branch = b;
    p.x = bt_angle(b);
    p.y = y;
    p.A = A;
    p.lambda = lambda;
    p.omega = w;
    p.admissible = A > 0.0 || (A == 0.0 && lambda == 0.0);
    p.coeffs = bt_nondegeneracy(p, c);
    return p;
  };
  return {make(BTBranch::First, gmax - lambda), make(BTBranch::Second, gmax + lambda)};
}

BTPoint locate_bt(BTBranch branch, double lambda, int ell, const MapConstants& c, double A0,
                  double omega0, const NewtonSettings& settings) {
  require_ell(ell);
  if (!(omega0 > 0.0)) throw InvalidArgument("omega guess must be positive");
  // Unknowns z = (x, y, A, omega).
  auto equations = [&](const std::array<double, 4>& z) {
    const Params mu{z[2], lambda, z[3]};
    const LiftPoint p{z[0], z[1]};
    const LiftPoint f = return_map(p, mu, c);
    const Jacobian2 j = jacobian(p, mu, c);
    return std::array<double, 4>{f.x - p.x - 2.0 * ell * kPi, f.y - p.y, j.trace() - 2.0,
                                 j.det() - 1.0};
  };
  auto norm = [](const std::array<double, 4>& e) {
    double m = 0.0;
    for (double v : e) m = std::max(m, std::abs(v));
    return m;
  };
  std::array<double, 4> z{bt_angle(branch), fixed_height(omega0, ell, c), A0, omega0};
  std::array<double, 4> e = equations(z);
  int it = 0;
  for (; it < settings.max_iterations && !(norm(e) < settings.tolerance); ++it) {
    Matrix<4> jac{};
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(z[k]));
      auto zp = z;
      auto zm = z;
      zp[k] += h;
      zm[k] -= h;
      const auto ep = equations(zp);
      const auto em = equations(zm);
      for (int r = 0; r < 4; ++r) jac[r][k] = (ep[r] - em[r]) / (2.0 * h);
    }
    const auto step = solve(jac, e);
    // Damped Newton: halve until the residual drops or the domain is respected.
    double t = 1.0;
    bool accepted = false;
    for (int b = 0; b < 30; ++b, t *= 0.5) {
      auto trial = z;
      for (int k = 0; k < 4; ++k) trial[k] -= t * step[k];
      try {
        const auto et = equations(trial);
        if (norm(et) < norm(e) || b == 29) {
          z = trial;
          e = et;
          accepted = true;
          break;
        }
      } catch (const DomainError&) {
      }
    }
    if (!accepted) throw SolverError("BT Newton: no admissible step");
  }
  if (!(norm(e) < settings.tolerance)) {
    throw SolverError("BT Newton did not converge (residual " + std::to_string(norm(e)) + ")");
  }
  BTPoint p;
  p.ell = ell;
  p.branch = branch;
  p.x = reduce_angle(z[0]);
  p.y = z[1];
  p.A = z[2];
  p.lambda = lambda;
  p.omega = z[3];
  p.admissible = p.A > 0.0;
  p.coeffs = bt_nondegeneracy(p, c);
  return p;
}

std::vector<BTPoint> continue_bt(BTBranch branch, const std::vector<double>& lambdas, int ell,
                                 const MapConstants& c, double A0, double omega0) {
  std::vector<BTPoint> out;
  out.reserve(lambdas.size());
  double A = A0;
  double w = omega0;
  for (double lam : lambdas) {
    // Secant predictor in lambda once two points exist.
    double Ap = A;
    if (out.size() >= 2) {
      const BTPoint& a = out[out.size() - 2];
      const BTPoint& b = out.back();
      if (b.lambda != a.lambda) Ap = b.A + (b.A - a.A) / (b.lambda - a.lambda) * (lam - b.lambda);
    }
    BTPoint p = locate_bt(branch, lam, ell, c, Ap, w);
    A = p.A;
    w = p.omega;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Surfaces

const char* to_string(SurfaceLabel l) {
  switch (l) {
    case SurfaceLabel::SN1: return "SN1";
    case SurfaceLabel::SN2: return "SN2";
    case SurfaceLabel::Hopf: return "HOPF";
    case SurfaceLabel::PD: return "PD";
    case SurfaceLabel::NF: return "NF";
  }
  return "?";
}

const char* to_string(SampleBranch b) {
  switch (b) {
    case SampleBranch::HalfPi: return "x=pi/2";
    case SampleBranch::ThreeHalvesPi: return "x=3pi/2";
    case SampleBranch::CosPositive: return "cos>0";
    case SampleBranch::CosNegative: return "cos<0";
  }
  return "?";
}

LiftPoint branch_fixed_point(const Params& mu, int ell, const MapConstants& c, SampleBranch b) {
  const double y = fixed_height(mu.omega, ell, c);
  switch (b) {
    case SampleBranch::HalfPi: return {0.5 * kPi, y};
    case SampleBranch::ThreeHalvesPi: return {1.5 * kPi, y};
    default: break;
  }
  if (!(mu.lambda > 0.0)) throw InvalidArgument("branch fixed point needs lambda > 0");
  const double ratio = (g_ell(mu.omega, ell, c) - mu.A) / mu.lambda;
  if (std::abs(ratio) > 1.0 + 1e-12) throw InvalidArgument("no (1,l)-fixed point outside the wedge");
  const double base = std::asin(std::clamp(ratio, -1.0, 1.0));
  return {reduce_angle(b == SampleBranch::CosPositive ? base : kPi - base), y};
}

double surface_residual(SurfaceLabel label, const Params& mu, int ell, const MapConstants& c,
                        SampleBranch b) {
  const double g = g_ell(mu.omega, ell, c);
  if (label == SurfaceLabel::SN1) return mu.A + mu.lambda - g;
  if (label == SurfaceLabel::SN2) return mu.A - mu.lambda - g;
  if (!(mu.lambda > 0.0) || std::abs(g - mu.A) > mu.lambda) return kNaN;
  const LiftPoint p = branch_fixed_point(mu, ell, c, b);
  const Jacobian2 j = jacobian(p, mu, c);
  switch (label) {
    case SurfaceLabel::Hopf: return j.det() - 1.0;
    case SurfaceLabel::PD: return 1.0 + j.trace() + j.det();
    case SurfaceLabel::NF: return j.trace() * j.trace() - 4.0 * j.det();
    default: break;
  }
  return kNaN;
}

namespace {

struct SurfaceKind {
  SurfaceLabel label;
  SampleBranch branch;
};

constexpr std::array<SurfaceKind, 8> kKinds{{
    {SurfaceLabel::SN1, SampleBranch::HalfPi},
    {SurfaceLabel::SN2, SampleBranch::ThreeHalvesPi},
    {SurfaceLabel::Hopf, SampleBranch::CosPositive},
    {SurfaceLabel::Hopf, SampleBranch::CosNegative},
    {SurfaceLabel::PD, SampleBranch::CosPositive},
    {SurfaceLabel::PD, SampleBranch::CosNegative},
    {SurfaceLabel::NF, SampleBranch::CosPositive},
    {SurfaceLabel::NF, SampleBranch::CosNegative},
}};

double axis_value(double lo, double hi, int i, int n) {
  return n <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

bool accept_sample(const SurfaceKind& kind, const Params& mu, int ell, const MapConstants& c,
                   double residual) {
  if (!(std::abs(residual) < kSurfaceResidual)) return false;
  if (kind.label == SurfaceLabel::Hopf) {
    const Jacobian2 j = jacobian(branch_fixed_point(mu, ell, c, kind.branch), mu, c);
    return j.trace() > -2.0 && j.trace() < 2.0;
  }
  return true;
}

}  // namespace

std::vector<SurfaceSample> sample_surfaces(const ParamBox& box, int ell, const MapConstants& c,
                                           const GridResolution& grid, unsigned threads) {
  require_ell(ell);
  if (grid.nA < 2 || grid.nLambda < 2 || grid.nOmega < 2) {
    throw InvalidArgument("surface grid needs at least 2 points per axis");
  }
  if (box.A_min > box.A_max || box.lambda_min > box.lambda_max || box.omega_min > box.omega_max) {
    throw InvalidArgument("surface box needs min <= max on every axis");
  }
  if (!(box.omega_min > 0.0) || box.lambda_min < 0.0) {
    throw InvalidArgument("surface box needs omega > 0 and lambda >= 0");
  }
  const int nA = grid.nA, nL = grid.nLambda, nW = grid.nOmega;
  auto node = [&](int i, int j, int k) {
    return Params{axis_value(box.A_min, box.A_max, i, nA),
                  axis_value(box.lambda_min, box.lambda_max, j, nL),
                  axis_value(box.omega_min, box.omega_max, k, nW)};
  };
  auto index = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(k) * nL + j) * nA + i;
  };
  constexpr std::size_t nk = kKinds.size();
  std::vector<double> res(static_cast<std::size_t>(nA) * nL * nW * nk);
  parallel_for(static_cast<std::size_t>(nW), threads, [&](std::size_t k) {
    for (int j = 0; j < nL; ++j) {
      for (int i = 0; i < nA; ++i) {
        const Params mu = node(i, j, static_cast<int>(k));
        for (std::size_t q = 0; q < nk; ++q) {
          res[index(i, j, static_cast<int>(k)) * nk + q] =
              surface_residual(kKinds[q].label, mu, ell, c, kKinds[q].branch);
        }
      }
    }
  });

  std::vector<std::vector<SurfaceSample>> slabs(static_cast<std::size_t>(nW));
  parallel_for(static_cast<std::size_t>(nW), threads, [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    auto& out = slabs[kk];
    for (int j = 0; j < nL; ++j) {
      for (int i = 0; i < nA; ++i) {
        const int ends[3][3] = {{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}};
        for (const auto& e : ends) {
          if (e[0] >= nA || e[1] >= nL || e[2] >= nW) continue;
          const Params p0 = node(i, j, k);
          const Params p1 = node(e[0], e[1], e[2]);
          for (std::size_t q = 0; q < nk; ++q) {
            const double f0 = res[index(i, j, k) * nk + q];
            const double f1 = res[index(e[0], e[1], e[2]) * nk + q];
            if (!std::isfinite(f0) || !std::isfinite(f1)) continue;
            if (!((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0))) continue;
            const SurfaceKind& kind = kKinds[q];
            auto at = [&](double t) {
              return Params{p0.A + t * (p1.A - p0.A), p0.lambda + t * (p1.lambda - p0.lambda),
                            p0.omega + t * (p1.omega - p0.omega)};
            };
            double lo = 0.0, hi = 1.0, flo = f0;
            double best_t = std::abs(f0) < std::abs(f1) ? 0.0 : 1.0;
            double best_f = std::min(std::abs(f0), std::abs(f1));
            for (int b = 0; b < 200 && hi - lo > 1e-17; ++b) {
              const double mid = 0.5 * (lo + hi);
              const double fm = surface_residual(kind.label, at(mid), ell, c, kind.branch);
              if (!std::isfinite(fm)) break;
              if (std::abs(fm) < best_f) {
                best_f = std::abs(fm);
                best_t = mid;
              }
              if (fm == 0.0) break;
              if ((fm < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = fm;
              } else {
                hi = mid;
              }
            }
            const Params mu = at(best_t);
            const double r = surface_residual(kind.label, mu, ell, c, kind.branch);
            if (!accept_sample(kind, mu, ell, c, r)) continue;
            out.push_back({kind.label, mu.A, mu.lambda, mu.omega, kind.branch, r});
          }
        }
      }
    }
  });
  std::vector<SurfaceSample> all;
  for (auto& s : slabs) all.insert(all.end(), s.begin(), s.end());
  return all;
}

}  // namespace bykov
