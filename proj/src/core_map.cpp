#include "bykov/core_map.hpp"

#include <cmath>
#include <string>

#include "bykov/error.hpp"

namespace bykov {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be positive and finite (got " +
                          std::to_string(v) + ")");
  }
}

void require_weakly_attracting(double delta) {
  if (!(delta > 1.0)) {
    throw InvalidArgument("not weakly attracting: delta = " + std::to_string(delta) +
                          " must exceed 1");
  }
}

}  // namespace

double max_splitting(double delta) {
  require_weakly_attracting(delta);
  const double e = 1.0 / (1.0 - delta);
  return std::pow(delta, e) - std::pow(delta, delta * e);
}

MapConstants MapConstants::from_delta(double delta, double K) {
  require_positive(K, "K");
  require_weakly_attracting(delta);
  MapConstants c;
  c.delta1 = std::sqrt(delta);
  c.delta2 = c.delta1;
  c.delta = delta;
  c.K = K;
  c.M = max_splitting(delta);
  return c;
}

MapConstants derive_constants(const SaddleValues& sv) {
  require_positive(sv.C1, "C1");
  require_positive(sv.E1, "E1");
  require_positive(sv.C2, "C2");
  require_positive(sv.E2, "E2");
  require_positive(sv.omega_spin, "omega_spin");
  MapConstants c;
  c.delta1 = sv.C1 / sv.E1;
  c.delta2 = sv.C2 / sv.E2;
  c.delta = c.delta1 * c.delta2;
  require_weakly_attracting(c.delta);
  c.K = (sv.C1 + sv.E2) / (sv.E1 * sv.E2);
  c.M = max_splitting(c.delta);
  c.saddle = sv;
  return c;
}

bool in_parameter_set(const Params& mu, const MapConstants& c, double eps) {
  return mu.lambda >= 0.0 && mu.lambda < mu.A && mu.A <= eps && c.M >= mu.A + mu.lambda &&
         mu.omega > 0.0;
}

double reduce_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a value just below a multiple of 2*pi can round up to 2*pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

LiftPoint reduce(const LiftPoint& p) { return {reduce_angle(p.x), p.y}; }

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Phi1: return "Phi1";
    case Stage::Psi12: return "Psi12";
    case Stage::Phi2: return "Phi2";
    case Stage::Psi21: return "Psi21";
    case Stage::Eta: return "Eta";
  }
  return "?";
}

LiftPoint factor_map(Stage stage, const LiftPoint& p, const Params& mu, const MapConstants& c) {
  switch (stage) {
    case Stage::Phi1: {
      if (!c.saddle) throw InvalidArgument("Phi1 needs the saddle values (E1)");
      if (!(p.y > 0.0)) throw DomainError("Phi1 needs y > 0", p.y);
      return {std::pow(p.y, c.delta1), p.x - mu.omega * std::log(p.y) / c.saddle->E1};
    }
    case Stage::Psi12:
      return p;
    case Stage::Phi2: {
      if (!c.saddle) throw InvalidArgument("Phi2 needs the saddle values (E2)");
      const double r = p.x;
      const double phi = p.y;
      if (!(r > 0.0)) throw DomainError("Phi2 needs r > 0", r);
      return {phi - mu.omega * std::log(r) / c.saddle->E2, std::pow(r, c.delta2)};
    }
    case Stage::Psi21:
      return {p.x, p.y + mu.A + mu.lambda * std::sin(p.x)};
    case Stage::Eta: {
      if (!(p.y > 0.0)) throw DomainError("Eta needs y > 0", p.y);
      return {p.x - c.K * mu.omega * std::log(p.y), std::pow(p.y, c.delta)};
    }
  }
  throw InvalidArgument("unknown stage");
}

double section_radius(const LiftPoint& p, const Params& mu) {
  return p.y + mu.A + mu.lambda * std::sin(p.x);
}

LiftPoint return_map(const LiftPoint& p, const Params& mu, const MapConstants& c) {
  const double s = section_radius(p, mu);
  if (!(s > 0.0)) throw DomainError("left the return domain: s = " + std::to_string(s), s);
  if (std::abs(p.y) > 1.0) throw DomainError("outside the cross-section: |y| > 1", p.y);
  return {p.x - c.K * mu.omega * std::log(s), std::pow(s, c.delta)};
}

LiftPoint return_map_reduced(const LiftPoint& p, const Params& mu, const MapConstants& c) {
  return reduce(return_map(p, mu, c));
}

LiftPoint inverse_return_map(const LiftPoint& p, const Params& mu, const MapConstants& c) {
  if (!(p.y > 0.0)) throw DomainError("not in the image of the return map: y <= 0", p.y);
  const double s = std::pow(p.y, 1.0 / c.delta);
  const double x = p.x + c.K * mu.omega * std::log(s);
  const double y = s - mu.A - mu.lambda * std::sin(x);
  if (std::abs(y) > 1.0) throw DomainError("preimage outside the cross-section: |y| > 1", y);
  return {x, y};
}

std::array<std::complex<double>, 2> quadratic_eigenvalues(double trace, double det) {
  const double disc = trace * trace - 4.0 * det;
  std::array<std::complex<double>, 2> ev;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    // Avoid cancellation: the larger-magnitude root first, the other from det.
    const double big = trace >= 0.0 ? 0.5 * (trace + sq) : 0.5 * (trace - sq);
    const double small = big != 0.0 ? det / big : 0.0;
    ev = {std::complex<double>(big), std::complex<double>(small)};
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    ev = {std::complex<double>(0.5 * trace, im), std::complex<double>(0.5 * trace, -im)};
  }
  if (std::abs(ev[1]) > std::abs(ev[0])) std::swap(ev[0], ev[1]);
  return ev;
}

std::array<std::complex<double>, 2> Jacobian2::eigenvalues() const {
  return quadratic_eigenvalues(trace(), det());
}

Jacobian2 jacobian(const LiftPoint& p, const Params& mu, const MapConstants& c) {
  const double s = section_radius(p, mu);
  if (!(s > 0.0)) throw DomainError("left the return domain: s = " + std::to_string(s), s);
  const double cx = std::cos(p.x);
  const double kw = c.K * mu.omega;
  const double ds = c.delta * std::pow(s, c.delta - 1.0);
  return {1.0 - kw * mu.lambda * cx / s, -kw / s, mu.lambda * cx * ds, ds};
}

}  // namespace bykov
