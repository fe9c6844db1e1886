#pragma once

// Truncated first return map of a perturbed Bykov network and its factor maps.
//
// Everything here works on the truncated normal forms: the higher order
// remainders of the local maps near the two saddle-foci are set to zero.
// Their derivatives are bounded by a power of the distance to the local
// stable manifold, so for small (A, lambda) the truncated map carries the
// dynamics that matter for fixed points and their bifurcations.
//
// Angular coordinates live in the universal cover ("lift"): x is never
// reduced mod 2*pi internally, so the lift displacement of a (1, l)-fixed
// point is exactly 2*l*pi.

#include <array>
#include <complex>
#include <numbers>
#include <optional>

namespace bykov {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Eigenvalue magnitudes of the two saddle-foci: C = contracting,
/// E = expanding; omega_spin is the imaginary part of the foci eigenvalues.
struct SaddleValues {
  double C1 = 0.0;
  double E1 = 0.0;
  double C2 = 0.0;
  double E2 = 0.0;
  double omega_spin = 1.0;
};

/// Quantities derived from the saddle values. `saddle` is kept when the
/// constants were derived from eigenvalues; the individual local maps need it.
struct MapConstants {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta = 0.0;
  double K = 0.0;
  double M = 0.0;
  std::optional<SaddleValues> saddle;

  /// Synthetic constants from (delta, K) alone, split as delta1 = delta2 = sqrt(delta).
  /// Throws InvalidArgument unless delta > 1 and K > 0.
  static MapConstants from_delta(double delta, double K);
};

/// M = delta^(1/(1-delta)) - delta^(delta/(1-delta)), the maximum of G_l.
double max_splitting(double delta);

/// Throws InvalidArgument on non-positive input or delta <= 1 ("not weakly attracting").
MapConstants derive_constants(const SaddleValues& sv);

/// Unfolding parameters: A = average splitting, lambda = modulation, omega = spin.
struct Params {
  double A = 0.0;
  double lambda = 0.0;
  double omega = 1.0;
};

/// 0 <= lambda < A <= eps and M >= A + lambda, omega > 0.
bool in_parameter_set(const Params& mu, const MapConstants& c, double eps = 1.0);

struct LiftPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const LiftPoint&, const LiftPoint&) = default;
};

/// x reduced to [0, 2*pi).
double reduce_angle(double x);
LiftPoint reduce(const LiftPoint& p);

enum class Stage { Phi1, Psi12, Phi2, Psi21, Eta };

const char* to_string(Stage s);

/// One factor of the return map. Phi1 returns (r, phi) stored as (x, y);
/// Phi2 reads its input the same way. Phi1 and Phi2 need `c.saddle`.
LiftPoint factor_map(Stage stage, const LiftPoint& p, const Params& mu, const MapConstants& c);

/// s = y + A + lambda*sin(x); the return map is defined where s > 0.
double section_radius(const LiftPoint& p, const Params& mu);

/// (x - K*omega*ln s, s^delta) in the lift. Throws DomainError (carrying s)
/// when s <= 0, or when |y| > 1.
LiftPoint return_map(const LiftPoint& p, const Params& mu, const MapConstants& c);

/// Same as return_map with x reduced to [0, 2*pi).
LiftPoint return_map_reduced(const LiftPoint& p, const Params& mu, const MapConstants& c);

/// Inverse of return_map on its image (y > 0). Throws DomainError when the
/// preimage has |y| > 1 or y <= 0.
LiftPoint inverse_return_map(const LiftPoint& p, const Params& mu, const MapConstants& c);

/// Row-major 2x2 matrix.
struct Jacobian2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a21 = 0.0;
  double a22 = 0.0;

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }
  /// Roots of t^2 - trace*t + det, ordered by decreasing modulus.
  std::array<std::complex<double>, 2> eigenvalues() const;
  std::array<double, 2> apply(const std::array<double, 2>& v) const {
    return {a11 * v[0] + a12 * v[1], a21 * v[0] + a22 * v[1]};
  }
};

/// Roots of t^2 - trace*t + det ordered by decreasing modulus.
std::array<std::complex<double>, 2> quadratic_eigenvalues(double trace, double det);

/// Derivative of the return map. Throws DomainError when s <= 0.
Jacobian2 jacobian(const LiftPoint& p, const Params& mu, const MapConstants& c);

}  // namespace bykov
