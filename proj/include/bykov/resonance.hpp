#pragma once

// (1, l)-fixed points of the return map, their stability, and the
// bifurcation surfaces that bound and dissect the (1, l)-resonance wedge.

#include <array>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "bykov/core_map.hpp"

namespace bykov {

/// G_l(omega) = exp(-2 l pi / (K omega)) - exp(-2 l delta pi / (K omega)).
/// Throws InvalidArgument for omega <= 0 or l < 1.
double g_ell(double omega, int ell, const MapConstants& c);

/// dG_l/domega, closed form.
double g_ell_derivative(double omega, int ell, const MapConstants& c);

/// Unique maximiser of G_l: 2 l pi (delta - 1) / (K ln delta).
double omega_star(int ell, const MapConstants& c);

enum class StabilityClass { SinkNode, SinkFocus, Saddle, SourceNode, SourceFocus, NonHyperbolic };

const char* to_string(StabilityClass c);

/// Eigenvalue moduli within this distance of 1 count as non-hyperbolic.
inline constexpr double kNonHyperbolicBand = 1e-10;

StabilityClass classify(double trace, double det);

struct FixedPointRecord {
  int ell = 1;
  double x = 0.0;  // in [0, 2*pi)
  double y = 0.0;
  double s = 0.0;
  double trace = 0.0;
  double det = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
  StabilityClass cls = StabilityClass::NonHyperbolic;
  double residual = 0.0;
  int newton_iterations = 0;

  LiftPoint point() const { return {x, y}; }
};

struct NewtonSettings {
  double tolerance = 1e-12;
  int max_iterations = 50;
};

/// Polishes a (1, l)-fixed point guess by Newton on F(p) - p - (2 l pi, 0).
/// Throws SolverError when the tolerance is not reached.
FixedPointRecord polish_fixed_point(const LiftPoint& guess, const Params& mu, const MapConstants& c,
                                    int ell, const NewtonSettings& settings = {});

/// All (1, l)-fixed points: empty outside the wedge, one on its boundary, two
/// inside. Throws InvalidArgument("degenerate circle of fixed points") when
/// lambda == 0 and A == G_l(omega).
std::vector<FixedPointRecord> fixed_points(const Params& mu, const MapConstants& c, int ell,
                                           const NewtonSettings& settings = {});

enum class WedgeMembership { Inside, Boundary, Outside };

const char* to_string(WedgeMembership w);

WedgeMembership wedge_membership(const Params& mu, int ell, const MapConstants& c);

/// BT^1 sits at x = pi/2 (A = G - lambda), BT^2 at x = 3*pi/2 (A = G + lambda).
enum class BTBranch { First, Second };

const char* to_string(BTBranch b);
double bt_angle(BTBranch b);

struct BTCoefficients {
  double coeffC = 0.0;
  double a20 = 0.0;
  double b11 = 0.0;
  double b20 = 0.0;
  /// Largest finite-difference noise estimate among the three coefficients.
  double noise = 0.0;
  bool inconclusive = false;
  bool nondegenerate = false;
};

struct BTPoint {
  int ell = 1;
  BTBranch branch = BTBranch::First;
  double x = 0.0;
  double y = 0.0;
  double A = 0.0;
  double lambda = 0.0;
  double omega = 0.0;
  /// False when the point falls outside A >= 0 (lambda >= M on the first branch).
  bool admissible = true;
  BTCoefficients coeffs;

  Params params() const { return {A, lambda, omega}; }
  LiftPoint point() const { return {x, y}; }
};

/// C = -2 K l pi (delta - 1) / (delta^(delta/(1-delta)) ln delta).
double bt_scale(int ell, const MapConstants& c);

/// Second-order Taylor coefficients of the map after translating the BT fixed
/// point to the origin and rescaling y by C, by central finite differences.
/// nondegenerate := b20 < 0 and a20 + b11 - b20 > 0 on the x = 3*pi/2 branch,
/// with both signs reversed on the x = pi/2 branch.
BTCoefficients bt_nondegeneracy(const BTPoint& bt, const MapConstants& c);

/// The tabulated closed forms a20 = -+C K omega lambda / (A -+ lambda)^2,
/// b11 = b20 = +-(A -+ lambda)^(delta-2) lambda delta (1-delta); kept for
/// comparison with the finite-difference values.
BTCoefficients bt_table_coefficients(const BTPoint& bt, const MapConstants& c);

/// Closed-form BT points for the given lambda, coefficients filled in.
std::pair<BTPoint, BTPoint> bt_points(double lambda, int ell, const MapConstants& c);

/// Solves for a fixed point with trace = 2 and det = 1 on the given branch by
/// Newton in (x, y, A, omega) at fixed lambda, starting from (A0, omega0).
BTPoint locate_bt(BTBranch branch, double lambda, int ell, const MapConstants& c, double A0,
                  double omega0, const NewtonSettings& settings = {});

/// Natural-parameter continuation of locate_bt over an increasing list of
/// lambda values; each solve is seeded by the previous one.
std::vector<BTPoint> continue_bt(BTBranch branch, const std::vector<double>& lambdas, int ell,
                                 const MapConstants& c, double A0, double omega0);

enum class SurfaceLabel { SN1, SN2, Hopf, PD, NF };

const char* to_string(SurfaceLabel l);

/// Which fixed point a sample refers to. SN samples sit at sin x = +1
/// (HalfPi) or -1 (ThreeHalvesPi); the others on the arc with cos x >= 0
/// (x = asin r) or cos x <= 0 (x = pi - asin r).
enum class SampleBranch { HalfPi, ThreeHalvesPi, CosPositive, CosNegative };

const char* to_string(SampleBranch b);

struct SurfaceSample {
  SurfaceLabel label = SurfaceLabel::SN1;
  double A = 0.0;
  double lambda = 0.0;
  double omega = 0.0;
  SampleBranch branch = SampleBranch::HalfPi;
  double residual = 0.0;
};

struct ParamBox {
  double A_min = 0.0, A_max = 0.5;
  double lambda_min = 0.0, lambda_max = 0.1;
  double omega_min = 0.5, omega_max = 10.0;
};

struct GridResolution {
  int nA = 2;
  int nLambda = 2;
  int nOmega = 2;
};

/// Maximum residual accepted for an emitted surface sample.
inline constexpr double kSurfaceResidual = 1e-8;

/// The (1, l)-fixed point on a given arc, from the closed form. Requires the
/// parameters to be Inside or on the Boundary.
LiftPoint branch_fixed_point(const Params& mu, int ell, const MapConstants& c, SampleBranch b);

/// Defining residual of a surface at mu (fixed point on branch b for
/// Hopf/PD/NF). NaN when no fixed point exists.
double surface_residual(SurfaceLabel label, const Params& mu, int ell, const MapConstants& c,
                        SampleBranch b);

/// Locates surface crossings on every grid edge by bisection. Emits samples
/// whose residual is below kSurfaceResidual, in deterministic order.
std::vector<SurfaceSample> sample_surfaces(const ParamBox& box, int ell, const MapConstants& c,
                                           const GridResolution& grid, unsigned threads = 1);

}  // namespace bykov
