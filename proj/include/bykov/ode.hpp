#pragma once

// The symmetric 4D vector field with a Bykov network on S^3, its structural
// checks, and Lyapunov spectra by the Benettin method.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bykov/core_map.hpp"
#include "bykov/integrator.hpp"
#include "bykov/linalg.hpp"
#include "bykov/orbit.hpp"

namespace bykov {

using State4 = Vector<4>;

/// alpha, beta, omega with beta < 0 < alpha, beta^2 < 8 alpha^2,
/// |beta| < |alpha|, omega > 0; tau1 breaks the Z2(gamma_2) symmetry and
/// tau2 the SO(2) symmetry. Construct through make() to validate.
struct OdeParams {
  double alpha = 1.0;
  double beta = -0.1;
  double omega = 1.0;
  double tau1 = 0.0;
  double tau2 = 0.0;

  static OdeParams make(double alpha, double beta, double omega, double tau1, double tau2);
  /// Throws InvalidArgument naming the first violated inequality.
  void validate() const;
};

State4 vector_field(const State4& s, const OdeParams& p);

/// Analytic Jacobian of vector_field.
Matrix<4> field_jacobian(const State4& s, const OdeParams& p);

inline double radius_squared(const State4& s) { return dot(s, s); }

/// The two equilibria on S^3.
inline constexpr State4 kO1{0.0, 0.0, 0.0, 1.0};
inline constexpr State4 kO2{0.0, 0.0, 0.0, -1.0};

/// Integrates the field from s0 over [0, t_final]. When `trajectory` is
/// non-null every accepted step is appended as (t, state).
State4 integrate(const State4& s0, const OdeParams& p, double t_final, const IntegratorSettings& settings,
                 std::vector<std::pair<double, State4>>* trajectory = nullptr);

struct EquilibriaReport {
  double residual_O1 = 0.0;
  double residual_O2 = 0.0;
  /// Filled only at tau1 = 0, where O1 and O2 are equilibria.
  bool eigen_checked = false;
  std::array<std::complex<double>, 4> eigen_O1{};
  std::array<std::complex<double>, 4> eigen_O2{};
  std::array<std::complex<double>, 4> expected_O1{};
  std::array<std::complex<double>, 4> expected_O2{};
  double eigen_mismatch = 0.0;
  SaddleValues saddle;
  MapConstants constants;
};

/// Residuals at O1/O2 and, at tau1 = 0, the linearisation spectra against
/// -(alpha-beta) +- omega i, alpha+beta, -2 (O1) and (alpha+beta) +- omega i,
/// -(alpha-beta), -2 (O2); derives the return-map constants with
/// C1 = C2 = alpha - beta, E1 = E2 = alpha + beta.
EquilibriaReport equilibria_check(const OdeParams& p);

/// Worst-case violations of the structural properties of the field, sampled
/// at random states. tau is drawn at random per sample except where a
/// property needs it pinned (tau = 0 for the x3 = 0 subspace, tau2 = 0 for
/// SO(2)); alpha, beta, omega come from `p`.
struct StructuralReport {
  int samples = 0;
  double sphere = 0.0;        // max |<s, f(s)>| on r = 1
  double subspace_12 = 0.0;   // max |f1|, |f2| on x1 = x2 = 0
  double subspace_3 = 0.0;    // max |f3| on x3 = 0, tau = 0
  double gamma_pi = 0.0;      // max |f(g s) - g f(s)|, g = diag(-1,-1,1,1)
  double so2 = 0.0;           // max |f(R s) - R f(s)| at tau2 = 0
  double jacobian_fd = 0.0;   // max relative error of field_jacobian vs central differences
};

StructuralReport structural_checks(const OdeParams& p, std::uint64_t seed, int samples = 1000);

/// Eigenvalues of a 4x4 matrix, sorted by (real, imag).
std::array<std::complex<double>, 4> eigenvalues4(const Matrix<4>& m);

/// Exponent magnitude counted as zero in spectra classification.
inline constexpr double kSpectrumThreshold = 5e-4;

template <std::size_t N>
struct SpectrumResult {
  std::array<double, N> exponents{};
  /// Exponents >= -threshold (zero band or positive).
  int count_nonnegative = 0;
  int count_positive = 0;
  int count_zero = 0;
  double integration_time = 0.0;
  double renorm_interval = 0.0;
  /// Time average of the divergence over the measurement window.
  double divergence_average = 0.0;
  /// Smallest x1^2 + x2^2 + x3^2 seen during the window (4D field only).
  double min_axis_distance = std::numeric_limits<double>::infinity();
  bool failed = false;
  double reached_time = 0.0;
  std::string message;
};

struct SpectrumSettings {
  double t_final = 1000.0;
  double renorm_dt = 0.5;
  /// Negative means 10% of t_final.
  double transient = -1.0;
  double threshold = kSpectrumThreshold;
  IntegratorSettings integrator{};
};

/// Hook for the Benettin driver: dimension, rhs and Jacobian.
struct BykovField {
  static constexpr std::size_t dim = 4;
  OdeParams params;
  Vector<4> rhs(const Vector<4>& s) const { return vector_field(s, params); }
  Matrix<4> jacobian(const Vector<4>& s) const { return field_jacobian(s, params); }
  double axis_distance(const Vector<4>& s) const { return s[0] * s[0] + s[1] * s[1] + s[2] * s[2]; }
};

/// x_i' = a_i x_i; its spectrum is (a_i) sorted.
struct LinearDiagonalSystem {
  static constexpr std::size_t dim = 4;
  std::array<double, 4> rates{};
  Vector<4> rhs(const Vector<4>& s) const {
    return {rates[0] * s[0], rates[1] * s[1], rates[2] * s[2], rates[3] * s[3]};
  }
  Matrix<4> jacobian(const Vector<4>&) const {
    Matrix<4> m{};
    for (std::size_t i = 0; i < 4; ++i) m[i][i] = rates[i];
    return m;
  }
  double axis_distance(const Vector<4>&) const { return std::numeric_limits<double>::infinity(); }
};

/// Benettin method: the state and N tangent vectors are integrated jointly
/// under the variational equations and Gram-Schmidt renormalised every
/// renorm_dt. Integration failures are reported in the result (failed =
/// true, partial window) instead of thrown.
template <class System>
SpectrumResult<System::dim> lyapunov_spectrum(const System& sys, const Vector<System::dim>& s0,
                                              const SpectrumSettings& settings) {
  constexpr std::size_t N = System::dim;
  constexpr std::size_t M = N + N * N + 1;
  const double transient = settings.transient < 0.0 ? 0.1 * settings.t_final : settings.transient;
  if (!(settings.t_final > transient) || transient < 0.0) {
    throw InvalidArgument("lyapunov_spectrum needs t_final > transient >= 0");
  }
  if (!(settings.renorm_dt > 0.0)) throw InvalidArgument("renormalisation interval must be positive");

  auto rhs = [&sys](const Vector<M>& z) {
    Vector<M> dz{};
    Vector<N> x;
    for (std::size_t i = 0; i < N; ++i) x[i] = z[i];
    const Vector<N> f = sys.rhs(x);
    const Matrix<N> j = sys.jacobian(x);
    for (std::size_t i = 0; i < N; ++i) dz[i] = f[i];
    double tr = 0.0;
    for (std::size_t i = 0; i < N; ++i) tr += j[i][i];
    for (std::size_t col = 0; col < N; ++col) {
      for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < N; ++k) acc += j[i][k] * z[N + col * N + k];
        dz[N + col * N + i] = acc;
      }
    }
    dz[M - 1] = tr;
    return dz;
  };

  SpectrumResult<N> out;
  out.renorm_interval = settings.renorm_dt;
  Vector<M> z{};
  for (std::size_t i = 0; i < N; ++i) z[i] = s0[i];
  for (std::size_t col = 0; col < N; ++col) z[N + col * N + col] = 1.0;

  DormandPrince<M, decltype(rhs)> stepper(rhs, settings.integrator);
  std::array<double, N> sums{};
  double div_sum = 0.0;
  double t = 0.0;
  double window_start = -1.0;
  auto observe = [&](double tt, const Vector<M>& zz) {
    if (tt >= transient) {
      Vector<N> x;
      for (std::size_t i = 0; i < N; ++i) x[i] = zz[i];
      out.min_axis_distance = std::min(out.min_axis_distance, sys.axis_distance(x));
    }
  };
  try {
    while (t < settings.t_final) {
      const double t_prev = t;
      const double t_next = std::min(settings.t_final, t + settings.renorm_dt);
      // Renormalisation checkpoints also land exactly on the transient time.
      const double t_stop = (t < transient && t_next > transient) ? transient : t_next;
      z[M - 1] = 0.0;
      stepper.advance(z, t, t_stop, observe);
      std::array<Vector<N>, N> frame;
      for (std::size_t col = 0; col < N; ++col) {
        for (std::size_t i = 0; i < N; ++i) frame[col][i] = z[N + col * N + i];
      }
      const auto stretch = gram_schmidt(frame);
      for (std::size_t col = 0; col < N; ++col) {
        for (std::size_t i = 0; i < N; ++i) z[N + col * N + i] = frame[col][i];
      }
      if (t_prev >= transient) {
        if (window_start < 0.0) window_start = t_prev;
        for (std::size_t k = 0; k < N; ++k) sums[k] += std::log(stretch[k]);
        div_sum += z[M - 1];
      }
    }
  } catch (const IntegrationError& e) {
    out.failed = true;
    out.message = e.what();
  }
  out.reached_time = t;
  const double window = window_start >= 0.0 ? t - window_start : 0.0;
  out.integration_time = window;
  if (window > 0.0) {
    for (std::size_t k = 0; k < N; ++k) out.exponents[k] = sums[k] / window;
    out.divergence_average = div_sum / window;
  } else {
    out.exponents.fill(std::numeric_limits<double>::quiet_NaN());
    out.divergence_average = std::numeric_limits<double>::quiet_NaN();
  }
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  for (double e : out.exponents) {
    if (e > settings.threshold) ++out.count_positive;
    else if (e >= -settings.threshold) ++out.count_zero;
  }
  out.count_nonnegative = out.count_positive + out.count_zero;
  return out;
}

/// Default initial condition of the scans, on the unstable manifold of O2.
inline constexpr State4 kScanInitial{0.1, 0.1, 0.0, -0.99};

struct OdeScanSpec {
  /// axis names must be "tau1" and "tau2" (either order).
  ScanAxis axis1{"tau1", 0.0, 1.0, 50};
  ScanAxis axis2{"tau2", 0.0, 1.0, 50};
  OdeParams base;
  State4 initial = kScanInitial;
  SpectrumSettings spectrum;
  /// Minimum of x1^2 + x2^2 + x3^2 below which a cell is flagged near-network.
  double network_flag = 1e-8;
};

/// Per cell: lyapunov_spectrum from spec.initial; class = number of
/// non-negative exponents. Failures are recorded in the cell.
ScanGrid ode_scan(const OdeScanSpec& spec, unsigned threads = 1);

}  // namespace bykov
