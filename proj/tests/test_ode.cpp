#include <cmath>
#include <complex>
#include <cstring>

#include "bykov/error.hpp"
#include "bykov/ode.hpp"
#include "doctest.h"

using namespace bykov;

namespace {

using cplx = std::complex<double>;

// det(J - z I) by cofactor expansion; J from central differences of the field.
cplx char_poly(const State4& at, const OdeParams& p, cplx z) {
  cplx m[4][4];
  for (int k = 0; k < 4; ++k) {
    State4 a = at, b = at;
    a[k] += 1e-6;
    b[k] -= 1e-6;
    const State4 fa = vector_field(a, p), fb = vector_field(b, p);
    for (int r = 0; r < 4; ++r) m[r][k] = (fa[r] - fb[r]) / 2e-6;
  }
  for (int r = 0; r < 4; ++r) m[r][r] -= z;
  auto det3 = [&](int skip_row, int skip_col) {
    int rows[3], cols[3];
    for (int i = 0, n = 0; i < 4; ++i)
      if (i != skip_row) rows[n++] = i;
    for (int i = 0, n = 0; i < 4; ++i)
      if (i != skip_col) cols[n++] = i;
    auto e = [&](int i, int j) { return m[rows[i]][cols[j]]; };
    return e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0)) +
           e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
  };
  cplx d = 0.0;
  for (int j = 0; j < 4; ++j) d += (j % 2 ? -1.0 : 1.0) * m[0][j] * det3(0, j);
  return d;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(OdeParams::make(1.0, -0.1, 1.0, 0.0, 0.0));
  CHECK_THROWS_WITH_AS(OdeParams::make(1.0, 0.1, 1.0, 0.0, 0.0), doctest::Contains("beta < 0"), InvalidArgument);
  CHECK_THROWS_AS(OdeParams::make(1.0, -1.5, 1.0, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(OdeParams::make(1.0, -0.1, 0.0, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(OdeParams::make(1.0, -0.1, 1.0, 1.5, 0.0), InvalidArgument);
}

TEST_CASE("field at O1 with tau1 = 0.5") {
  const OdeParams p = OdeParams::make(1.0, -0.1, 1.0, 0.5, 0.3);
  const State4 f = vector_field(kO1, p);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == doctest::Approx(0.5));
  CHECK(f[3] == 0.0);
  const EquilibriaReport r = equilibria_check(p);
  CHECK(r.residual_O1 == doctest::Approx(0.5));
  CHECK_FALSE(r.eigen_checked);
}

TEST_CASE("equilibrium spectra are roots of the finite-difference characteristic polynomial") {
  const OdeParams p = OdeParams::make(1.0, -0.1, 1.0, 0.0, 0.4);
  const EquilibriaReport r = equilibria_check(p);
  REQUIRE(r.eigen_checked);
  CHECK(r.residual_O1 == 0.0);
  CHECK(r.eigen_mismatch < 1e-10);
  for (const auto& z : r.eigen_O1) CHECK(std::abs(char_poly(kO1, p, z)) < 1e-6);
  for (const auto& z : r.eigen_O2) CHECK(std::abs(char_poly(kO2, p, z)) < 1e-6);
  // Saddle values feed the map constants.
  CHECK(r.constants.delta == doctest::Approx(1.1 * 1.1 / (0.9 * 0.9)).epsilon(1e-12));
  CHECK(r.constants.K == doctest::Approx(2.0 / 0.81).epsilon(1e-12));
}

TEST_CASE("structural properties hold to rounding") {
  const StructuralReport s = structural_checks(OdeParams::make(1.0, -0.1, 1.0, 0.0, 0.0), 7, 500);
  CHECK(s.samples == 500);
  CHECK(s.sphere < 1e-13);
  CHECK(s.subspace_12 < 1e-13);
  CHECK(s.subspace_3 < 1e-13);
  CHECK(s.gamma_pi < 1e-13);
  CHECK(s.so2 < 1e-13);
  CHECK(s.jacobian_fd < 1e-7);
}

TEST_CASE("trajectories stay on the sphere and O1 stays put at tau1 = 0") {
  const OdeParams p = OdeParams::make(1.0, -0.1, 1.0, 0.02, 0.1);
  IntegratorSettings s;
  s.rtol = s.atol = 1e-11;
  std::vector<std::pair<double, State4>> traj;
  integrate({0.1, 0.1, 0.0, -std::sqrt(1.0 - 0.02)}, p, 100.0, s, &traj);
  REQUIRE(traj.size() > 10);
  double worst = 0.0;
  for (const auto& [t, z] : traj) worst = std::max(worst, std::abs(radius_squared(z) - 1.0));
  CHECK(worst < 1e-6);
  CHECK(traj.back().first == 100.0);
  const State4 still = integrate(kO1, OdeParams::make(1.0, -0.1, 1.0, 0.0, 0.3), 50.0, s);
  CHECK(std::abs(still[3] - 1.0) < 1e-14);
}

TEST_CASE("Benettin spectrum of a linear diagonal system") {
  LinearDiagonalSystem sys;
  sys.rates = {-0.3, 0.2, -1.0, 0.0};
  SpectrumSettings st;
  st.t_final = 20.0;
  st.transient = 0.0;
  const auto r = lyapunov_spectrum(sys, {1.0, 1.0, 1.0, 1.0}, st);
  CHECK(r.exponents[0] == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(std::abs(r.exponents[1]) < 1e-6);
  CHECK(r.exponents[2] == doctest::Approx(-0.3).epsilon(1e-6));
  CHECK(r.exponents[3] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r.count_positive == 1);
  CHECK(r.count_zero == 1);
  CHECK(r.count_nonnegative == 2);
  st.transient = 30.0;
  CHECK_THROWS_AS(lyapunov_spectrum(sys, {1.0, 1.0, 1.0, 1.0}, st), InvalidArgument);
}

TEST_CASE("exponent sum equals the average divergence") {
  const OdeParams p = OdeParams::make(1.0, -0.1, 1.0, 0.3, 0.3);
  SpectrumSettings st;
  st.t_final = 200.0;
  const auto r = lyapunov_spectrum(BykovField{p}, kScanInitial, st);
  REQUIRE_FALSE(r.failed);
  double sum = 0.0;
  for (double e : r.exponents) sum += e;
  CHECK(std::abs(sum - r.divergence_average) < 1e-5);
  CHECK(r.integration_time == doctest::Approx(180.0));
  // Off the sphere, radial contraction at rate -2 is always present.
  CHECK(r.exponents[3] == doctest::Approx(-2.0).epsilon(1e-2));
}

TEST_CASE("ODE scan grid layout and thread independence") {
  OdeScanSpec spec;
  spec.axis1 = {"tau1", 0.0, 0.4, 2};
  spec.axis2 = {"tau2", 0.1, 0.5, 2};
  spec.spectrum.t_final = 50.0;
  const ScanGrid a = ode_scan(spec, 1);
  const ScanGrid b = ode_scan(spec, 2);
  REQUIRE(a.cells.size() == 4);
  CHECK(a.at(1, 0).param1 == 0.4);
  CHECK(a.at(1, 0).param2 == 0.1);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(a.cells[k].cls == b.cells[k].cls);
    REQUIRE(a.cells[k].exponents.size() == 4);
    CHECK(std::memcmp(a.cells[k].exponents.data(), b.cells[k].exponents.data(), 4 * sizeof(double)) == 0);
  }
  spec.axis2.name = "tau1";
  CHECK_THROWS_AS(ode_scan(spec), InvalidArgument);
  spec.axis2 = {"tau2", 0.0, 1.5, 2};
  CHECK_THROWS_AS(ode_scan(spec), InvalidArgument);
}
