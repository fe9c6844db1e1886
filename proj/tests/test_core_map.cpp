#include <cmath>
#include <random>

#include "bykov/core_map.hpp"
#include "bykov/error.hpp"
#include "doctest.h"

using namespace bykov;

namespace {

// Random admissible point: s = y + A + lambda sin x in (0, 1], |y| <= 1.
struct Sampler {
  std::mt19937_64 rng{12345};
  std::uniform_real_distribution<double> u{0.0, 1.0};

  Params params() { return {0.05 + 0.3 * u(rng), 0.05 * u(rng), 0.5 + 10.0 * u(rng)}; }

  LiftPoint point(const Params& mu) {
    for (;;) {
      const LiftPoint p{-10.0 + 20.0 * u(rng), 0.6 * u(rng)};
      const double s = p.y + mu.A + mu.lambda * std::sin(p.x);
      if (s > 1e-3 && s <= 1.0) return p;
    }
  }
};

}  // namespace

TEST_CASE("derive_constants reproduces the symmetric saddle example") {
  const MapConstants c = derive_constants({1.1, 0.9, 1.1, 0.9, 1.0});
  CHECK(c.delta1 == doctest::Approx(1.1 / 0.9).epsilon(1e-15));
  CHECK(c.delta == doctest::Approx(1.4938271604938).epsilon(1e-12));
  CHECK(c.K == doctest::Approx(2.0 / 0.81).epsilon(1e-14));
  CHECK(c.M > 0.0);
  CHECK(c.M < 1.0);
}

TEST_CASE("delta <= 1 is rejected as not weakly attracting") {
  CHECK_THROWS_WITH_AS(derive_constants({1.0, 2.0, 2.0, 1.0, 1.0}), doctest::Contains("not weakly attracting"),
                       InvalidArgument);
  CHECK_THROWS_AS(MapConstants::from_delta(0.9, 1.0), InvalidArgument);
  CHECK_THROWS_AS(derive_constants({-1.0, 1.0, 2.0, 1.0, 1.0}), InvalidArgument);
}

TEST_CASE("M for delta = 3 matches a brute-force maximum of t - t^delta") {
  // M is the maximum over t in (0,1) of t - t^delta; scan it directly.
  const double delta = 3.0;
  double best = 0.0;
  for (int k = 1; k < 200000; ++k) {
    const double t = k / 200000.0;
    best = std::max(best, t - std::pow(t, delta));
  }
  CHECK(max_splitting(delta) == doctest::Approx(best).epsilon(1e-9));
  CHECK(max_splitting(delta) == doctest::Approx(0.384900179459750).epsilon(1e-13));
}

TEST_CASE("factor maps") {
  const MapConstants c = derive_constants({2.0, 1.0, 2.0, 1.0, 1.0});
  const Params mu{0.3, 0.05, 1.0};

  SUBCASE("Phi1 at (0, 1) is (r = 1, phi = 0)") {
    const LiftPoint q = factor_map(Stage::Phi1, {0.0, 1.0}, mu, c);
    CHECK(q.x == 1.0);
    CHECK(q.y == 0.0);
  }
  SUBCASE("Psi21 adds the splitting") {
    const LiftPoint q = factor_map(Stage::Psi21, {kPi / 2, 0.1}, {0.3, 0.05, 1.0}, c);
    CHECK(q.x == kPi / 2);
    CHECK(q.y == doctest::Approx(0.45).epsilon(1e-15));
  }
  SUBCASE("Eta at (0, 1/e) with delta = 4, K = 3") {
    CHECK(c.delta == 4.0);
    CHECK(c.K == 3.0);
    const LiftPoint q = factor_map(Stage::Eta, {0.0, std::exp(-1.0)}, mu, c);
    CHECK(q.x == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(q.y == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
    // Composing the local and global stages by hand gives the same point.
    const LiftPoint two = factor_map(Stage::Phi2, factor_map(Stage::Phi1, {0.0, std::exp(-1.0)}, mu, c), mu, c);
    CHECK(two.x == doctest::Approx(q.x).epsilon(1e-14));
    CHECK(two.y == doctest::Approx(q.y).epsilon(1e-14));
  }
  SUBCASE("logarithmic stages reject non-positive radii") {
    CHECK_THROWS_AS(factor_map(Stage::Eta, {0.0, 0.0}, mu, c), DomainError);
    CHECK_THROWS_AS(factor_map(Stage::Phi1, {0.0, -0.2}, mu, c), DomainError);
  }
}

TEST_CASE("return map examples") {
  SUBCASE("rigid rotation") {
    const MapConstants c = MapConstants::from_delta(2.0, 1.0);
    const LiftPoint q = return_map({0.0, std::exp(-2.0 * kPi)}, {0.0, 0.0, 1.0}, c);
    CHECK(q.x == doctest::Approx(2.0 * kPi).epsilon(1e-15));
    CHECK(q.y == doctest::Approx(std::exp(-4.0 * kPi)).epsilon(1e-14));
  }
  SUBCASE("sink fixed point advances by exactly 2 pi") {
    const MapConstants c = MapConstants::from_delta(3.0, 1.0);
    const Params mu{0.35, 0.05, 8.0};
    // Closed form: y = e^(-2 pi delta/(K omega)), sin x = (e^(-2 pi/(K omega)) - y - A)/lambda.
    const double y = std::exp(-2.0 * kPi * 3.0 / 8.0);
    const LiftPoint p{std::asin((std::exp(-2.0 * kPi / 8.0) - y - 0.35) / 0.05), y};
    const LiftPoint q = return_map(p, mu, c);
    CHECK(std::abs(q.x - p.x - 2.0 * kPi) < 1e-9);
    CHECK(std::abs(q.y - p.y) < 1e-9);
    CHECK(std::abs(p.x - 0.225076) < 5e-5);
    CHECK(std::abs(p.y - 0.094779) < 5e-6);
  }
  SUBCASE("s <= 0 leaves the domain and carries s") {
    const MapConstants c = MapConstants::from_delta(3.0, 1.0);
    try {
      return_map({1.5 * kPi, -0.01}, {0.01, 0.005, 1.0}, c);
      FAIL("expected a domain error");
    } catch (const DomainError& e) {
      CHECK(e.value() == doctest::Approx(-0.005).epsilon(1e-12));
    }
  }
  SUBCASE("|y| > 1 is outside the section") {
    const MapConstants c = MapConstants::from_delta(3.0, 1.0);
    CHECK_THROWS_AS(return_map({0.0, 1.5}, {0.1, 0.0, 1.0}, c), DomainError);
  }
}

TEST_CASE("composition identity and exponent algebra on random points") {
  Sampler s;
  const MapConstants c = derive_constants({1.7, 0.8, 1.5, 1.1, 1.0});
  for (int k = 0; k < 10000; ++k) {
    const Params mu = s.params();
    const LiftPoint p = s.point(mu);
    const LiftPoint direct = return_map(p, mu, c);
    const LiftPoint composed = factor_map(Stage::Eta, factor_map(Stage::Psi21, p, mu, c), mu, c);
    REQUIRE(std::abs(direct.x - composed.x) <= 1e-12 * std::max(1.0, std::abs(direct.x)));
    REQUIRE(std::abs(direct.y - composed.y) <= 1e-12);
  }
  // Both K expressions of the notation section coincide.
  const SaddleValues sv{1.7, 0.8, 1.5, 1.1, 1.0};
  CHECK(c.K == doctest::Approx((sv.E2 + sv.C1) / (sv.E1 * sv.E2)).epsilon(1e-15));
  CHECK(c.delta == doctest::Approx((sv.C1 / sv.E1) * (sv.C2 / sv.E2)).epsilon(1e-15));
}

TEST_CASE("inverse map undoes the return map") {
  Sampler s;
  const MapConstants c = MapConstants::from_delta(3.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const Params mu = s.params();
    const LiftPoint p = s.point(mu);
    const LiftPoint back = inverse_return_map(return_map(p, mu, c), mu, c);
    REQUIRE(back.x == doctest::Approx(p.x).epsilon(1e-9));
    REQUIRE(std::abs(back.y - p.y) < 1e-9);
  }
}

TEST_CASE("Jacobian against central differences") {
  Sampler s;
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const Params mu = s.params();
    const LiftPoint p = s.point(mu);
    const Jacobian2 j = jacobian(p, mu, c);
    const double h = 1e-6;
    const LiftPoint fxp = return_map({p.x + h, p.y}, mu, c), fxm = return_map({p.x - h, p.y}, mu, c);
    const LiftPoint fyp = return_map({p.x, p.y + h}, mu, c), fym = return_map({p.x, p.y - h}, mu, c);
    const double fd[4] = {(fxp.x - fxm.x) / (2 * h), (fyp.x - fym.x) / (2 * h), (fxp.y - fxm.y) / (2 * h),
                          (fyp.y - fym.y) / (2 * h)};
    const double an[4] = {j.a11, j.a12, j.a21, j.a22};
    double scale = 0.0;
    for (double v : an) scale = std::max(scale, std::abs(v));
    for (int e = 0; e < 4; ++e) worst = std::max(worst, std::abs(fd[e] - an[e]) / scale);
    // det simplifies to delta s^(delta-1) and stays positive.
    const double sr = section_radius(p, mu);
    REQUIRE(j.det() == doctest::Approx(c.delta * std::pow(sr, c.delta - 1.0)).epsilon(1e-10));
    REQUIRE(j.det() > 0.0);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Jacobian special cases") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  const Jacobian2 j0 = jacobian({1.0, 0.2}, {0.3, 0.0, 4.0}, c);
  CHECK(j0.a11 == 1.0);
  CHECK(j0.a21 == 0.0);
  const Jacobian2 j = jacobian({0.22505303341339447, 0.094780224842154856}, {0.35, 0.05, 8.0}, c);
  CHECK(j.det() == doctest::Approx(0.623639).epsilon(1e-6));
  CHECK(j.trace() == doctest::Approx(0.768451).epsilon(1e-6));
  const auto ev = j.eigenvalues();
  // Eigenvalues solve t^2 - tr t + det = 0.
  for (const auto& z : ev) CHECK(std::abs(z * z - j.trace() * z + j.det()) < 1e-14);
}

TEST_CASE("the y-component contracts below the dissipativity threshold") {
  Sampler s;
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  const double threshold = std::pow(c.delta, 1.0 / (1.0 - c.delta));
  for (int k = 0; k < 2000; ++k) {
    Params mu = s.params();
    mu.A *= 0.3;
    mu.lambda *= 0.3;
    const LiftPoint p{s.u(s.rng) * kTwoPi, 0.05 * s.u(s.rng)};
    const double sr = section_radius(p, mu);
    if (!(sr > 0.0 && sr < threshold)) continue;
    REQUIRE(std::abs(jacobian(p, mu, c).a22) < 1.0);
  }
}

TEST_CASE("parameter set membership and reductions") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  CHECK(in_parameter_set({0.2, 0.1, 5.0}, c));
  CHECK_FALSE(in_parameter_set({0.1, 0.2, 5.0}, c));
  CHECK_FALSE(in_parameter_set({0.35, 0.05, 5.0}, c));  // A + lambda > M
  CHECK(reduce_angle(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(reduce_angle(4.0 * kPi + 1.0) == doctest::Approx(1.0));
  const LiftPoint r = reduce({7.0, 0.3});
  CHECK(r.x == doctest::Approx(7.0 - kTwoPi));
  CHECK(r.y == 0.3);
  CHECK(return_map_reduced({0.1, 0.2}, {0.3, 0.05, 2.0}, c).x < kTwoPi);
}
