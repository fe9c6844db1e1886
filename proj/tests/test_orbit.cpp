#include <cmath>
#include <cstring>

#include "bykov/error.hpp"
#include "bykov/orbit.hpp"
#include "doctest.h"

using namespace bykov;

namespace {

const FixedPointRecord* find_class(const std::vector<FixedPointRecord>& fps, StabilityClass cls) {
  for (const auto& f : fps)
    if (f.cls == cls) return &f;
  return nullptr;
}

}  // namespace

TEST_CASE("orbit near the focus sink has both exponents equal to half log det") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  const Params mu{0.35, 0.05, 8.0};
  const auto fps = fixed_points(mu, c, 1);
  const FixedPointRecord* sink = find_class(fps, StabilityClass::SinkFocus);
  REQUIRE(sink != nullptr);
  const OrbitResult r = iterate({sink->x + 0.01, sink->y}, mu, c, 4000, 1000);
  CHECK(r.outcome == OrbitOutcome::Converged);
  CHECK(r.exponents[0] == doctest::Approx(0.5 * std::log(0.623639)).epsilon(1e-5));
  CHECK(r.exponents[1] == doctest::Approx(0.5 * std::log(0.623639)).epsilon(1e-5));
  CHECK(r.displacement / kTwoPi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rotation_number({sink->x, sink->y}, mu, c, 50) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("exponent sum equals the orbit mean of log det") {
  const MapConstants c = MapConstants::from_delta(3.0, 2.0);
  for (const Params& mu : {Params{0.1, 0.05, 2.0}, Params{0.05, 0.1, 9.0}, Params{0.3, 0.02, 1.0}}) {
    const OrbitResult r = iterate(default_seeds(mu, c, 1, 1)[0], mu, c, 3000, 500);
    if (r.outcome == OrbitOutcome::Escaped) continue;
    CHECK(std::abs(r.exponents[0] + r.exponents[1] - r.mean_log_det) < 1e-8);
    CHECK(r.exponents[0] >= r.exponents[1]);
  }
}

TEST_CASE("iterate rejects empty windows and bad seeds") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  const Params mu{0.2, 0.05, 5.0};
  CHECK_THROWS_AS(iterate({0.0, 0.1}, mu, c, 100, 100), InvalidArgument);
  CHECK_THROWS_AS(iterate({0.0, 0.1}, mu, c, 100, -1), InvalidArgument);
  CHECK_THROWS_AS(iterate({0.0, 2.0}, mu, c, 100, 10), DomainError);
  CHECK_THROWS_AS(rotation_number({0.0, 0.1}, mu, c, 0), InvalidArgument);
}

TEST_CASE("an orbit leaving the domain is reported as escaped") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  // s = y + A + lambda sin x with A < lambda: the orbit falls into s <= 0 at some point.
  const Params mu{0.001, 0.05, 3.0};
  bool any_escape = false;
  for (const auto& seed : default_seeds(mu, c, 1, 8)) {
    try {
      const OrbitResult r = iterate(seed, mu, c, 2000, 100);
      if (r.outcome == OrbitOutcome::Escaped) {
        any_escape = true;
        CHECK(r.escape_iteration >= 0);
        CHECK(std::isnan(r.exponents[0]));
      }
    } catch (const DomainError&) {
      any_escape = true;
    }
  }
  CHECK(any_escape);
}

TEST_CASE("attractor classes") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  CHECK(classify_exponents({-0.1, -0.2}, 5e-4) == AttractorClass::PeriodicSink);
  CHECK(classify_exponents({1e-5, -0.2}, 5e-4) == AttractorClass::InvariantCircle);
  CHECK(classify_exponents({0.02, -0.3}, 5e-4) == AttractorClass::Chaotic);
  CHECK(classify_exponents({0.0, 0.0}, 5e-4) == AttractorClass::InvariantCircle);

  SUBCASE("sink inside the wedge") {
    const Params mu{0.35, 0.05, 8.0};
    const AttractorReport r = classify_attractor(mu, c, default_seeds(mu, c, 1));
    CHECK(r.cls == AttractorClass::PeriodicSink);
    CHECK(r.rotation == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("unperturbed system: every orbit rotates rigidly on y = y*") {
    const Params mu{0.2, 0.0, 4.0};
    const AttractorReport r = classify_attractor(mu, c, default_seeds(mu, c, 1, 3));
    CHECK(r.cls == AttractorClass::InvariantCircle);
    CHECK(std::abs(r.exponents[0]) < 5e-4);
    CHECK(r.exponents[1] < -0.1);
  }
  SUBCASE("majority vote ties go to the earliest seed; all escaped is Escaped") {
    const Params mu{0.35, 0.05, 8.0};
    const AttractorReport r = classify_attractor(mu, c, {LiftPoint{0.0, 0.1}, LiftPoint{0.0, 3.0}});
    CHECK(r.seeds_escaped == 1);
    CHECK(r.representative == 0);
    const AttractorReport none = classify_attractor(mu, c, {LiftPoint{0.0, 3.0}});
    CHECK(none.cls == AttractorClass::Escaped);
    CHECK_THROWS_AS(classify_attractor(mu, c, {}), InvalidArgument);
  }
}

TEST_CASE("default seeds lie on the fixed-point height") {
  const MapConstants c = MapConstants::from_delta(3.0, 2.0);
  const auto seeds = default_seeds({0.2, 0.05, 4.0}, c, 1, 4);
  REQUIRE(seeds.size() == 4);
  CHECK(seeds[1].x == doctest::Approx(kPi / 2));
  CHECK(seeds[0].y == doctest::Approx(std::exp(-2.0 * kPi * 3.0 / 8.0)));
}

TEST_CASE("unstable manifold leaves along the eigenvector and grows by the multiplier") {
  const MapConstants c = MapConstants::from_delta(3.0, 1.0);
  const Params mu{0.35, 0.05, 8.0};
  const FixedPointRecord* saddle = find_class(fixed_points(mu, c, 1), StabilityClass::Saddle);
  REQUIRE(saddle != nullptr);
  ManifoldSettings s;
  s.generations = 4;
  s.offset = 1e-7;
  const ManifoldTrace t = manifold_trace(*saddle, mu, c, ManifoldSide::Unstable, s);
  REQUIRE(t.points.size() > 3);
  // The eigenvector from finite differences of the map.
  const double h = 1e-7;
  const LiftPoint p = saddle->point();
  const LiftPoint fx = return_map({p.x + h, p.y}, mu, c), fy = return_map({p.x, p.y + h}, mu, c);
  const LiftPoint f0 = return_map(p, mu, c);
  const double a = (fx.x - f0.x) / h, b = (fy.x - f0.x) / h, cc = (fx.y - f0.y) / h, d = (fy.y - f0.y) / h;
  const double tr = a + d, det = a * d - b * cc;
  const double m = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  CHECK(t.multiplier == doctest::Approx(m).epsilon(1e-5));
  // Eigenvector (b, m - a), compared up to sign through the cross product.
  const double ex = b, ey = m - a, en = std::hypot(ex, ey);
  const double dx = t.points[1].x - t.points[0].x, dy = t.points[1].y - t.points[0].y;
  CHECK(std::abs(dx * ey - dy * ex) / (en * std::hypot(dx, dy)) < 1e-4);
  REQUIRE(t.generation_arclength.size() == 4);
  const double growth = m < 0 ? m * m : m;
  CHECK(t.generation_arclength[1] / t.generation_arclength[0] == doctest::Approx(growth).epsilon(1e-3));

  const ManifoldTrace st = manifold_trace(*saddle, mu, c, ManifoldSide::Stable, s);
  CHECK(std::abs(st.multiplier) < 1.0);
  CHECK_THROWS_AS(manifold_trace(*find_class(fixed_points(mu, c, 1), StabilityClass::SinkFocus), mu, c,
                                 ManifoldSide::Unstable),
                  InvalidArgument);
}

TEST_CASE("crossing counter on hand-made polylines") {
  ManifoldTrace a, b;
  a.saddle.x = 0.0;
  a.saddle.y = 0.0;
  b.saddle = a.saddle;
  a.points = {{1.0, 0.1}, {2.0, 0.3}};
  b.points = {{1.0, 0.3}, {2.0, 0.1}};
  CHECK(count_crossings(a, b, 1e-3) == 1);
  // A 2 pi translate of b crosses as well.
  b.points = {{1.0 + kTwoPi, 0.3}, {2.0 + kTwoPi, 0.1}};
  CHECK(count_crossings(a, b, 1e-3) == 1);
  // Crossings inside the exclusion disc around the saddle are ignored.
  a.points = {{-0.1, -0.1}, {0.1, 0.1}};
  b.points = {{-0.1, 0.1}, {0.1, -0.1}};
  CHECK(count_crossings(a, b, 0.05) == 0);
}

TEST_CASE("map scan: row-major cells, identical across thread counts") {
  const MapConstants c = MapConstants::from_delta(3.0, 2.0);
  MapScanSpec spec;
  spec.axis1 = {"omega", 1.0, 8.0, 3};
  spec.axis2 = {"A", 0.05, 0.3, 4};
  spec.base = {0.0, 0.1, 0.0};
  spec.settings.iterations = 800;
  spec.settings.transient = 200;
  const ScanGrid g1 = scan_map(spec, c, 1);
  const ScanGrid g3 = scan_map(spec, c, 3);
  REQUIRE(g1.cells.size() == 12);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      const ScanCell& cell = g1.at(i, j);
      CHECK(cell.i == i);
      CHECK(cell.j == j);
      CHECK(cell.param1 == spec.axis1.value(i));
      CHECK(cell.param2 == spec.axis2.value(j));
    }
  }
  for (std::size_t k = 0; k < g1.cells.size(); ++k) {
    CHECK(g1.cells[k].cls == g3.cells[k].cls);
    CHECK(std::memcmp(g1.cells[k].exponents.data(), g3.cells[k].exponents.data(), 2 * sizeof(double)) == 0);
  }
  CHECK(g1.fixed.at("lambda") == 0.1);
  spec.axis2.name = "omega";
  CHECK_THROWS_AS(scan_map(spec, c), InvalidArgument);
  spec.axis2.name = "tau";
  CHECK_THROWS_AS(scan_map(spec, c), InvalidArgument);
}
