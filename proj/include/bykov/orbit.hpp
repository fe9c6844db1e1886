#pragma once

// Orbits of the return map: iteration with Lyapunov exponents, rotation
// numbers, attractor classification, invariant manifolds of saddles and
// two-parameter scans.

#include <array>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "bykov/core_map.hpp"
#include "bykov/resonance.hpp"

namespace bykov {

enum class OrbitOutcome { Converged, Bounded, Escaped };

const char* to_string(OrbitOutcome o);

struct OrbitResult {
  LiftPoint final_point;
  /// Mean lift displacement per iterate over the measurement window.
  double displacement = 0.0;
  /// Per-iterate exponents, natural log, descending. NaN when the orbit
  /// escaped before the window was complete.
  std::array<double, 2> exponents{std::numeric_limits<double>::quiet_NaN(),
                                  std::numeric_limits<double>::quiet_NaN()};
  /// Orbit average of ln det(DF) over the window.
  double mean_log_det = std::numeric_limits<double>::quiet_NaN();
  OrbitOutcome outcome = OrbitOutcome::Bounded;
  /// First iterate index at which the domain was violated, -1 otherwise.
  int escape_iteration = -1;
};

/// Applies the return map n times. Exponents come from QR (Gram-Schmidt)
/// re-orthonormalisation of the tangent frame at every iterate after
/// `transient`. Throws InvalidArgument when n <= transient and DomainError
/// when p0 itself is outside the domain.
OrbitResult iterate(const LiftPoint& p0, const Params& mu, const MapConstants& c, int n,
                    int transient);

/// (x_n - x_0) / (2 pi n) in the lift. Throws on n <= 0 and propagates escape
/// as DomainError.
double rotation_number(const LiftPoint& p0, const Params& mu, const MapConstants& c, int n);

enum class AttractorClass { PeriodicSink, InvariantCircle, Chaotic, Escaped };

const char* to_string(AttractorClass a);

struct ClassifySettings {
  int iterations = 3000;
  int transient = 1000;
  /// Exponents within +-threshold of zero count as zero.
  double threshold = 5e-4;
};

struct AttractorReport {
  AttractorClass cls = AttractorClass::Escaped;
  std::array<double, 2> exponents{std::numeric_limits<double>::quiet_NaN(),
                                  std::numeric_limits<double>::quiet_NaN()};
  double rotation = std::numeric_limits<double>::quiet_NaN();
  int seeds_escaped = 0;
  /// Index of the seed whose orbit is reported.
  int representative = -1;
};

/// Class from the exponent pair alone.
AttractorClass classify_exponents(const std::array<double, 2>& exponents, double threshold);

/// Iterates every seed; the reported class is the majority class among the
/// surviving seeds (ties go to the earlier seed), and the exponents and
/// rotation number come from the first seed with that class.
AttractorReport classify_attractor(const Params& mu, const MapConstants& c,
                                   const std::vector<LiftPoint>& seeds,
                                   const ClassifySettings& settings = {});

/// `count` seeds on y = exp(-2 l pi delta / (K omega)), x = 2 pi k / count.
std::vector<LiftPoint> default_seeds(const Params& mu, const MapConstants& c, int ell, int count = 8);

// ---------------------------------------------------------------------------
// Invariant manifolds

enum class ManifoldSide { Unstable, Stable };

const char* to_string(ManifoldSide s);

struct ManifoldSettings {
  /// Number of images of the fundamental segment.
  int generations = 10;
  /// Maximum distance between consecutive points.
  double step_cap = 0.01;
  /// Distance of the fundamental segment from the saddle.
  double offset = 1e-6;
  /// +1 or -1: which half of the manifold.
  int orientation = 1;
  std::size_t max_points = 200000;
  double max_arclength = std::numeric_limits<double>::infinity();
};

struct ManifoldTrace {
  FixedPointRecord saddle;
  ManifoldSide side = ManifoldSide::Unstable;
  /// Starts at the saddle (lift coordinates, saddle x in [0, 2 pi)).
  std::vector<LiftPoint> points;
  double arclength = 0.0;
  /// Arclength of each image of the fundamental segment.
  std::vector<double> generation_arclength;
  std::array<double, 2> direction{};
  double multiplier = 0.0;
  /// Set when an iterate left the domain and the trace was cut short.
  bool truncated = false;
};

/// Grows one half of the stable or unstable manifold of a saddle (1, l)-fixed
/// point of F - (2 l pi, 0); the stable side uses the inverse map. Throws
/// InvalidArgument when `saddle` is not a saddle.
ManifoldTrace manifold_trace(const FixedPointRecord& saddle, const Params& mu, const MapConstants& c,
                             ManifoldSide side, const ManifoldSettings& settings = {});

/// Transversal crossings between two polylines, also against every 2 pi
/// translate of `b`; crossings within `exclusion` of the saddle (or its
/// translates) are ignored.
int count_crossings(const ManifoldTrace& a, const ManifoldTrace& b, double exclusion);

struct HomoclinicProbe {
  double omega = 0.0;
  /// -1 when no saddle exists at this omega.
  int crossings = -1;
};

struct HomoclinicBracket {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  int crossings_lo = 0;
  int crossings_hi = 0;
};

struct HomoclinicSweep {
  std::vector<HomoclinicProbe> probes;
  /// Consecutive probes where the crossing count switches between zero and non-zero.
  std::vector<HomoclinicBracket> brackets;
};

/// For each omega, traces both halves of both manifolds of the (1, l) saddle
/// and counts transversal crossings.
HomoclinicSweep homoclinic_sweep(double A, double lambda, const std::vector<double>& omegas, int ell,
                                 const MapConstants& c, const ManifoldSettings& settings = {},
                                 unsigned threads = 1);

// ---------------------------------------------------------------------------
// Two-parameter scans

struct ScanAxis {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  double value(int i) const {
    return count <= 1 ? min : min + (max - min) * static_cast<double>(i) / (count - 1);
  }
};

struct ScanCell {
  int i = 0;
  int j = 0;
  double param1 = 0.0;
  double param2 = 0.0;
  std::string cls;
  std::vector<double> exponents;
  double rotation = std::numeric_limits<double>::quiet_NaN();
  std::string flags;
};

/// Cells are row-major: index = i * axis2.count + j.
struct ScanGrid {
  ScanAxis axis1;
  ScanAxis axis2;
  std::map<std::string, double> fixed;
  std::vector<ScanCell> cells;

  const ScanCell& at(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * axis2.count + j];
  }
};

struct MapScanSpec {
  /// Each axis name is one of "A", "lambda", "omega".
  ScanAxis axis1;
  ScanAxis axis2;
  Params base;
  int ell = 1;
  ClassifySettings settings;
  int seed_count = 8;
  /// Appended to the default seeds of every cell.
  std::vector<LiftPoint> extra_seeds;
};

/// Fills every cell with classify_attractor; per-cell failures land in the
/// cell's flags. Output is independent of `threads`.
ScanGrid scan_map(const MapScanSpec& spec, const MapConstants& c, unsigned threads = 1);

/// Sets the named parameter ("A", "lambda" or "omega").
void set_param(Params& mu, const std::string& name, double value);

}  // namespace bykov
