#include "bykov/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bykov/error.hpp"
#include "bykov/parallel.hpp"

namespace bykov {

const char* to_string(OrbitOutcome o) {
  switch (o) {
    case OrbitOutcome::Converged: return "Converged";
    case OrbitOutcome::Bounded: return "Bounded";
    case OrbitOutcome::Escaped: return "Escaped";
  }
  return "?";
}

const char* to_string(AttractorClass a) {
  switch (a) {
    case AttractorClass::PeriodicSink: return "PeriodicSink";
    case AttractorClass::InvariantCircle: return "InvariantCircle";
    case AttractorClass::Chaotic: return "Chaotic";
    case AttractorClass::Escaped: return "Escaped";
  }
  return "?";
}

OrbitResult iterate(const LiftPoint& p0, const Params& mu, const MapConstants& c, int n,
                    int transient) {
  if (transient < 0 || n <= transient) {
    throw InvalidArgument("empty measurement window: need n > transient >= 0 (n = " +
                          std::to_string(n) + ", transient = " + std::to_string(transient) + ")");
  }
  // Domain violation at the seed itself is an error, not an outcome.
  (void)return_map(p0, mu, c);

  OrbitResult out;
  LiftPoint p = p0;
  std::array<double, 2> q1{1.0, 0.0};
  std::array<double, 2> q2{0.0, 1.0};
  double sum1 = 0.0, sum2 = 0.0, sum_det = 0.0;
  double x_start = p0.x;
  double last_dx = 0.0, prev_dx = 0.0, last_dy = 0.0;
  for (int k = 0; k < n; ++k) {
    LiftPoint next;
    Jacobian2 j;
    try {
      next = return_map(p, mu, c);
      j = jacobian(p, mu, c);
    } catch (const DomainError&) {
      out.final_point = p;
      out.outcome = OrbitOutcome::Escaped;
      out.escape_iteration = k;
      return out;
    }
    if (k == transient) x_start = p.x;
    if (k >= transient) {
      auto v1 = j.apply(q1);
      const double r11 = std::hypot(v1[0], v1[1]);
      q1 = {v1[0] / r11, v1[1] / r11};
      auto v2 = j.apply(q2);
      const double proj = q1[0] * v2[0] + q1[1] * v2[1];
      v2 = {v2[0] - proj * q1[0], v2[1] - proj * q1[1]};
      const double r22 = std::hypot(v2[0], v2[1]);
      q2 = {v2[0] / r22, v2[1] / r22};
      sum1 += std::log(r11);
      sum2 += std::log(r22);
      sum_det += std::log(std::abs(j.det()));
    }
    prev_dx = last_dx;
    last_dx = next.x - p.x;
    last_dy = next.y - p.y;
    p = next;
  }
  const double m = static_cast<double>(n - transient);
  out.final_point = p;
  out.displacement = (p.x - x_start) / m;
  out.exponents = {sum1 / m, sum2 / m};
  if (out.exponents[1] > out.exponents[0]) std::swap(out.exponents[0], out.exponents[1]);
  out.mean_log_det = sum_det / m;
  const bool settled = n >= 2 && std::abs(last_dx - prev_dx) < 1e-9 && std::abs(last_dy) < 1e-9;
  out.outcome = settled ? OrbitOutcome::Converged : OrbitOutcome::Bounded;
  return out;
}

double rotation_number(const LiftPoint& p0, const Params& mu, const MapConstants& c, int n) {
  if (n <= 0) throw InvalidArgument("rotation number needs n > 0 iterates");
  LiftPoint p = p0;
  for (int k = 0; k < n; ++k) p = return_map(p, mu, c);
  return (p.x - p0.x) / (kTwoPi * n);
}

AttractorClass classify_exponents(const std::array<double, 2>& e, double threshold) {
  if (e[0] > threshold) return AttractorClass::Chaotic;
  if (e[0] < -threshold) return AttractorClass::PeriodicSink;
  // A neutral leading exponent; a neutral second one as well (e.g. a circle
  // of fixed points at lambda = 0 with weak contraction) is still a circle.
  return AttractorClass::InvariantCircle;
}

AttractorReport classify_attractor(const Params& mu, const MapConstants& c,
                                   const std::vector<LiftPoint>& seeds,
                                   const ClassifySettings& settings) {
  if (seeds.empty()) throw InvalidArgument("classify_attractor needs at least one seed");
  struct SeedOutcome {
    bool alive = false;
    AttractorClass cls = AttractorClass::Escaped;
    OrbitResult orbit;
  };
  std::vector<SeedOutcome> runs(seeds.size());
  AttractorReport report;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    try {
      runs[k].orbit = iterate(seeds[k], mu, c, settings.iterations, settings.transient);
    } catch (const DomainError&) {
      ++report.seeds_escaped;
      continue;
    }
    if (runs[k].orbit.outcome == OrbitOutcome::Escaped) {
      ++report.seeds_escaped;
      continue;
    }
    runs[k].alive = true;
    runs[k].cls = classify_exponents(runs[k].orbit.exponents, settings.threshold);
  }
  std::array<int, 3> votes{};
  std::array<int, 3> first{-1, -1, -1};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (!runs[k].alive) continue;
    const auto idx = static_cast<std::size_t>(runs[k].cls);
    ++votes[idx];
    if (first[idx] < 0) first[idx] = static_cast<int>(k);
  }
  int best = -1;
  for (int cls = 0; cls < 3; ++cls) {
    if (votes[cls] == 0) continue;
    if (best < 0 || votes[cls] > votes[best] ||
        (votes[cls] == votes[best] && first[cls] < first[best])) {
      best = cls;
    }
  }
  if (best < 0) {
    report.cls = AttractorClass::Escaped;
    return report;
  }
  const auto& rep = runs[static_cast<std::size_t>(first[best])];
  report.cls = static_cast<AttractorClass>(best);
  report.exponents = rep.orbit.exponents;
  report.rotation = rep.orbit.displacement / kTwoPi;
  report.representative = first[best];
  return report;
}

std::vector<LiftPoint> default_seeds(const Params& mu, const MapConstants& c, int ell, int count) {
  if (count < 1) throw InvalidArgument("seed count must be positive");
  if (!(mu.omega > 0.0)) throw InvalidArgument("omega must be positive");
  const double y = std::exp(-2.0 * ell * kPi * c.delta / (c.K * mu.omega));
  std::vector<LiftPoint> seeds;
  seeds.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) seeds.push_back({kTwoPi * k / count, y});
  return seeds;
}

void set_param(Params& mu, const std::string& name, double value) {
  if (name == "A") {
    mu.A = value;
  } else if (name == "lambda") {
    mu.lambda = value;
  } else if (name == "omega") {
    mu.omega = value;
  } else {
    throw InvalidArgument("unknown map parameter '" + name + "' (expected A, lambda or omega)");
  }
}

ScanGrid scan_map(const MapScanSpec& spec, const MapConstants& c, unsigned threads) {
  if (spec.axis1.count < 1 || spec.axis2.count < 1) throw InvalidArgument("scan axes need count >= 1");
  if (spec.axis1.min > spec.axis1.max || spec.axis2.min > spec.axis2.max) {
    throw InvalidArgument("scan axes need min <= max");
  }
  if (spec.axis1.name == spec.axis2.name) throw InvalidArgument("scan axes must differ");
  {
    Params probe = spec.base;
    set_param(probe, spec.axis1.name, spec.axis1.min);
    set_param(probe, spec.axis2.name, spec.axis2.min);
  }
  ScanGrid grid;
  grid.axis1 = spec.axis1;
  grid.axis2 = spec.axis2;
  for (const char* name : {"A", "lambda", "omega"}) {
    if (name != spec.axis1.name && name != spec.axis2.name) {
      const std::string n(name);
      grid.fixed[n] = n == "A" ? spec.base.A : (n == "lambda" ? spec.base.lambda : spec.base.omega);
    }
  }
  grid.fixed["ell"] = spec.ell;
  grid.fixed["delta"] = c.delta;
  grid.fixed["K"] = c.K;
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
    Params mu = spec.base;
    set_param(mu, spec.axis1.name, cell.param1);
    set_param(mu, spec.axis2.name, cell.param2);
    try {
      auto seeds = default_seeds(mu, c, spec.ell, spec.seed_count);
      seeds.insert(seeds.end(), spec.extra_seeds.begin(), spec.extra_seeds.end());
      const AttractorReport r = classify_attractor(mu, c, seeds, spec.settings);
      cell.cls = to_string(r.cls);
      cell.exponents = {r.exponents[0], r.exponents[1]};
      cell.rotation = r.rotation;
      if (r.seeds_escaped > 0) cell.flags = "seeds_escaped=" + std::to_string(r.seeds_escaped);
    } catch (const std::exception& e) {
      cell.cls = "Failed";
      cell.exponents = {std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      cell.flags = "error=" + msg;
    }
  });
  return grid;
}

}  // namespace bykov
