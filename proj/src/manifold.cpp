#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "bykov/error.hpp"
#include "bykov/orbit.hpp"
#include "bykov/parallel.hpp"

namespace bykov {

const char* to_string(ManifoldSide s) { return s == ManifoldSide::Unstable ? "Unstable" : "Stable"; }

namespace {

double distance(const LiftPoint& a, const LiftPoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::array<double, 2> eigenvector(const Jacobian2& j, double m) {
  // Two candidate null vectors of J - m I; keep the better conditioned one.
  std::array<double, 2> u{j.a12, m - j.a11};
  std::array<double, 2> w{m - j.a22, j.a21};
  auto& v = std::hypot(u[0], u[1]) >= std::hypot(w[0], w[1]) ? u : w;
  const double n = std::hypot(v[0], v[1]);
  return {v[0] / n, v[1] / n};
}

struct Grower {
  const Params& mu;
  const MapConstants& c;
  LiftPoint origin;
  std::array<double, 2> dir;
  double shift;
  ManifoldSide side;
  int power;

  LiftPoint step(LiftPoint q) const {
    if (side == ManifoldSide::Unstable) {
      q = return_map(q, mu, c);
      q.x -= shift;
      return q;
    }
    q.x += shift;
    return inverse_return_map(q, mu, c);
  }

  // Image of the fundamental-segment point at parameter t after g generations.
  LiftPoint point(double t, int g) const {
    LiftPoint q{origin.x + t * dir[0], origin.y + t * dir[1]};
    for (int k = 0; k < g * power; ++k) q = step(q);
    return q;
  }
};

}  // namespace

ManifoldTrace manifold_trace(const FixedPointRecord& saddle, const Params& mu, const MapConstants& c,
                             ManifoldSide side, const ManifoldSettings& settings) {
  if (saddle.cls != StabilityClass::Saddle) {
    throw InvalidArgument(std::string("manifold_trace needs a saddle (got ") + to_string(saddle.cls) + ")");
  }
  if (!(settings.step_cap > 0.0) || !(settings.offset > 0.0) || settings.generations < 1) {
    throw InvalidArgument("manifold settings need step_cap > 0, offset > 0, generations >= 1");
  }
  ManifoldTrace out;
  out.saddle = saddle;
  out.side = side;
  const LiftPoint p = saddle.point();
  const Jacobian2 j = jacobian(p, mu, c);
  const auto ev = j.eigenvalues();
  const double m = side == ManifoldSide::Unstable ? ev[0].real() : ev[1].real();
  out.multiplier = m;
  auto dir = eigenvector(j, m);
  const double sign = settings.orientation >= 0 ? 1.0 : -1.0;
  dir = {sign * dir[0], sign * dir[1]};
  out.direction = dir;

  const int power = m < 0.0 ? 2 : 1;
  const double growth = std::pow(side == ManifoldSide::Unstable ? std::abs(m) : 1.0 / std::abs(m), power);
  Grower grow{mu, c, p, dir, 2.0 * saddle.ell * kPi, side, power};

  out.points.push_back(p);
  const double t0 = settings.offset;
  const double t1 = settings.offset * growth;

  struct Node {
    double t;
    LiftPoint q;
  };
  bool stop = false;
  for (int g = 0; g < settings.generations && !stop; ++g) {
    double gen_length = 0.0;
    try {
      Node a{t0, grow.point(t0, g)};
      const Node b{t1, grow.point(t1, g)};
      if (g == 0) {
        out.points.push_back(a.q);
        out.arclength += distance(p, a.q);
      }
      // Depth-first subdivision in t (geometric midpoints) until spacing <= cap.
      std::vector<Node> stack{b};
      while (!stack.empty()) {
        const Node next = stack.back();
        const double d = distance(a.q, next.q);
        if (d > settings.step_cap && next.t / a.t > 1.0 + 1e-13) {
          const double tm = std::sqrt(a.t * next.t);
          stack.push_back({tm, grow.point(tm, g)});
          continue;
        }
        stack.pop_back();
        out.points.push_back(next.q);
        out.arclength += d;
        gen_length += d;
        a = next;
        if (out.points.size() >= settings.max_points || out.arclength >= settings.max_arclength) {
          stop = true;
          break;
        }
      }
    } catch (const DomainError&) {
      out.truncated = true;
      stop = true;
    }
    out.generation_arclength.push_back(gen_length);
  }
  return out;
}

namespace {

double orient(const LiftPoint& a, const LiftPoint& b, const LiftPoint& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool proper_intersection(const LiftPoint& p1, const LiftPoint& p2, const LiftPoint& q1,
                         const LiftPoint& q2) {
  const double o1 = orient(p1, p2, q1);
  const double o2 = orient(p1, p2, q2);
  const double o3 = orient(q1, q2, p1);
  const double o4 = orient(q1, q2, p2);
  return ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) &&
         ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0));
}

struct Segment {
  LiftPoint a, b;
};

// Cuts a polyline into segments lying in the strip [0, 2 pi) x R.
std::vector<Segment> to_strip(const std::vector<LiftPoint>& pts) {
  std::vector<Segment> out;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    LiftPoint a = pts[k - 1];
    const LiftPoint b = pts[k];
    double ka = std::floor(a.x / kTwoPi);
    const double kb = std::floor(b.x / kTwoPi);
    // Walk across every seam between a and b.
    while (ka != kb) {
      const double seam = kb > ka ? (ka + 1.0) * kTwoPi : ka * kTwoPi;
      const double t = (seam - a.x) / (b.x - a.x);
      const LiftPoint s{seam, a.y + t * (b.y - a.y)};
      const double base = ka * kTwoPi;
      out.push_back({{a.x - base, a.y}, {s.x - base, s.y}});
      a = s;
      ka += kb > ka ? 1.0 : -1.0;
    }
    const double base = ka * kTwoPi;
    out.push_back({{a.x - base, a.y}, {b.x - base, b.y}});
  }
  return out;
}

}  // namespace

int count_crossings(const ManifoldTrace& a, const ManifoldTrace& b, double exclusion) {
  const auto sa = to_strip(a.points);
  const auto sb = to_strip(b.points);
  if (sa.empty() || sb.empty()) return 0;
  const LiftPoint center = reduce(a.saddle.point());
  auto near_saddle = [&](const Segment& s) {
    auto close = [&](const LiftPoint& q) {
      for (double off : {-kTwoPi, 0.0, kTwoPi}) {
        if (std::hypot(q.x - center.x - off, q.y - center.y) < exclusion) return true;
      }
      return false;
    };
    return close(s.a) || close(s.b);
  };
  double cell = 0.0;
  for (const auto& s : sb) cell = std::max(cell, distance(s.a, s.b));
  cell = std::max(cell, 1e-6);
  auto key = [](std::int64_t i, std::int64_t j) { return (i << 32) ^ (j & 0xffffffff); };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
  for (std::size_t k = 0; k < sb.size(); ++k) {
    const auto& s = sb[k];
    const auto i0 = static_cast<std::int64_t>(std::floor(std::min(s.a.x, s.b.x) / cell));
    const auto i1 = static_cast<std::int64_t>(std::floor(std::max(s.a.x, s.b.x) / cell));
    const auto j0 = static_cast<std::int64_t>(std::floor(std::min(s.a.y, s.b.y) / cell));
    const auto j1 = static_cast<std::int64_t>(std::floor(std::max(s.a.y, s.b.y) / cell));
    for (auto i = i0; i <= i1; ++i) {
      for (auto jj = j0; jj <= j1; ++jj) buckets[key(i, jj)].push_back(k);
    }
  }
  int count = 0;
  std::vector<std::size_t> candidates;
  for (const auto& s : sa) {
    if (near_saddle(s)) continue;
    candidates.clear();
    const auto i0 = static_cast<std::int64_t>(std::floor(std::min(s.a.x, s.b.x) / cell));
    const auto i1 = static_cast<std::int64_t>(std::floor(std::max(s.a.x, s.b.x) / cell));
    const auto j0 = static_cast<std::int64_t>(std::floor(std::min(s.a.y, s.b.y) / cell));
    const auto j1 = static_cast<std::int64_t>(std::floor(std::max(s.a.y, s.b.y) / cell));
    for (auto i = i0; i <= i1; ++i) {
      for (auto jj = j0; jj <= j1; ++jj) {
        const auto it = buckets.find(key(i, jj));
        if (it != buckets.end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::size_t k : candidates) {
      if (near_saddle(sb[k])) continue;
      if (proper_intersection(s.a, s.b, sb[k].a, sb[k].b)) ++count;
    }
  }
  return count;
}

HomoclinicSweep homoclinic_sweep(double A, double lambda, const std::vector<double>& omegas, int ell,
                                 const MapConstants& c, const ManifoldSettings& settings,
                                 unsigned threads) {
  HomoclinicSweep sweep;
  sweep.probes.resize(omegas.size());
  parallel_for(omegas.size(), threads, [&](std::size_t k) {
    HomoclinicProbe& probe = sweep.probes[k];
    probe.omega = omegas[k];
    const Params mu{A, lambda, omegas[k]};
    std::vector<FixedPointRecord> fps;
    try {
      fps = fixed_points(mu, c, ell);
    } catch (const Error&) {
      return;
    }
    const auto it = std::find_if(fps.begin(), fps.end(),
                                 [](const FixedPointRecord& r) { return r.cls == StabilityClass::Saddle; });
    if (it == fps.end()) return;
    int total = 0;
    for (int ou : {1, -1}) {
      ManifoldSettings su = settings;
      su.orientation = ou;
      const ManifoldTrace wu = manifold_trace(*it, mu, c, ManifoldSide::Unstable, su);
      for (int os : {1, -1}) {
        ManifoldSettings ss = settings;
        ss.orientation = os;
        const ManifoldTrace ws = manifold_trace(*it, mu, c, ManifoldSide::Stable, ss);
        total += count_crossings(wu, ws, 10.0 * settings.step_cap);
      }
    }
    probe.crossings = total;
  });
  for (std::size_t k = 1; k < sweep.probes.size(); ++k) {
    const auto& lo = sweep.probes[k - 1];
    const auto& hi = sweep.probes[k];
    if (lo.crossings < 0 || hi.crossings < 0) continue;
    if ((lo.crossings == 0) != (hi.crossings == 0)) {
      sweep.brackets.push_back({lo.omega, hi.omega, lo.crossings, hi.crossings});
    }
  }
  return sweep;
}

}  // namespace bykov
