#pragma once

// Shared generators and brute-force oracles for the unit and acceptance
// suites. Nothing here calls into the routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "densetrack/association.hpp"
#include "densetrack/geometry.hpp"

namespace densetrack::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec2 random_in_disc(Rng& rng, double radius) {
  const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
  const double a = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return {r * std::cos(a), r * std::sin(a)};
}

inline Vec2 random_unit(Rng& rng) {
  const double a = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return {std::cos(a), std::sin(a)};
}

// Random strictly convex polygon: sorted angles on a random rotated ellipse.
inline ConvexPolygon random_convex_polygon(Rng& rng, Vec2 center, double min_size, double max_size,
                                           int min_vertices = 3, int max_vertices = 12) {
  const int n = std::uniform_int_distribution<int>(min_vertices, max_vertices)(rng);
  std::vector<double> angles;
  for (;;) {
    angles.clear();
    for (int i = 0; i < n; ++i) angles.push_back(uniform(rng, 0.0, 2.0 * std::numbers::pi));
    std::sort(angles.begin(), angles.end());
    bool spread = true;
    for (int i = 0; i < n; ++i) {
      const double next = i + 1 < n ? angles[i + 1] : angles[0] + 2.0 * std::numbers::pi;
      if (next - angles[i] < 1e-3 || next - angles[i] > 0.95 * std::numbers::pi) spread = false;
    }
    if (spread) break;
  }
  const double a = uniform(rng, min_size, max_size);
  const double b = uniform(rng, min_size, max_size);
  const double rot = uniform(rng, -std::numbers::pi, std::numbers::pi);
  std::vector<Vec2> v;
  for (const double t : angles) {
    const Vec2 local{a * std::cos(t), b * std::sin(t)};
    v.push_back(center + rotated(local, rot));
  }
  return ConvexPolygon(std::move(v));
}

// Gift-wrapping hull, counter-clockwise, starting at the lowest-leftmost
// point, collinear points dropped.
inline std::vector<Vec2> gift_wrap_hull(const std::vector<Vec2>& pts) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].y < pts[start].y || (pts[i].y == pts[start].y && pts[i].x < pts[start].x)) start = i;
  }
  std::vector<Vec2> hull;
  std::size_t current = start;
  do {
    hull.push_back(pts[current]);
    std::size_t candidate = current == 0 ? 1 : 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == current) continue;
      const Vec2 a = pts[candidate] - pts[current];
      const Vec2 b = pts[i] - pts[current];
      const double c = a.x * b.y - a.y * b.x;
      // Keep the most clockwise candidate; on ties keep the farthest.
      if (c < 0.0 || (c == 0.0 && (b.x * b.x + b.y * b.y) > (a.x * a.x + a.y * a.y))) candidate = i;
    }
    current = candidate;
  } while (current != start && hull.size() <= pts.size());
  return hull;
}

// Removes vertices whose neighbours make them collinear within `tol`.
inline std::vector<Vec2> drop_collinear(std::vector<Vec2> v, double tol) {
  bool changed = true;
  while (changed && v.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2 p = v[(i + v.size() - 1) % v.size()];
      const Vec2 q = v[(i + 1) % v.size()];
      const Vec2 e1 = v[i] - p;
      const Vec2 e2 = q - v[i];
      if (std::fabs(e1.x * e2.y - e1.y * e2.x) <= tol * std::hypot(e1.x, e1.y) * std::hypot(e2.x, e2.y)) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return v;
}

// Same cyclic vertex sequence within tolerance (any starting offset).
inline bool same_cycle(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double tol) {
  if (a.size() != b.size() || a.empty()) return false;
  for (std::size_t offset = 0; offset < b.size(); ++offset) {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      const Vec2 d = a[i] - b[(i + offset) % b.size()];
      ok = std::fabs(d.x) <= tol && std::fabs(d.y) <= tol;
    }
    if (ok) return true;
  }
  return false;
}

inline double shoelace(const std::vector<Vec2>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % v.size()];
    s += a.x * b.y - a.y * b.x;
  }
  return 0.5 * s;
}

inline bool point_in_convex(const std::vector<Vec2>& v, Vec2 p) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % v.size()];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0) return false;
  }
  return true;
}

// Sutherland-Hodgman clip of convex `subject` by convex `clip`; area of the
// intersection.
inline double intersection_area(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    auto side = [&](Vec2 p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); };
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Vec2 p = in[j];
      const Vec2 q = in[(j + 1) % in.size()];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + (q - p) * t);
      }
    }
  }
  return out.size() < 3 ? 0.0 : shoelace(out);
}

// (admissible matches, total cost) of the best partial matching, by trying
// every column permutation of the padded square.
inline std::pair<std::size_t, double> brute_force(const CostMatrix& m) {
  const std::size_t n = std::max(m.rows(), m.cols());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best_count = 0;
  double best_cost = 0.0;
  do {
    std::size_t count = 0;
    double cost = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const std::size_t c = perm[r];
      if (c < m.cols() && m.admissible(r, c)) {
        ++count;
        cost += m.cost(r, c);
      }
    }
    if (count > best_count || (count == best_count && cost < best_cost)) {
      best_count = count;
      best_cost = cost;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_count, best_cost};
}

struct LpInstance {
  std::vector<HalfPlane> planes;
  Vec2 pref;
  double v_max;
};

inline LpInstance random_feasible_lp(Rng& rng) {
  LpInstance lp;
  lp.v_max = uniform(rng, 0.5, 2.0);
  const Vec2 inner = random_in_disc(rng, 0.7 * lp.v_max);
  const int m = std::uniform_int_distribution<int>(1, 10)(rng);
  for (int i = 0; i < m; ++i) {
    const Vec2 n = random_unit(rng);
    lp.planes.push_back({inner - n * uniform(rng, 0.05, 0.6), n});
  }
  lp.pref = random_in_disc(rng, 1.5 * lp.v_max);
  return lp;
}

// Row-by-row scan over rows y0 + r*h inside the disc; each row's feasible
// interval is computed analytically and the candidate nearest the preference
// is kept. With `lattice` the candidate is also snapped to the x lattice.
struct GridHit {
  Vec2 arg;
  double objective = 1e300;
};

inline GridHit grid_scan(const LpInstance& lp, double y_lo, double y_hi, double h, bool lattice) {
  GridHit hit;
  const long r0 = static_cast<long>(std::ceil(y_lo / h));
  const long r1 = static_cast<long>(std::floor(y_hi / h));
  for (long r = r0; r <= r1; ++r) {
    const double y = r * h;
    if (std::fabs(y) > lp.v_max) continue;
    const double half = std::sqrt(std::max(0.0, lp.v_max * lp.v_max - y * y));
    double lo = -half;
    double hi = half;
    bool empty = false;
    for (const HalfPlane& p : lp.planes) {
      const double c = dot(p.point, p.normal) - p.normal.y * y;
      if (p.normal.x > 1e-15) {
        lo = std::max(lo, c / p.normal.x);
      } else if (p.normal.x < -1e-15) {
        hi = std::min(hi, c / p.normal.x);
      } else if (c > 0.0) {
        empty = true;
      }
    }
    if (empty || lo > hi) continue;
    double x = std::clamp(lp.pref.x, lo, hi);
    if (lattice) {
      const long klo = static_cast<long>(std::ceil(lo / h));
      const long khi = static_cast<long>(std::floor(hi / h));
      if (klo > khi) continue;
      x = static_cast<double>(std::clamp(std::lround(lp.pref.x / h), klo, khi)) * h;
    }
    const Vec2 cand{x, y};
    const double d = norm(cand - lp.pref);
    if (d < hit.objective) hit = {cand, d};
  }
  return hit;
}

}  // namespace densetrack::testing
