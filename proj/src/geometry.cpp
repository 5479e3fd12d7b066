#include "densetrack/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLpEpsilon = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, what);
}

// Rotates the vertex list so that it starts at the lowest (then leftmost) vertex.
std::vector<Vec2> from_lowest(const std::vector<Vec2>& v) {
  auto lowest = std::min_element(v.begin(), v.end(), [](Vec2 a, Vec2 b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
  std::vector<Vec2> out(lowest, v.end());
  out.insert(out.end(), v.begin(), lowest);
  return out;
}

// Drops vertices whose adjacent edges are (numerically) collinear or that
// repeat their predecessor.
std::vector<Vec2> drop_flat_vertices(std::vector<Vec2> v) {
  bool changed = true;
  while (changed && v.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() > 3; ++i) {
      const Vec2 prev = v[(i + v.size() - 1) % v.size()];
      const Vec2 next = v[(i + 1) % v.size()];
      const Vec2 e1 = v[i] - prev;
      const Vec2 e2 = next - v[i];
      const double scale = norm(e1) * norm(e2);
      if (scale == 0.0 || cross(e1, e2) <= 1e-12 * scale) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return v;
}

// A boundary piece of a VO region: a segment (finite length) or a ray.
struct Piece {
  Vec2 origin;
  Vec2 dir;  // unit
  double length;
  Vec2 normal;  // unit, outward
};

std::vector<Piece> boundary_pieces(const VORegion& vo) {
  std::vector<Piece> pieces;
  const auto& chain = vo.truncation;
  auto edge = [&](Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double len = norm(e);
    pieces.push_back({a, e / len, len, Vec2{e.y, -e.x} / len});
  };
  if (vo.overlapping) {
    for (std::size_t i = 0; i < chain.size(); ++i) edge(chain[i], chain[(i + 1) % chain.size()]);
    return pieces;
  }
  pieces.push_back({chain.front(), vo.left_ray, kInf, perp_left(vo.left_ray)});
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) edge(chain[i], chain[i + 1]);
  pieces.push_back({chain.back(), vo.right_ray, kInf, Vec2{vo.right_ray.y, -vo.right_ray.x}});
  return pieces;
}

// Lines for the incremental LP; the permitted side is left of `direction`.
struct Line {
  Vec2 point;
  Vec2 direction;
};

bool linear_program1(const std::vector<Line>& lines, std::size_t line_no, double radius,
                     Vec2 opt_velocity, bool direction_opt, Vec2& result) {
  const Line& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - norm_sq(line.point);
  if (discriminant < 0.0) return false;  // speed disc misses the line entirely

  const double sqrt_disc = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_disc;
  double t_right = -dot_product + sqrt_disc;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = cross(line.direction, lines[i].direction);
    const double numerator = cross(lines[i].direction, line.point - lines[i].point);
    if (std::fabs(denominator) <= kLpEpsilon) {
      if (numerator < 0.0) return false;  // parallel and on the forbidden side
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt_velocity, line.direction) > 0.0 ? line.point + t_right * line.direction
                                                     : line.point + t_left * line.direction;
  } else {
    const double t = std::clamp(dot(line.direction, opt_velocity - line.point), t_left, t_right);
    result = line.point + t * line.direction;
  }
  return true;
}

std::size_t linear_program2(const std::vector<Line>& lines, double radius, Vec2 opt_velocity,
                            bool direction_opt, Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (norm_sq(opt_velocity) > radius * radius) {
    result = normalized(opt_velocity) * radius;
  } else {
    result = opt_velocity;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (cross(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 previous = result;
      if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimises the largest violation over lines[begin_line..] by sweeping a
// projected 2D LP; `result` holds the LP2 partial result on entry.
void linear_program3(const std::vector<Line>& lines, std::size_t begin_line, double radius,
                     Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin_line; i < lines.size(); ++i) {
    if (cross(lines[i].direction, lines[i].point - result) <= distance) continue;
    std::vector<Line> projected;
    projected.reserve(i);
    for (std::size_t j = 0; j < i; ++j) {
      Line line;
      const double determinant = cross(lines[i].direction, lines[j].direction);
      if (std::fabs(determinant) <= kLpEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (cross(lines[j].direction, lines[i].point - lines[j].point) / determinant) *
                         lines[i].direction;
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }
    const Vec2 previous = result;
    if (linear_program2(projected, radius, perp_left(lines[i].direction), true, result) <
        projected.size()) {
      result = previous;
    }
    distance = cross(lines[i].direction, lines[i].point - result);
  }
}

}  // namespace

double wrap_angle(double angle) {
  double a = std::fmod(angle + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  a -= kPi;
  return a >= kPi ? -kPi : a;
}

ConvexPolygon::ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) invalid("convex polygon needs at least 3 vertices");
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_finite(vertices_[i])) invalid("convex polygon vertex is not finite");
    const Vec2 e1 = vertices_[(i + 1) % n] - vertices_[i];
    const Vec2 e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
    const double c = cross(e1, e2);
    if (!(c > 0.0)) invalid("polygon is not strictly convex and counter-clockwise");
    turning += std::atan2(c, dot(e1, e2));
  }
  if (turning > 3.0 * kPi) invalid("polygon winds more than once");
}

double ConvexPolygon::area() const {
  double twice = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    twice += cross(vertices_[i], vertices_[(i + 1) % size()]);
  }
  return 0.5 * twice;
}

Vec2 ConvexPolygon::centroid() const {
  // Shift to the first vertex for conditioning.
  const Vec2 base = vertices_[0];
  Vec2 acc;
  double twice = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const Vec2 a = vertices_[i] - base;
    const Vec2 b = vertices_[(i + 1) % size()] - base;
    const double c = cross(a, b);
    twice += c;
    acc += (a + b) * c;
  }
  return base + acc / (3.0 * twice);
}

bool ConvexPolygon::contains(Vec2 p) const {
  for (std::size_t i = 0; i < size(); ++i) {
    const Vec2 a = vertices_[i];
    const Vec2 b = vertices_[(i + 1) % size()];
    if (cross(b - a, p - a) < 0.0) return false;
  }
  return true;
}

bool ConvexPolygon::contains_strictly(Vec2 p) const {
  for (std::size_t i = 0; i < size(); ++i) {
    const Vec2 a = vertices_[i];
    const Vec2 b = vertices_[(i + 1) % size()];
    if (cross(b - a, p - a) <= 0.0) return false;
  }
  return true;
}

ConvexPolygon ConvexPolygon::translated(Vec2 offset) const {
  std::vector<Vec2> v(vertices_);
  for (auto& p : v) p += offset;
  return ConvexPolygon(Unchecked{}, std::move(v));
}

ConvexPolygon ConvexPolygon::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) invalid("polygon scale must be positive");
  std::vector<Vec2> v(vertices_);
  for (auto& p : v) p = p * factor;
  return ConvexPolygon(Unchecked{}, std::move(v));
}

ConvexPolygon ConvexPolygon::negated() const {
  std::vector<Vec2> v(vertices_);
  for (auto& p : v) p = -p;
  return ConvexPolygon(Unchecked{}, std::move(v));
}

ConvexPolygon approximate_ellipse(const Ellipse& e, int vertex_count) {
  if (vertex_count < 4 || vertex_count % 2 != 0) {
    invalid("ellipse polygonization needs an even vertex count >= 4");
  }
  if (!(e.semi_face > 0.0) || !(e.semi_shoulder > 0.0)) invalid("ellipse semi-axes must be positive");
  if (!is_finite(e.center) || !std::isfinite(e.orientation)) invalid("ellipse is not finite");

  // Circumscribed regular k-gon of the unit circle (tangent at angles 2*pi*i/k)
  // mapped through the ellipse's affine frame; tangency survives the map.
  const double k = static_cast<double>(vertex_count);
  const double inflate = 1.0 / std::cos(kPi / k);
  const double c = std::cos(e.orientation);
  const double s = std::sin(e.orientation);
  std::vector<Vec2> v;
  v.reserve(static_cast<std::size_t>(vertex_count));
  for (int i = 0; i < vertex_count; ++i) {
    const double phi = (2.0 * i + 1.0) * kPi / k;
    const double lx = e.semi_face * std::cos(phi) * inflate;
    const double ly = e.semi_shoulder * std::sin(phi) * inflate;
    v.push_back({e.center.x + c * lx - s * ly, e.center.y + s * lx + c * ly});
  }
  return ConvexPolygon(std::move(v));
}

ConvexPolygon minkowski_sum(const ConvexPolygon& p, const ConvexPolygon& q) {
  std::vector<Vec2> a = from_lowest(p.vertices());
  std::vector<Vec2> b = from_lowest(q.vertices());
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  a.push_back(a[0]);
  a.push_back(a[1]);
  b.push_back(b[0]);
  b.push_back(b[1]);

  std::vector<Vec2> out;
  out.reserve(n + m);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n || j < m) {
    out.push_back(a[i] + b[j]);
    const double c = cross(a[i + 1] - a[i], b[j + 1] - b[j]);
    if (c >= 0.0 && i < n) ++i;
    if (c <= 0.0 && j < m) ++j;
  }
  return ConvexPolygon(drop_flat_vertices(std::move(out)));
}

ConvexPolygon convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) invalid("convex hull needs three distinct points");

  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2 pt : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pt - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pt;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) invalid("convex hull of collinear points");
  return ConvexPolygon(drop_flat_vertices(std::move(hull)));
}

VORegion velocity_obstacle(const ConvexPolygon& combined, Vec2 rel_pos, Vec2 v_j, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) invalid("VO horizon must be positive");
  if (!is_finite(rel_pos) || !is_finite(v_j)) invalid("VO input is not finite");
  if (rel_pos.x == 0.0 && rel_pos.y == 0.0) {
    throw Error(ErrorCode::kDegenerateConfiguration, "agents are coincident");
  }

  const ConvexPolygon obstacle = combined.translated(rel_pos);
  const auto& v = obstacle.vertices();
  const std::size_t n = v.size();

  // Edge i (v[i] -> v[i+1]) faces the apex when the origin lies strictly on
  // its outer side.
  std::vector<bool> visible(n);
  bool any_visible = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = v[(i + 1) % n] - v[i];
    visible[i] = dot(Vec2{e.y, -e.x}, v[i]) < 0.0;
    any_visible = any_visible || visible[i];
  }

  VORegion vo;
  vo.apex = v_j;
  if (!any_visible) {
    vo.overlapping = true;
    vo.left_ray = vo.right_ray = normalized(rel_pos);
    vo.truncation.reserve(n);
    for (const Vec2 p : v) vo.truncation.push_back(p / tau);
    return vo;
  }

  std::size_t start = 0;
  while (!(visible[start] && !visible[(start + n - 1) % n])) ++start;
  vo.truncation.push_back(v[start] / tau);
  for (std::size_t k = 0; k < n && visible[(start + k) % n]; ++k) {
    vo.truncation.push_back(v[(start + k + 1) % n] / tau);
  }
  vo.left_ray = normalized(vo.truncation.front());
  vo.right_ray = normalized(vo.truncation.back());
  return vo;
}

bool vo_contains(const VORegion& vo, Vec2 v) {
  const Vec2 w = v - vo.apex;
  for (const Piece& piece : boundary_pieces(vo)) {
    if (dot(piece.normal, w - piece.origin) >= 0.0) return false;
  }
  return true;
}

VOEscape vo_escape(const VORegion& vo, Vec2 relative_velocity) {
  const Vec2 w = relative_velocity;
  const auto pieces = boundary_pieces(vo);

  bool inside = true;
  for (const Piece& piece : pieces) {
    if (dot(piece.normal, w - piece.origin) > 0.0) {
      inside = false;
      break;
    }
  }

  VOEscape out;
  out.inside = inside;
  if (inside) {
    // Convex region: the nearest boundary point lies on the closest
    // supporting line.
    double best = kInf;
    for (const Piece& piece : pieces) {
      const double depth = -dot(piece.normal, w - piece.origin);
      if (depth < best) {
        best = depth;
        out.normal = piece.normal;
      }
    }
    out.u = out.normal * best;
    return out;
  }

  double best = kInf;
  Vec2 nearest;
  Vec2 piece_normal;
  for (const Piece& piece : pieces) {
    const double t = std::clamp(dot(w - piece.origin, piece.dir), 0.0, piece.length);
    const Vec2 q = piece.origin + piece.dir * t;
    const double d = norm(w - q);
    if (d < best) {
      best = d;
      nearest = q;
      piece_normal = piece.normal;
    }
  }
  out.u = nearest - w;
  out.normal = best > 0.0 ? (w - nearest) / best : piece_normal;
  return out;
}

HalfPlane vo_to_halfplane(const VORegion& vo, Vec2 v_i, Vec2 v_j, double reciprocity) {
  if (!(reciprocity >= 0.0 && reciprocity <= 1.0)) invalid("reciprocity must lie in [0, 1]");
  const VOEscape escape = vo_escape(vo, v_i - v_j);
  return {v_i + escape.u * reciprocity, escape.normal};
}

LpResult solve_velocity_lp(std::span<const HalfPlane> constraints, Vec2 v_pref, double v_max) {
  if (!(v_max > 0.0) || !std::isfinite(v_max)) invalid("v_max must be positive");
  std::vector<Line> lines;
  lines.reserve(constraints.size());
  for (const HalfPlane& h : constraints) {
    lines.push_back({h.point, Vec2{h.normal.y, -h.normal.x}});
  }
  LpResult out;
  const std::size_t failed = linear_program2(lines, v_max, v_pref, false, out.velocity);
  if (failed < lines.size()) {
    out.feasible = false;
    linear_program3(lines, failed, v_max, out.velocity);
  }
  return out;
}

double delta_overlap_error_bound(double r, double delta, double sigma) {
  if (!(r > 0.0) || !std::isfinite(r)) invalid("radius must be positive");
  if (!std::isfinite(sigma) || sigma < 2.0 * r) {
    throw Error(ErrorCode::kDomain, "sigma must be at least 2r");
  }
  if (!(delta >= 0.0 && delta < 2.0 * r)) invalid("delta must lie in [0, 2r)");
  return std::asin(2.0 * r / sigma) - std::asin((2.0 * r - delta) / sigma);
}

bool polygons_overlap(const ConvexPolygon& p, const ConvexPolygon& q) {
  double scale = 1.0;
  for (const Vec2 v : p.vertices()) scale = std::max({scale, std::fabs(v.x), std::fabs(v.y)});
  for (const Vec2 v : q.vertices()) scale = std::max({scale, std::fabs(v.x), std::fabs(v.y)});
  const double eps = 1e-12 * scale;

  auto separated_along_edges_of = [&](const ConvexPolygon& a, const ConvexPolygon& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Vec2 e = a[(i + 1) % a.size()] - a[i];
      const Vec2 axis = normalized(Vec2{e.y, -e.x});
      double a_min = kInf, a_max = -kInf, b_min = kInf, b_max = -kInf;
      for (const Vec2 v : a.vertices()) {
        const double s = dot(axis, v);
        a_min = std::min(a_min, s);
        a_max = std::max(a_max, s);
      }
      for (const Vec2 v : b.vertices()) {
        const double s = dot(axis, v);
        b_min = std::min(b_min, s);
        b_max = std::max(b_max, s);
      }
      if (std::min(a_max, b_max) - std::max(a_min, b_min) <= eps) return true;
    }
    return false;
  };
  return !separated_along_edges_of(p, q) && !separated_along_edges_of(q, p);
}

}  // namespace densetrack
