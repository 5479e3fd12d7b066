#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace densetrack {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product; > 0 when b is counter-clockwise of a.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr double norm_sq(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr Vec2 perp_left(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 normalized(Vec2 v) { return v / norm(v); }
inline Vec2 rotated(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}
inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Wraps an angle into [-pi, pi).
double wrap_angle(double angle);

struct Ellipse {
  Vec2 center;
  double semi_face = 0.0;      // along the orientation axis
  double semi_shoulder = 0.0;  // perpendicular to it
  double orientation = 0.0;    // radians
};

// Counter-clockwise, strictly convex polygon with at least three vertices.
// The constructor enforces the invariant and throws Error(kInvalidParameter).
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const& { return vertices_; }
  std::vector<Vec2> vertices() && { return std::move(vertices_); }
  std::size_t size() const { return vertices_.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices_[i]; }

  double area() const;
  Vec2 centroid() const;
  // Closed containment (boundary counts as inside).
  bool contains(Vec2 p) const;
  // Strict interior containment.
  bool contains_strictly(Vec2 p) const;

  ConvexPolygon translated(Vec2 offset) const;
  ConvexPolygon scaled(double factor) const;  // about the origin, factor > 0
  // Point reflection through the origin (-P); stays counter-clockwise.
  ConvexPolygon negated() const;

 private:
  struct Unchecked {};
  ConvexPolygon(Unchecked, std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {}

  std::vector<Vec2> vertices_;
};

// Permitted side is {v : dot(v - point, normal) >= 0}.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;

  double slack(Vec2 v) const { return dot(v - point, normal); }
};

// Truncated velocity-obstacle cone in velocity space. `apex` is the
// neighbour's velocity; every other member is relative to the apex.
//
// Non-overlapping agents: the region is the shadow of the truncation chain,
// bounded by the two rays starting at the first / last chain point.
// `truncation` holds the chain of the scaled obstacle polygon that faces the
// apex, ordered from the left tangent point to the right tangent point.
//
// Overlapping agents (`overlapping`): the region is the convex polygon stored
// in `truncation`, i.e. the set of relative velocities that are still inside
// the neighbour after one horizon.
struct VORegion {
  Vec2 apex;
  Vec2 left_ray;
  Vec2 right_ray;
  std::vector<Vec2> truncation;
  bool overlapping = false;
};

// Minimal displacement of a relative velocity onto the VO boundary.
struct VOEscape {
  Vec2 u;       // boundary point minus current relative velocity
  Vec2 normal;  // unit outward normal of the VO at the boundary point
  bool inside = false;
};

struct LpResult {
  Vec2 velocity;
  bool feasible = true;
};

ConvexPolygon approximate_ellipse(const Ellipse& e, int vertex_count);

ConvexPolygon minkowski_sum(const ConvexPolygon& p, const ConvexPolygon& q);

// Andrew's monotone chain; collinear points are dropped. Needs three
// non-collinear input points.
ConvexPolygon convex_hull(std::span<const Vec2> points);

// `combined` is B ⊕ (-A) for agent A (self) and B (neighbour), expressed in
// shape-local coordinates; `rel_pos` is x_B - x_A.
VORegion velocity_obstacle(const ConvexPolygon& combined, Vec2 rel_pos, Vec2 v_j,
                           double tau);

// True iff `v` (absolute velocity of the agent) leads to overlap with
// positive area within the horizon.
bool vo_contains(const VORegion& vo, Vec2 v);

VOEscape vo_escape(const VORegion& vo, Vec2 relative_velocity);

HalfPlane vo_to_halfplane(const VORegion& vo, Vec2 v_i, Vec2 v_j, double reciprocity = 0.5);

// argmin |v - v_pref| over the half-planes and |v| <= v_max. Infeasible
// constraint sets fall back to the velocity minimising the largest violation.
LpResult solve_velocity_lp(std::span<const HalfPlane> constraints, Vec2 v_pref, double v_max);

// Upper bound on the angular error of a circular VO when two radius-r
// agents delta-overlap at distance sigma.
double delta_overlap_error_bound(double r, double delta, double sigma);

// Separating-axis test; true iff the intersection has positive area.
bool polygons_overlap(const ConvexPolygon& p, const ConvexPolygon& q);

}  // namespace densetrack
