#include "densetrack/frvo.hpp"

#include <algorithm>
#include <limits>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

constexpr double kStandstill = 1e-6;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, what);
}

}  // namespace

void FrvoParams::validate() const {
  if (!(tau > 0.0) || !(rho > 0.0) || !(dt > 0.0) || !(v_max > 0.0)) {
    invalid("FRVO parameters tau, rho, dt and v_max must be positive");
  }
  if (polygon_k < 4 || polygon_k % 2 != 0) invalid("polygon_k must be even and >= 4");
  if (!(reciprocity >= 0.0 && reciprocity <= 1.0)) invalid("reciprocity must lie in [0, 1]");
  if (!(safety_margin >= 0.0)) invalid("safety_margin must be non-negative");
}

std::vector<std::size_t> neighbors(std::size_t i, std::span<const PedestrianState> states, double rho) {
  if (i >= states.size()) invalid("pedestrian index out of range");
  if (!(rho > 0.0)) invalid("neighbour radius must be positive");
  std::vector<std::size_t> out;
  const double rho_sq = rho * rho;
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (j != i && norm_sq(states[j].x - states[i].x) <= rho_sq) out.push_back(j);
  }
  return out;
}

Vec2 preferred_velocity(const PedestrianState& state, const Goal& goal, double dt) {
  const Vec2 to_goal = goal.position - state.x;
  const double distance = norm(to_goal);
  if (distance <= dt * goal.preferred_speed || distance == 0.0) return {};
  return to_goal * (goal.preferred_speed / distance);
}

double agent_orientation(const PedestrianState& state) {
  if (norm(state.v) >= kStandstill) return wrap_angle(std::atan2(state.v.y, state.v.x));
  if (norm(state.v_pref) >= kStandstill) return wrap_angle(std::atan2(state.v_pref.y, state.v_pref.x));
  return 0.0;
}

ConvexPolygon agent_shape(const PedestrianState& state, int k) {
  return approximate_ellipse({Vec2{}, 0.5 * state.l, 0.5 * state.w, agent_orientation(state)}, k);
}

ConvexPolygon agent_polygon(const PedestrianState& state, int k) {
  return agent_shape(state, k).translated(state.x);
}

HalfPlane frvo_constraint(const PedestrianState& self, const PedestrianState& other,
                          const FrvoParams& params) {
  ConvexPolygon combined =
      minkowski_sum(agent_shape(other, params.polygon_k), agent_shape(self, params.polygon_k).negated());
  if (params.safety_margin > 0.0) {
    combined = minkowski_sum(
        combined, approximate_ellipse({Vec2{}, params.safety_margin, params.safety_margin, 0.0}, params.polygon_k));
  }
  const Vec2 rel_pos = other.x - self.x;
  VORegion vo = velocity_obstacle(combined, rel_pos, other.v, params.tau);
  if (vo.overlapping) {
    // Already intersecting: resolve the overlap within a single step.
    vo = velocity_obstacle(combined, rel_pos, other.v, params.dt);
  }
  return vo_to_halfplane(vo, self.v, other.v, params.reciprocity);
}

std::vector<PedestrianState> frvo_step(std::span<const PedestrianState> states,
                                       std::span<const Goal> goals, const FrvoParams& params,
                                       FrvoStepStats* stats) {
  if (states.size() != goals.size()) invalid("states and goals differ in length");
  params.validate();

  // Snapshot with refreshed preferred velocities; every constraint below is
  // built from this snapshot only.
  std::vector<PedestrianState> snapshot(states.begin(), states.end());
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    snapshot[i].v_pref = preferred_velocity(snapshot[i], goals[i], params.dt);
  }

  FrvoStepStats local;
  std::vector<PedestrianState> next(snapshot);
  std::vector<HalfPlane> constraints;
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    constraints.clear();
    for (const std::size_t j : neighbors(i, snapshot, params.rho)) {
      if (snapshot[j].x == snapshot[i].x) continue;  // coincident: no direction to avoid along
      constraints.push_back(frvo_constraint(snapshot[i], snapshot[j], params));
    }
    const LpResult lp = solve_velocity_lp(constraints, snapshot[i].v_pref, params.v_max);
    local.constraints += constraints.size();
    if (!lp.feasible) ++local.infeasible;
    next[i].v = lp.velocity;
    next[i].x = snapshot[i].x + lp.velocity * params.dt;
  }
  if (stats != nullptr) {
    stats->infeasible += local.infeasible;
    stats->constraints += local.constraints;
  }
  return next;
}

BoundingBox predict_bbox(const PedestrianState& state, double dt, double scale, Vec2 origin, int k) {
  if (!(scale > 0.0)) invalid("pixel scale must be positive");
  PedestrianState advanced = state;
  advanced.x = state.x + state.v * dt;
  const ConvexPolygon poly = agent_polygon(advanced, k);
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const Vec2 p : poly.vertices()) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  return {(min_x - origin.x) * scale, (min_y - origin.y) * scale, (max_x - min_x) * scale,
          (max_y - min_y) * scale};
}

}  // namespace densetrack
