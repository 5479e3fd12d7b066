#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "densetrack/features.hpp"
#include "densetrack/geometry.hpp"

namespace densetrack {

// Per-pedestrian FRVO state: position, velocity, preferred velocity, visible
// face height l and shoulder length w.
struct PedestrianState {
  Vec2 x;
  Vec2 v;
  Vec2 v_pref;
  double l = 0.3;
  double w = 0.45;

  std::array<double, 8> flatten() const {
    return {x.x, x.y, v.x, v.y, v_pref.x, v_pref.y, l, w};
  }
};

struct FrvoParams {
  double tau = 2.0;   // collision horizon (s)
  double rho = 2.0;   // neighbour radius (m)
  double dt = 0.1;    // integration step (s)
  double v_max = 2.0; // m/s
  int polygon_k = 8;
  double reciprocity = 0.5;
  // Clearance added around the combined shape so heading changes between
  // steps do not turn a grazing pass into an overlap.
  double safety_margin = 0.08;  // m

  void validate() const;
};

struct Goal {
  Vec2 position;
  double preferred_speed = 1.3;
};

struct FrvoStepStats {
  std::size_t infeasible = 0;  // agents whose LP fell back to min-max violation
  std::size_t constraints = 0; // half-planes built this step
};

std::vector<std::size_t> neighbors(std::size_t i, std::span<const PedestrianState> states, double rho);

// Heading toward the goal at the preferred speed; zero once the agent is
// within `dt * preferred_speed` of the goal.
Vec2 preferred_velocity(const PedestrianState& state, const Goal& goal, double dt);

// Orientation used for the agent's ellipse: direction of v, then of v_pref,
// then 0.
double agent_orientation(const PedestrianState& state);

ConvexPolygon agent_polygon(const PedestrianState& state, int k);

// Same polygon expressed relative to the agent centre.
ConvexPolygon agent_shape(const PedestrianState& state, int k);

// Half-plane constraint of agent i induced by neighbour j.
HalfPlane frvo_constraint(const PedestrianState& self, const PedestrianState& other,
                          const FrvoParams& params);

std::vector<PedestrianState> frvo_step(std::span<const PedestrianState> states,
                                       std::span<const Goal> goals, const FrvoParams& params,
                                       FrvoStepStats* stats = nullptr);

// Axis-aligned box of the agent polygon after advancing by v * dt, mapped to
// pixels as (world - origin) * scale.
BoundingBox predict_bbox(const PedestrianState& state, double dt, double scale, Vec2 origin,
                         int k = 8);

}  // namespace densetrack
