#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "densetrack/error.hpp"
#include "densetrack/frvo.hpp"
#include "test_support.hpp"

namespace densetrack {
namespace {

using testing::Rng;
using testing::uniform;

constexpr double kPi = std::numbers::pi;

PedestrianState at(Vec2 x, Vec2 v = {}) {
  PedestrianState s;
  s.x = x;
  s.v = v;
  return s;
}

TEST(Neighbors, TrivialCases) {
  const std::vector<PedestrianState> one{at({0, 0})};
  EXPECT_TRUE(neighbors(0, one, 2.0).empty());
  const std::vector<PedestrianState> two{at({0, 0}), at({1, 0})};
  EXPECT_EQ(neighbors(0, two, 2.0), std::vector<std::size_t>{1});
  EXPECT_EQ(neighbors(1, two, 2.0), std::vector<std::size_t>{0});
  EXPECT_THROW(neighbors(2, two, 2.0), Error);
}

TEST(Neighbors, MatchesPairwiseScan) {
  Rng rng(1);
  std::vector<PedestrianState> states;
  for (int i = 0; i < 100; ++i) states.push_back(at({uniform(rng, 0, 10), uniform(rng, 0, 10)}));
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::vector<std::size_t> expected;
    for (std::size_t j = 0; j < states.size(); ++j) {
      const double dx = states[j].x.x - states[i].x.x;
      const double dy = states[j].x.y - states[i].x.y;
      if (j != i && std::sqrt(dx * dx + dy * dy) <= 2.0) expected.push_back(j);
    }
    EXPECT_EQ(neighbors(i, states, 2.0), expected);
  }
}

TEST(PreferredVelocity, Examples) {
  const PedestrianState s = at({0, 0});
  const Vec2 a = preferred_velocity(s, {{10, 0}, 1.4}, 0.1);
  EXPECT_DOUBLE_EQ(a.x, 1.4);
  EXPECT_DOUBLE_EQ(a.y, 0.0);
  const Vec2 b = preferred_velocity(s, {{3, 4}, 1.0}, 0.1);
  EXPECT_NEAR(b.x, 0.6, 1e-15);
  EXPECT_NEAR(b.y, 0.8, 1e-15);
  const Vec2 c = preferred_velocity(s, {{0, 0}, 1.0}, 0.1);
  EXPECT_EQ(c.x, 0.0);
  EXPECT_EQ(c.y, 0.0);
  // Inside one step of travel counts as arrival.
  const Vec2 d = preferred_velocity(s, {{0.05, 0}, 1.0}, 0.1);
  EXPECT_EQ(d.x, 0.0);
}

TEST(AgentPolygon, CircularAgentIgnoresHeading) {
  PedestrianState s = at({1, 2}, {0.3, 0.7});
  s.l = s.w = 0.5;
  PedestrianState t = s;
  t.v = {-1.0, 0.2};
  // Different headings give the same vertex set up to a rotation of the
  // vertex angles, so compare the circumscribed radius and the area.
  const auto p = agent_polygon(s, 16);
  const auto q = agent_polygon(t, 16);
  EXPECT_NEAR(p.area(), q.area(), 1e-12);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(norm(p[i] - s.x), norm(q[i] - t.x), 1e-12);
  }
}

TEST(AgentPolygon, AxisAlignedExtent) {
  PedestrianState s = at({0, 0}, {1.0, 0.0});
  s.l = 1.8;
  s.w = 0.5;
  const auto p = agent_polygon(s, 8);
  const auto ref = approximate_ellipse({{0, 0}, 0.9, 0.25, 0.0}, 8);
  auto extent = [](const ConvexPolygon& poly) {
    double lo = 1e300, hi = -1e300;
    for (const Vec2 v : poly.vertices()) {
      lo = std::min(lo, v.x);
      hi = std::max(hi, v.x);
    }
    return hi - lo;
  };
  EXPECT_NEAR(extent(p), extent(ref), 1e-12);
}

TEST(AgentPolygon, StationaryOrientationFallback) {
  PedestrianState s = at({0, 0});
  s.v_pref = {0.0, 2.0};
  EXPECT_NEAR(agent_orientation(s), kPi / 2.0, 1e-15);
  s.v_pref = {};
  EXPECT_EQ(agent_orientation(s), 0.0);
  s.v = {-1.0, -1e-3};
  EXPECT_NEAR(agent_orientation(s), std::atan2(-1e-3, -1.0), 1e-15);
}

TEST(AgentPolygon, ContainsEllipseBoundary) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    PedestrianState s = at({uniform(rng, -5, 5), uniform(rng, -5, 5)}, testing::random_in_disc(rng, 2.0));
    s.l = uniform(rng, 0.2, 2.0);
    s.w = uniform(rng, 0.2, 1.0);
    const auto poly = agent_polygon(s, 8);
    const double theta = std::atan2(s.v.y, s.v.x);
    for (int i = 0; i < 1000; ++i) {
      const double t = 2.0 * kPi * i / 1000.0;
      const Vec2 local{0.5 * s.l * std::cos(t), 0.5 * s.w * std::sin(t)};
      ASSERT_TRUE(poly.contains(s.x + rotated(local * (1.0 - 1e-12), theta)));
    }
  }
}

TEST(FrvoStep, LoneAgentFollowsPreference) {
  const std::vector<PedestrianState> states{at({0, 0})};
  const std::vector<Goal> goals{{{10, 0}, 1.3}};
  FrvoParams params;
  const auto next = frvo_step(states, goals, params);
  EXPECT_DOUBLE_EQ(next[0].v.x, 1.3);
  EXPECT_DOUBLE_EQ(next[0].v.y, 0.0);
  EXPECT_DOUBLE_EQ(next[0].x.x, 1.3 * params.dt);
}

TEST(FrvoStep, LengthMismatchRejected) {
  const std::vector<PedestrianState> states{at({0, 0}), at({3, 0})};
  const std::vector<Goal> goals{{{10, 0}, 1.3}};
  EXPECT_THROW(frvo_step(states, goals, FrvoParams{}), Error);
}

TEST(FrvoStep, LoneAgentProgressIsStrict) {
  std::vector<PedestrianState> states{at({0, 0})};
  const std::vector<Goal> goals{{{4, 3}, 1.2}};
  double previous = norm(goals[0].position - states[0].x);
  for (int step = 0; step < 100 && previous > 0.12; ++step) {
    states = frvo_step(states, goals, FrvoParams{});
    const double d = norm(goals[0].position - states[0].x);
    EXPECT_LT(d, previous);
    previous = d;
  }
  EXPECT_LE(previous, 0.12 + 1e-9);
}

TEST(FrvoStep, HeadOnIsPointSymmetric) {
  // A point reflection maps the scene onto itself with the agents swapped,
  // so their new velocities must be negatives of each other.
  for (const double offset : {0.0, 0.05, -0.12}) {
    const std::vector<PedestrianState> states{at({-2.0, offset}), at({2.0, -offset})};
    const std::vector<Goal> goals{{{8.0, offset}, 1.3}, {{-8.0, -offset}, 1.3}};
    auto s = states;
    for (int step = 0; step < 20; ++step) {
      s = frvo_step(s, goals, FrvoParams{});
      EXPECT_LT(norm(s[0].v + s[1].v), 1e-6) << "offset " << offset << " step " << step;
      EXPECT_LT(norm(s[0].x + s[1].x), 1e-6);
    }
  }
}

TEST(FrvoStep, HeadOnNeverOverlaps) {
  std::vector<PedestrianState> s{at({-2.0, 0.0}), at({2.0, 0.01})};
  const std::vector<Goal> goals{{{6.0, 0.0}, 1.3}, {{-6.0, 0.01}, 1.3}};
  const FrvoParams params;
  for (int step = 0; step < 100; ++step) {
    s = frvo_step(s, goals, params);
    ASSERT_FALSE(polygons_overlap(agent_polygon(s[0], params.polygon_k), agent_polygon(s[1], params.polygon_k)))
        << "step " << step;
  }
  // Both got past each other.
  EXPECT_GT(s[0].x.x, 2.0);
  EXPECT_LT(s[1].x.x, -2.0);
}

struct Scene {
  std::vector<PedestrianState> states;
  std::vector<Goal> goals;
};

Scene random_scene(Rng& rng, int n) {
  Scene scene;
  while (static_cast<int>(scene.states.size()) < n) {
    PedestrianState s = at({uniform(rng, 0, 6), uniform(rng, 0, 6)});
    s.l = uniform(rng, 0.25, 0.35);
    s.w = uniform(rng, 0.4, 0.5);
    bool clear = true;
    for (const auto& o : scene.states) clear = clear && norm(o.x - s.x) > 0.8;
    if (!clear) continue;
    scene.states.push_back(s);
    // Far goals keep everyone walking; parked agents are the simulator's job.
    scene.goals.push_back({s.x + testing::random_unit(rng) * 30.0, uniform(rng, 1.0, 1.5)});
  }
  return scene;
}

TEST(FrvoStep, OrderIndependent) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Scene scene = random_scene(rng, 12);
    for (int warm = 0; warm < 5; ++warm) scene.states = frvo_step(scene.states, scene.goals, FrvoParams{});
    std::vector<std::size_t> perm(scene.states.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Scene shuffled;
    for (const std::size_t p : perm) {
      shuffled.states.push_back(scene.states[p]);
      shuffled.goals.push_back(scene.goals[p]);
    }
    const auto a = frvo_step(scene.states, scene.goals, FrvoParams{});
    const auto b = frvo_step(shuffled.states, shuffled.goals, FrvoParams{});
    for (std::size_t k = 0; k < perm.size(); ++k) {
      EXPECT_NEAR(a[perm[k]].v.x, b[k].v.x, 1e-12);
      EXPECT_NEAR(a[perm[k]].v.y, b[k].v.y, 1e-12);
    }
  }
}

TEST(FrvoStep, TranslationInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Scene scene = random_scene(rng, 10);
    const Vec2 shift{uniform(rng, -50, 50), uniform(rng, -50, 50)};
    Scene moved = scene;
    for (auto& s : moved.states) s.x += shift;
    for (auto& g : moved.goals) g.position += shift;
    for (int step = 0; step < 10; ++step) {
      scene.states = frvo_step(scene.states, scene.goals, FrvoParams{});
      moved.states = frvo_step(moved.states, moved.goals, FrvoParams{});
    }
    for (std::size_t i = 0; i < scene.states.size(); ++i) {
      EXPECT_NEAR(moved.states[i].x.x - shift.x, scene.states[i].x.x, 1e-9);
      EXPECT_NEAR(moved.states[i].x.y - shift.y, scene.states[i].x.y, 1e-9);
    }
  }
}

// Collision freedom is only promised while every LP stays feasible; an
// overlap must therefore be preceded by at least one infeasible solve.
TEST(FrvoStep, SpeedCapAndNoOverlapWhileFeasible) {
  Rng rng(5);
  FrvoParams params;
  params.v_max = 1.6;
  int clean_rollouts = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Scene scene = random_scene(rng, 15);
    FrvoStepStats stats;
    for (int step = 0; step < 150; ++step) {
      scene.states = frvo_step(scene.states, scene.goals, params, &stats);
      for (std::size_t i = 0; i < scene.states.size(); ++i) {
        ASSERT_LE(norm(scene.states[i].v), params.v_max + 1e-7);
        for (std::size_t j = i + 1; j < scene.states.size(); ++j) {
          const bool hit = polygons_overlap(agent_polygon(scene.states[i], params.polygon_k),
                                            agent_polygon(scene.states[j], params.polygon_k));
          ASSERT_FALSE(hit && stats.infeasible == 0)
              << "trial " << trial << " step " << step << " pair " << i << "," << j;
        }
      }
    }
    clean_rollouts += stats.infeasible == 0 ? 1 : 0;
  }
  EXPECT_GE(clean_rollouts, 5);
}

TEST(FrvoState, FlattensToEightEntries) {
  PedestrianState s;
  s.x = {1, 2};
  s.v = {3, 4};
  s.v_pref = {5, 6};
  s.l = 7;
  s.w = 8;
  const auto f = s.flatten();
  EXPECT_EQ(f.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(f[i], static_cast<double>(i + 1));
}

TEST(PredictBbox, Transport) {
  PedestrianState s = at({2.0, 3.0});
  const BoundingBox still = predict_bbox(s, 1.0, 10.0, {0, 0});
  PedestrianState moving = s;
  moving.v = {1.0, 0.0};
  const BoundingBox moved = predict_bbox(moving, 1.0, 10.0, {0, 0});
  EXPECT_NEAR(moved.left - still.left, 10.0, 1e-9);
  EXPECT_NEAR(moved.top, still.top, 1e-9);
  EXPECT_NEAR(moved.width, still.width, 1e-9);
  // Zero velocity reproduces the current box.
  const BoundingBox now = predict_bbox(s, 0.0, 10.0, {0, 0});
  EXPECT_EQ(now, still);
  EXPECT_THROW(predict_bbox(s, 1.0, 0.0, {0, 0}), Error);
}

TEST(PredictBbox, TightlyBoundsPolygon) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    PedestrianState s = at({uniform(rng, 0, 10), uniform(rng, 0, 10)}, testing::random_in_disc(rng, 2.0));
    s.l = uniform(rng, 0.2, 0.5);
    s.w = uniform(rng, 0.3, 0.6);
    const double scale = uniform(rng, 20.0, 200.0);
    const Vec2 origin{uniform(rng, -1, 1), uniform(rng, -1, 1)};
    const BoundingBox b = predict_bbox(s, 0.1, scale, origin);
    PedestrianState adv = s;
    adv.x = s.x + s.v * 0.1;
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const Vec2 v : agent_polygon(adv, 8).vertices()) {
      const Vec2 p = (v - origin) * scale;
      lo_x = std::min(lo_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_x = std::max(hi_x, p.x);
      hi_y = std::max(hi_y, p.y);
      EXPECT_GE(p.x, b.left - 1e-9);
      EXPECT_LE(p.x, b.right() + 1e-9);
      EXPECT_GE(p.y, b.top - 1e-9);
      EXPECT_LE(p.y, b.bottom() + 1e-9);
    }
    EXPECT_NEAR(lo_x, b.left, 1.0);
    EXPECT_NEAR(hi_x, b.right(), 1.0);
    EXPECT_NEAR(lo_y, b.top, 1.0);
    EXPECT_NEAR(hi_y, b.bottom(), 1.0);
  }
}

}  // namespace
}  // namespace densetrack
