#include "densetrack/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "densetrack/association.hpp"
#include "densetrack/error.hpp"

namespace densetrack {

namespace {

[[noreturn]] void configuration(const std::string& what) {
  throw Error(ErrorCode::kConfiguration, what);
}

constexpr double kDefaultL = 0.3;
constexpr double kDefaultW = 0.45;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent generator per (seed, stream name).
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kLayoutStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

double mean_radius(std::span<const PedestrianState> states) {
  double s = 0.0;
  for (const auto& p : states) s += 0.25 * (p.l + p.w);
  return states.empty() ? 0.0 : s / static_cast<double>(states.size());
}

ScenarioAgent walker(Vec2 start, Vec2 goal, double speed) {
  ScenarioAgent a;
  a.initial.x = start;
  a.initial.l = kDefaultL;
  a.initial.w = kDefaultW;
  a.goal = {goal, speed};
  a.initial.v_pref = preferred_velocity(a.initial, a.goal, 0.0);
  a.initial.v = a.initial.v_pref;
  return a;
}

// Jittered lattice of `rows` x `cols` points about the origin, scaled so the
// achieved density of agents placed there equals `density`.
std::vector<Vec2> dense_block(int rows, int cols, int count, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.04, 0.04);
  std::vector<Vec2> unit;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      unit.push_back({c - 0.5 * (cols - 1) + jitter(rng), r - 0.5 * (rows - 1) + jitter(rng)});
    }
  }
  unit.resize(static_cast<std::size_t>(count));
  const auto density_at = [&](double s) {
    std::vector<PedestrianState> st(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) {
      st[i].x = unit[i] * s;
      st[i].l = kDefaultL;
      st[i].w = kDefaultW;
    }
    return achieved_density(st);
  };
  // Density decreases with spacing; bisect.
  double lo = 0.05;
  double hi = 20.0;
  if (density_at(lo) < density) configuration("requested density is not reachable with this agent count");
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (density_at(mid) > density ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  // Shoulder-to-shoulder clearance.
  if (s * (1.0 - 0.08) < kDefaultW + 0.02) configuration("density too high: agents would overlap");
  for (Vec2& p : unit) p = p * s;
  return unit;
}

void check_inside(const Scenario& s, Vec2 p, const char* what) {
  if (p.x < 0.0 || p.y < 0.0 || p.x > s.arena_width || p.y > s.arena_height) {
    configuration(std::string("arena too small: ") + what + " falls outside it");
  }
}

}  // namespace

void Scenario::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) configuration("fps must be positive");
  if (!(px_per_m > 0.0) || !std::isfinite(px_per_m)) configuration("px_per_m must be positive");
  if (!(arena_width > 0.0) || !(arena_height > 0.0)) configuration("arena dimensions must be positive");
  if (!(body_height >= 0.0) || !std::isfinite(body_height)) configuration("body_height must be non-negative");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    if (!is_finite(a.initial.x) || !is_finite(a.goal.position) || !is_finite(a.initial.v)) {
      configuration("agent " + std::to_string(i + 1) + " has a non-finite position");
    }
    if (!(a.initial.l > 0.0) || !(a.initial.w > 0.0)) configuration("agent extents must be positive");
    if (!(a.goal.preferred_speed >= 0.0)) configuration("preferred speed must be non-negative");
    check_inside(*this, a.initial.x, "an agent start");
    check_inside(*this, a.goal.position, "an agent goal");
  }
}

void NoiseModel::validate() const {
  const auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!unit(dropout_rate)) configuration("dropout_rate must lie in [0, 1]");
  if (!unit(occlusion_iou_suppress)) configuration("occlusion_iou_suppress must lie in [0, 1]");
  if (!(bbox_jitter_sigma >= 0.0)) configuration("bbox_jitter_sigma must be non-negative");
  if (!(feature_noise_sigma >= 0.0)) configuration("feature_noise_sigma must be non-negative");
}

double achieved_density(std::span<const PedestrianState> states) {
  if (states.empty()) return 0.0;
  const double r = mean_radius(states);
  std::vector<Vec2> centres;
  centres.reserve(states.size());
  for (const auto& s : states) centres.push_back(s.x);
  double area = std::numbers::pi * r * r;
  try {
    const ConvexPolygon hull = convex_hull(centres);
    double perimeter = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) perimeter += norm(hull[(i + 1) % hull.size()] - hull[i]);
    area += hull.area() + perimeter * r;
  } catch (const Error&) {
    // Collinear or coincident centres: a capsule around their extent.
    double extent = 0.0;
    for (const Vec2 a : centres) {
      for (const Vec2 b : centres) extent = std::max(extent, norm(a - b));
    }
    area += 2.0 * r * extent;
  }
  return static_cast<double>(states.size()) / area;
}

Scenario antipodal_circle_scenario(int agents, double radius, std::uint64_t seed) {
  if (agents < 1) configuration("circle scenario needs at least one agent");
  if (!(radius > 0.0)) configuration("circle radius must be positive");
  Scenario s;
  s.name = "circle";
  s.seed = seed;
  s.arena_width = s.arena_height = 2.0 * radius + 2.0;
  const Vec2 centre{radius + 1.0, radius + 1.0};
  std::mt19937_64 rng = substream(seed, kLayoutStream);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  for (int k = 0; k < agents; ++k) {
    const double a = 2.0 * std::numbers::pi * k / agents;
    const Vec2 d{std::cos(a), std::sin(a)};
    const Vec2 start = centre + d * radius + Vec2{jitter(rng), jitter(rng)};
    s.agents.push_back(walker(start, centre - d * radius, 1.3));
  }
  if (agents > 1 && 2.0 * radius * std::sin(std::numbers::pi / agents) < kDefaultW + 0.05) {
    configuration("circle too small for the agent count");
  }
  return s;
}

Scenario corridor_scenario(int agents, double density, double travel, std::uint64_t seed, double arena_width,
                           double arena_height) {
  if (agents < 3) configuration("corridor scenario needs at least three agents");
  if (!(density > 0.0) || !(travel > 0.0)) configuration("density and travel must be positive");
  Scenario s;
  s.name = "corridor";
  s.seed = seed;
  // People leave the corridor at its far end.
  s.remove_arrived = true;
  s.arena_width = arena_width;
  s.arena_height = arena_height;
  std::mt19937_64 rng = substream(seed, kLayoutStream);
  const int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(agents / 2.5))));
  const int cols = (agents + rows - 1) / rows;
  const std::vector<Vec2> block = dense_block(rows, cols, agents, density, rng);
  double min_x = block.front().x;
  for (const Vec2 p : block) min_x = std::min(min_x, p.x);
  std::uniform_real_distribution<double> speed(1.0, 1.4);
  const Vec2 offset{1.0 - min_x, 0.5 * arena_height};
  for (const Vec2 p : block) {
    const Vec2 start = p + offset;
    s.agents.push_back(walker(start, start + Vec2{travel, 0.0}, speed(rng)));
  }
  s.validate();
  return s;
}

Scenario crossing_scenario(int agents_per_group, double density, std::uint64_t seed) {
  if (agents_per_group < 3) configuration("crossing scenario needs at least three agents per group");
  Scenario s;
  s.name = "crossing";
  s.seed = seed;
  std::mt19937_64 rng = substream(seed, kLayoutStream);
  const int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(agents_per_group / 2.0))));
  const int cols = (agents_per_group + rows - 1) / rows;
  const std::vector<Vec2> a = dense_block(rows, cols, agents_per_group, density, rng);
  const std::vector<Vec2> b = dense_block(rows, cols, agents_per_group, density, rng);
  double half = 0.0;
  for (const Vec2 p : a) half = std::max({half, std::fabs(p.x), std::fabs(p.y)});
  const double lead = half + 1.5;   // block centre to crossing point
  const double side = 2.0 * (lead + half) + 2.0;
  s.arena_width = s.arena_height = side;
  const Vec2 centre{0.5 * side, 0.5 * side};
  std::uniform_real_distribution<double> speed(1.1, 1.4);
  for (const Vec2 p : a) {
    const Vec2 start = centre + Vec2{-lead, 0.0} + p;
    s.agents.push_back(walker(start, start + Vec2{2.0 * lead, 0.0}, speed(rng)));
  }
  for (const Vec2 p : b) {
    // Rotated block walking along +y.
    const Vec2 start = centre + Vec2{0.0, -lead} + Vec2{p.y, p.x};
    s.agents.push_back(walker(start, start + Vec2{0.0, 2.0 * lead}, speed(rng)));
  }
  s.validate();
  return s;
}

Trajectories generate(const Scenario& scenario, const FrvoParams& params) {
  scenario.validate();
  FrvoParams p = params;
  p.dt = 1.0 / scenario.fps;
  p.validate();

  const std::size_t n = scenario.agents.size();
  Trajectories out;
  out.arrival_frame.assign(n, std::nullopt);
  std::vector<std::size_t> present(n);
  for (std::size_t i = 0; i < n; ++i) present[i] = i;
  std::vector<PedestrianState> states(n);
  std::vector<Goal> goals(n);
  for (std::size_t i = 0; i < n; ++i) {
    states[i] = scenario.agents[i].initial;
    goals[i] = scenario.agents[i].goal;
  }
  out.initial_density = achieved_density(states);

  for (std::size_t f = 1; f <= scenario.duration; ++f) {
    std::vector<PedestrianState> now;
    std::vector<int> ids;
    for (const std::size_t i : present) {
      now.push_back(states[i]);
      ids.push_back(static_cast<int>(i) + 1);
    }
    // Collision audit on the polygons the planner reasons about.
    std::vector<ConvexPolygon> polys;
    polys.reserve(now.size());
    for (const auto& st : now) polys.push_back(agent_polygon(st, p.polygon_k));
    for (std::size_t a = 0; a < now.size(); ++a) {
      for (std::size_t b = a + 1; b < now.size(); ++b) {
        const double reach = 0.5 * (std::max(now[a].l, now[a].w) + std::max(now[b].l, now[b].w)) * 1.1;
        if (norm_sq(now[a].x - now[b].x) > reach * reach) continue;
        if (polygons_overlap(polys[a], polys[b])) ++out.overlapping_pairs;
      }
    }
    out.states.push_back(std::move(now));
    out.ids.push_back(std::move(ids));

    std::vector<std::size_t> still;
    for (const std::size_t i : present) {
      const double tol = p.dt * goals[i].preferred_speed + 1e-9;
      if (!out.arrival_frame[i] && norm(states[i].x - goals[i].position) <= tol) out.arrival_frame[i] = f;
      if (!(scenario.remove_arrived && out.arrival_frame[i])) still.push_back(i);
    }
    present = std::move(still);
    if (f == scenario.duration || present.empty()) continue;

    std::vector<PedestrianState> cur;
    std::vector<Goal> cur_goals;
    for (const std::size_t i : present) {
      cur.push_back(states[i]);
      cur_goals.push_back(goals[i]);
    }
    if (scenario.generator == GeneratorModel::kFrvo) {
      FrvoStepStats stats;
      const auto next = frvo_step(cur, cur_goals, p, &stats);
      out.infeasible_steps += stats.infeasible;
      for (std::size_t k = 0; k < present.size(); ++k) states[present[k]] = next[k];
    } else {
      for (std::size_t k = 0; k < present.size(); ++k) {
        PedestrianState& st = states[present[k]];
        st.v_pref = preferred_velocity(st, cur_goals[k], p.dt);
        st.v = st.v_pref;
        st.x = st.x + st.v * p.dt;
      }
    }
  }
  // Frames after everyone left stay empty.
  out.states.resize(scenario.duration);
  out.ids.resize(scenario.duration);
  return out;
}

BoundingBox agent_bbox(const PedestrianState& state, double px_per_m, int k) {
  return predict_bbox(state, 0.0, px_per_m, Vec2{}, k);
}

namespace {

// Inside test for the oriented ellipse at world point q.
bool in_ellipse(const PedestrianState& s, double theta, Vec2 q) {
  const Vec2 d = rotated(q - s.x, -theta);
  const double a = 0.5 * s.l;
  const double b = 0.5 * s.w;
  return (d.x * d.x) / (a * a) + (d.y * d.y) / (b * b) <= 1.0;
}

// Half extents of the ellipse's axis-aligned box (m).
Vec2 ellipse_half_extent(const PedestrianState& s, double theta) {
  const double a = 0.5 * s.l;
  const double b = 0.5 * s.w;
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  return {std::sqrt(a * a * c * c + b * b * sn * sn), std::sqrt(a * a * sn * sn + b * b * c * c)};
}

}  // namespace

Mask rasterize_mask(const PedestrianState& state, double px_per_m, const BoundingBox& bbox) {
  const double theta = agent_orientation(state);
  const int rows = grid_rows(bbox);
  const int cols = grid_cols(bbox);
  Mask m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (in_ellipse(state, theta, grid_pixel_center(bbox, r, c) / px_per_m)) m.set(r, c, true);
    }
  }
  return m;
}

float agent_texture(int id, double u, double v) {
  // 4 x 4 panels, each one of four grey levels picked by two bits of the id
  // hash.
  static constexpr float kLevels[4] = {0.05f, 0.35f, 0.65f, 0.95f};
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(id) * 0x100000001B3ull + 17);
  const int col = std::clamp(static_cast<int>(std::floor((u + 1.0) * 2.0)), 0, 3);
  const int band = std::clamp(static_cast<int>(std::floor((v + 1.0) * 2.0)), 0, 3);
  return kLevels[(h >> (2 * (band * 4 + col))) & 3];
}

float background_intensity(Vec2 world) {
  return static_cast<float>(0.55 + 0.25 * std::sin(2.3 * world.x) * std::cos(1.9 * world.y));
}

namespace {

// Footprint ellipse of one agent swept upward (towards smaller y) by the
// body height: what an elevated camera sees of a standing person.
struct Silhouette {
  const PedestrianState* state = nullptr;
  int id = 0;
  Vec2 half;       // footprint half extents (m)
  double body = 0.0;  // m
  // Quadratic form of the oriented footprint ellipse.
  double qa = 0.0;
  double qb = 0.0;
  double qc = 0.0;

  Silhouette(const PedestrianState& s, int agent_id, double body_height)
      : state(&s), id(agent_id), body(body_height) {
    const double theta = agent_orientation(s);
    half = ellipse_half_extent(s, theta);
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    const double ia = 4.0 / (s.l * s.l);
    const double ib = 4.0 / (s.w * s.w);
    qa = c * c * ia + sn * sn * ib;
    qb = c * sn * (ia - ib);
    qc = sn * sn * ia + c * c * ib;
  }

  bool covers(Vec2 q) const {
    const Vec2 d = q - state->x;
    const double disc = qb * qb * d.x * d.x - qc * (qa * d.x * d.x - 1.0);
    if (disc < 0.0) return false;
    const double root = std::sqrt(disc);
    const double lo = (-qb * d.x - root) / qc;
    const double hi = (-qb * d.x + root) / qc;
    return d.y <= hi && d.y >= lo - body;
  }

  // World-space box of the silhouette.
  bool touches(const BoundingBox& b, double px_per_m) const {
    const Vec2 lo = (state->x - half - Vec2{0.0, body}) * px_per_m;
    const Vec2 hi = (state->x + half) * px_per_m;
    return !(hi.x < b.left || lo.x > b.right() || hi.y < b.top || lo.y > b.bottom());
  }

  float intensity(Vec2 q) const {
    const Vec2 d = q - state->x;
    return agent_texture(id, d.x / half.x, std::clamp(d.y / half.y, -1.0, 1.0));
  }
};

// Silhouettes reaching into `bbox`, nearest (larger y) first.
std::vector<Silhouette> silhouettes_near(const RenderedFrame& frame, double px_per_m, const BoundingBox& bbox) {
  std::vector<Silhouette> near;
  for (std::size_t i = 0; i < frame.states.size(); ++i) {
    Silhouette sil(frame.states[i], frame.ids[i], frame.body_height);
    if (sil.touches(bbox, px_per_m)) near.push_back(sil);
  }
  std::stable_sort(near.begin(), near.end(),
                   [](const Silhouette& a, const Silhouette& b) { return a.state->x.y > b.state->x.y; });
  return near;
}

}  // namespace

Patch render_patch(const RenderedFrame& frame, double px_per_m, const BoundingBox& bbox) {
  const int rows = grid_rows(bbox);
  const int cols = grid_cols(bbox);
  const std::vector<Silhouette> near = silhouettes_near(frame, px_per_m, bbox);
  Patch patch(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Vec2 q = grid_pixel_center(bbox, r, c) / px_per_m;
      float value = background_intensity(q);
      for (const Silhouette& sil : near) {
        if (!sil.covers(q)) continue;
        value = sil.intensity(q);
        break;
      }
      patch.at(r, c) = value;
    }
  }
  return patch;
}

BoundingBox silhouette_box(const BoundingBox& footprint, double body_px) {
  return {footprint.left, footprint.top - body_px, footprint.width, footprint.height + body_px};
}

SimOutput simulate(const Scenario& scenario, const FrvoParams& params, const NoiseModel& noise) {
  noise.validate();
  SimOutput out;
  out.trajectories = generate(scenario, params);
  const Trajectories& tr = out.trajectories;
  out.info.name = scenario.name;
  out.info.fps = scenario.fps;
  out.info.length = scenario.duration;
  out.info.image_width = static_cast<int>(std::lround(scenario.arena_width * scenario.px_per_m));
  out.info.image_height = static_cast<int>(std::lround(scenario.arena_height * scenario.px_per_m));
  out.info.px_per_m = scenario.px_per_m;

  const std::size_t frames = scenario.duration;
  out.gt.ensure_frames(frames);
  out.detections.ensure_frames(frames);
  out.masks.resize(frames);
  out.patches.resize(frames);
  std::mt19937_64 rng = substream(scenario.seed, kNoiseStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int k = params.polygon_k;

  for (std::size_t f = 0; f < frames; ++f) {
    const auto& states = tr.states[f];
    const auto& ids = tr.ids[f];
    std::vector<BoundingBox> boxes;
    for (std::size_t i = 0; i < states.size(); ++i) {
      boxes.push_back(quantize_centi(agent_bbox(states[i], scenario.px_per_m, k)));
      out.gt.frames[f].push_back({ids[i], boxes.back(), 1.0});
    }
    const RenderedFrame scene{states, ids, scenario.body_height};
    const double body_px = scenario.body_height * scenario.px_per_m;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const double drop_draw = unit(rng);
      std::array<double, 4> jitter{};
      for (double& j : jitter) j = noise.bbox_jitter_sigma > 0.0 ? gauss(rng) * noise.bbox_jitter_sigma : 0.0;

      bool occluded = false;
      if (noise.occlusion_iou_suppress < 1.0) {
        for (std::size_t j = 0; j < states.size() && !occluded; ++j) {
          if (j == i || states[j].x.y <= states[i].x.y) continue;
          occluded = iou(silhouette_box(boxes[i], body_px), silhouette_box(boxes[j], body_px)) >
                     noise.occlusion_iou_suppress;
        }
      }
      if (occluded || drop_draw < noise.dropout_rate) continue;

      BoundingBox box = boxes[i];
      if (noise.bbox_jitter_sigma > 0.0) {
        const double l = box.left + jitter[0];
        const double t = box.top + jitter[1];
        const double r = std::max(box.right() + jitter[2], l + 1.0);
        const double b = std::max(box.bottom() + jitter[3], t + 1.0);
        box = quantize_centi(BoundingBox{l, t, r - l, b - t});
      }
      Patch patch = render_patch(scene, scenario.px_per_m, box);
      if (noise.feature_noise_sigma > 0.0) {
        for (float& v : patch.pixels) {
          v = std::clamp(v + static_cast<float>(gauss(rng) * noise.feature_noise_sigma), 0.0f, 1.0f);
        }
      }
      // Byte resolution, as stored on disk.
      for (float& v : patch.pixels) v = static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
      out.detections.frames[f].push_back({-1, box, 1.0});
      out.masks[f].push_back(rasterize_mask(states[i], scenario.px_per_m, box));
      out.patches[f].push_back(std::move(patch));
    }
  }
  return out;
}

void write_sequence(const std::filesystem::path& dir, const SimOutput& out) {
  const SequencePaths paths{dir};
  std::filesystem::create_directories(paths.gt().parent_path());
  std::filesystem::create_directories(paths.det().parent_path());
  write_seqinfo(paths.seqinfo(), out.info);
  const auto open = [](const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
    std::ofstream s(p, mode);
    if (!s) throw Error(ErrorCode::kIo, "cannot write " + p.string());
    return s;
  };
  {
    auto s = open(paths.gt());
    write_gt(s, out.gt);
  }
  {
    auto s = open(paths.det());
    write_detections(s, out.detections);
  }
  {
    auto s = open(paths.masks());
    write_masks(s, out.masks);
  }
  {
    auto s = open(paths.patches(), std::ios::out | std::ios::binary);
    write_patches(s, out.patches);
  }
}

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) configuration(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) configuration("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    configuration(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
T require(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key)) configuration(std::string("missing key '") + key + "'");
  return get_or<T>(obj, key, T{});
}

Vec2 vec(const nlohmann::json& obj, const char* key) {
  const auto v = require<std::vector<double>>(obj, key);
  if (v.size() != 2) configuration(std::string("'") + key + "' must be [x, y]");
  return {v[0], v[1]};
}

}  // namespace

void apply_noise(NoiseModel& noise, const nlohmann::json& overlay) {
  reject_unknown(overlay, {"dropout_rate", "bbox_jitter_sigma", "occlusion_iou_suppress", "feature_noise_sigma"},
                 "noise");
  noise.dropout_rate = get_or<double>(overlay, "dropout_rate", noise.dropout_rate);
  noise.bbox_jitter_sigma = get_or<double>(overlay, "bbox_jitter_sigma", noise.bbox_jitter_sigma);
  noise.occlusion_iou_suppress = get_or<double>(overlay, "occlusion_iou_suppress", noise.occlusion_iou_suppress);
  noise.feature_noise_sigma = get_or<double>(overlay, "feature_noise_sigma", noise.feature_noise_sigma);
}

ScenarioDocument scenario_from_json(const nlohmann::json& doc) {
  const std::set<std::string> common = {"name", "kind", "duration", "fps", "px_per_m", "seed",
                                        "generator", "remove_arrived", "body_height", "noise"};
  const std::string kind = get_or<std::string>(doc, "kind", "explicit");
  std::set<std::string> allowed = common;
  if (kind == "circle") {
    allowed.insert({"agents", "radius"});
  } else if (kind == "corridor") {
    allowed.insert({"agents", "density", "travel", "arena"});
  } else if (kind == "crossing") {
    allowed.insert({"agents_per_group", "density"});
  } else if (kind == "explicit") {
    allowed.insert({"agents", "arena"});
  } else {
    configuration("unknown scenario kind '" + kind + "'");
  }
  reject_unknown(doc, allowed, "scenario");

  const auto seed = get_or<std::uint64_t>(doc, "seed", 0);
  ScenarioDocument out;
  Scenario& s = out.scenario;
  if (kind == "circle") {
    s = antipodal_circle_scenario(get_or<int>(doc, "agents", 8), get_or<double>(doc, "radius", 4.0), seed);
  } else if (kind == "corridor") {
    double w = 24.0;
    double h = 8.0;
    if (doc.contains("arena")) {
      reject_unknown(doc["arena"], {"width", "height"}, "arena");
      w = get_or<double>(doc["arena"], "width", w);
      h = get_or<double>(doc["arena"], "height", h);
    }
    s = corridor_scenario(get_or<int>(doc, "agents", 40), get_or<double>(doc, "density", 2.2),
                          get_or<double>(doc, "travel", 12.0), seed, w, h);
  } else if (kind == "crossing") {
    s = crossing_scenario(get_or<int>(doc, "agents_per_group", 10), get_or<double>(doc, "density", 2.0), seed);
  } else {
    const nlohmann::json& arena = doc.contains("arena") ? doc["arena"] : nlohmann::json::object();
    reject_unknown(arena, {"width", "height"}, "arena");
    s.arena_width = get_or<double>(arena, "width", s.arena_width);
    s.arena_height = get_or<double>(arena, "height", s.arena_height);
    s.seed = seed;
    const nlohmann::json agents = doc.contains("agents") ? doc["agents"] : nlohmann::json::array();
    if (!agents.is_array()) configuration("'agents' must be an array");
    for (const auto& a : agents) {
      reject_unknown(a, {"x", "v", "goal", "speed", "l", "w"}, "agent");
      ScenarioAgent agent = walker(vec(a, "x"), vec(a, "goal"), get_or<double>(a, "speed", 1.3));
      agent.initial.l = get_or<double>(a, "l", kDefaultL);
      agent.initial.w = get_or<double>(a, "w", kDefaultW);
      if (a.contains("v")) agent.initial.v = vec(a, "v");
      s.agents.push_back(agent);
    }
  }
  s.name = get_or<std::string>(doc, "name", s.name);
  const auto duration = get_or<long long>(doc, "duration", static_cast<long long>(s.duration));
  if (duration < 0) configuration("duration must be non-negative");
  s.duration = static_cast<std::size_t>(duration);
  s.fps = get_or<double>(doc, "fps", s.fps);
  s.px_per_m = get_or<double>(doc, "px_per_m", s.px_per_m);
  s.remove_arrived = get_or<bool>(doc, "remove_arrived", s.remove_arrived);
  s.body_height = get_or<double>(doc, "body_height", s.body_height);
  const std::string generator = get_or<std::string>(doc, "generator", "frvo");
  if (generator == "frvo") {
    s.generator = GeneratorModel::kFrvo;
  } else if (generator == "constvel") {
    s.generator = GeneratorModel::kConstVel;
  } else {
    configuration("unknown generator '" + generator + "' (frvo|constvel)");
  }
  if (doc.contains("noise")) apply_noise(out.noise, doc["noise"]);
  s.validate();
  out.noise.validate();
  return out;
}

ScenarioDocument load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace densetrack
