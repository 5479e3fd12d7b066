#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densetrack/features.hpp"
#include "densetrack/frvo.hpp"
#include "densetrack/mot_io.hpp"

namespace densetrack {

enum class GeneratorModel { kFrvo, kConstVel };

struct ScenarioAgent {
  PedestrianState initial;
  Goal goal;
};

struct Scenario {
  std::string name = "scenario";
  double arena_width = 10.0;   // m
  double arena_height = 10.0;  // m
  std::vector<ScenarioAgent> agents;
  std::size_t duration = 300;  // frames
  double fps = 10.0;
  double px_per_m = 40.0;
  std::uint64_t seed = 0;
  GeneratorModel generator = GeneratorModel::kFrvo;
  // Agents leave the scene once they reach their goal; otherwise they stay
  // standing there.
  bool remove_arrived = false;
  // Upward image extent of a standing person seen by an elevated camera (m).
  // Bodies hide what lies behind them; 0 renders footprints only.
  double body_height = 0.0;

  void validate() const;
};

struct NoiseModel {
  double dropout_rate = 0.0;
  double bbox_jitter_sigma = 0.0;        // px, per box corner coordinate
  // Suppress a detection when its silhouette box overlaps a nearer one's by
  // more than this IoU; 1 disables.
  double occlusion_iou_suppress = 1.0;
  double feature_noise_sigma = 0.0;      // Gaussian noise on rendered intensities

  void validate() const;
};

// Agents per occupied area: convex hull of the centres dilated by the mean
// agent radius (mean of (l + w) / 4).
double achieved_density(std::span<const PedestrianState> states);

// Procedural scenarios. Throw Error(kConfiguration) when the arena cannot
// hold the requested layout.
Scenario antipodal_circle_scenario(int agents, double radius, std::uint64_t seed);
// Agents on a jittered lattice whose achieved density matches `density`,
// walking along +x to goals `travel` metres ahead at mixed speeds; agents
// leave on arrival.
Scenario corridor_scenario(int agents, double density, double travel, std::uint64_t seed,
                           double arena_width = 24.0, double arena_height = 8.0);
// Two groups crossing at right angles through the arena centre.
Scenario crossing_scenario(int agents_per_group, double density, std::uint64_t seed);

struct Trajectories {
  // states[f][k] for the agents present in frame f + 1; ids[f][k] is the
  // 1-based agent id.
  std::vector<std::vector<PedestrianState>> states;
  std::vector<std::vector<int>> ids;
  std::vector<std::optional<std::size_t>> arrival_frame;  // per agent, 1-based
  std::size_t overlapping_pairs = 0;  // pair-frames with intersecting polygons
  std::size_t infeasible_steps = 0;   // agent-steps whose LP fell back
  double initial_density = 0.0;
};

// Rolls the generator for scenario.duration frames; frame 1 holds the
// initial states. Deterministic.
Trajectories generate(const Scenario& scenario, const FrvoParams& params);

// Pixel-space box of the agent polygon.
BoundingBox agent_bbox(const PedestrianState& state, double px_per_m, int k = 8);

// True where pixel centres of the grid covering `bbox` fall inside the
// oriented ellipse of `state` (pixel = world * px_per_m).
Mask rasterize_mask(const PedestrianState& state, double px_per_m, const BoundingBox& bbox);

// Deterministic grayscale texture of agent `id` at body-normalised
// coordinates (u, v) in [-1, 1]^2.
float agent_texture(int id, double u, double v);
// Static floor pattern at a world point.
float background_intensity(Vec2 world);

struct RenderedFrame {
  std::vector<PedestrianState> states;
  std::vector<int> ids;
  double body_height = 0.0;  // m, see Scenario::body_height
};

// Samples the scene over the grid covering `bbox`; nearer (larger y)
// silhouettes are drawn on top.
Patch render_patch(const RenderedFrame& frame, double px_per_m, const BoundingBox& bbox);

// Footprint box grown upward by the body height (px).
BoundingBox silhouette_box(const BoundingBox& footprint, double body_px);

struct SimOutput {
  SeqInfo info;
  MotSequence gt;
  MotSequence detections;
  MaskTable masks;
  PatchTable patches;
  Trajectories trajectories;
};

// Ground truth plus corrupted detections: occlusion suppression, dropout,
// corner jitter, then footprint masks and rendered patches for every
// surviving detection. Boxes are footprint boxes.
SimOutput simulate(const Scenario& scenario, const FrvoParams& params, const NoiseModel& noise);

// Writes seqinfo.ini, gt/gt.txt, det/det.txt, det/masks.txt, det/patches.bin.
void write_sequence(const std::filesystem::path& dir, const SimOutput& out);

// Scenario document: {"name", "kind": "explicit"|"circle"|"corridor"|"crossing",
// kind-specific fields, "duration", "fps", "px_per_m", "seed", "generator",
// "remove_arrived", "body_height", "noise": {...}}. Unknown keys are rejected with Error(kConfiguration).
struct ScenarioDocument {
  Scenario scenario;
  NoiseModel noise;
};
// Sets the noise keys present in `overlay`; unknown keys throw
// Error(kConfiguration).
void apply_noise(NoiseModel& noise, const nlohmann::json& overlay);
ScenarioDocument scenario_from_json(const nlohmann::json& doc);
ScenarioDocument load_scenario(const std::filesystem::path& path);

}  // namespace densetrack
