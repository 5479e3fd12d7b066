#include "densetrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

constexpr double kMinExtent = 0.2;  // m
constexpr double kMaxExtent = 2.5;  // m

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, what);
}

BoundingBox recentred(const BoundingBox& box, Vec2 center) {
  return {center.x - 0.5 * box.width, center.y - 0.5 * box.height, box.width, box.height};
}

// Ellipse axes (l along theta, w across) whose axis-aligned box has the
// given extents. Returns false near 45 degrees, where the extents do not
// separate the two axes.
bool shape_from_box(double width, double height, double theta, double& l, double& w) {
  const double c2 = std::cos(theta) * std::cos(theta);
  const double s2 = 1.0 - c2;
  const double det = c2 - s2;
  if (std::abs(det) < 0.3) return false;
  const double hx2 = 0.25 * width * width;
  const double hy2 = 0.25 * height * height;
  const double a2 = (hx2 * c2 - hy2 * s2) / det;
  const double b2 = (hy2 * c2 - hx2 * s2) / det;
  if (!(a2 > 0.0) || !(b2 > 0.0)) return false;
  l = 2.0 * std::sqrt(a2);
  w = 2.0 * std::sqrt(b2);
  return true;
}

}  // namespace

MotionModel parse_motion_model(const std::string& name) {
  if (name == "frvo") return MotionModel::kFrvo;
  if (name == "constvel") return MotionModel::kConstVel;
  if (name == "none") return MotionModel::kNone;
  throw Error(ErrorCode::kConfiguration, "unknown motion model '" + name + "' (frvo|constvel|none)");
}

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "segmented") return FeatureMode::kSegmented;
  if (name == "bbox") return FeatureMode::kBbox;
  throw Error(ErrorCode::kConfiguration, "unknown feature mode '" + name + "' (segmented|bbox)");
}

const char* to_string(MotionModel m) {
  switch (m) {
    case MotionModel::kFrvo: return "frvo";
    case MotionModel::kConstVel: return "constvel";
    case MotionModel::kNone: return "none";
  }
  return "?";
}

const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::kSegmented: return "segmented";
    case FeatureMode::kBbox: return "bbox";
  }
  return "?";
}

void TrackerConfig::validate() const {
  if (xi < 1) invalid("xi must be >= 1");
  if (n_init < 1) invalid("n_init must be >= 1");
  if (!(lambda > 0.0 && lambda < 2.0)) invalid("lambda must lie in (0, 2)");
  if (!(min_iou >= 0.0 && min_iou < 1.0)) invalid("min_iou must lie in [0, 1)");
  if (!(px_per_m > 0.0)) invalid("px_per_m must be positive");
  if (gallery_size < 1) invalid("gallery_size must be >= 1");
  if (velocity_window < 1) invalid("velocity_window must be >= 1");
  if (!(gate_base_m > 0.0)) invalid("gate_base_m must be positive");
  FeatureLayout::for_dimension(feature_dim);
  frvo.validate();
}

Detection make_detection(const BoundingBox& bbox, double confidence, const std::optional<Mask>& mask,
                         const std::optional<Patch>& patch, FeatureMode mode, std::size_t dim) {
  const int rows = grid_rows(bbox);
  const int cols = grid_cols(bbox);
  Detection det;
  det.bbox = bbox;
  det.confidence = confidence;
  if (mode == FeatureMode::kSegmented) {
    if (!mask) throw Error(ErrorCode::kConfiguration, "segmented features need a detection mask");
    det.mask = *mask;
  } else {
    det.mask = Mask(rows, cols, true);
  }
  if (det.mask->rows() != rows || det.mask->cols() != cols) invalid("mask does not cover the detection box");
  if (!patch) {
    det.feature.values.assign(dim, 0.0);
    det.feature.sparsity = dim;
    det.feature.degenerate = true;
    return det;
  }
  det.feature = extract_feature(segment_box(*patch, *det.mask, bbox), dim);
  return det;
}

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)) { config_.validate(); }

void Tracker::predict() {
  const double dt = config_.frvo.dt;
  std::vector<Vec2> v_recent(tracks_.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    const Track& t = tracks_[i];
    if (t.observed.size() >= 2) {
      const double span = dt * (t.observed_frame.back() - t.observed_frame.front());
      v_recent[i] = (t.observed.back() - t.observed.front()) / span;
    } else {
      v_recent[i] = t.state.v;
    }
  }

  switch (config_.motion) {
    case MotionModel::kFrvo: {
      std::vector<PedestrianState> states;
      std::vector<Goal> goals;
      states.reserve(tracks_.size());
      goals.reserve(tracks_.size());
      for (std::size_t i = 0; i < tracks_.size(); ++i) {
        states.push_back(tracks_[i].state);
        const double speed = norm(v_recent[i]);
        goals.push_back({tracks_[i].state.x + v_recent[i] * config_.frvo.tau, speed});
      }
      FrvoStepStats stats;
      const std::vector<PedestrianState> next = frvo_step(states, goals, config_.frvo, &stats);
      stats_.lp_infeasible += stats.infeasible;
      stats_.lp_solves += states.size();
      for (std::size_t i = 0; i < tracks_.size(); ++i) tracks_[i].state = next[i];
      break;
    }
    case MotionModel::kConstVel:
      for (Track& t : tracks_) t.state.x = t.state.x + t.state.v * dt;
      break;
    case MotionModel::kNone:
      break;
  }
  for (Track& t : tracks_) t.predicted = recentred(t.bbox, t.state.x * config_.px_per_m);
}

void Tracker::update(Track& track, const Detection& det) {
  const Vec2 p = det.bbox.center() / config_.px_per_m;
  if (!track.observed.empty()) {
    track.state.v = (p - track.observed.back()) / (config_.frvo.dt * (frame_ - track.observed_frame.back()));
  }
  track.state.x = p;
  // The polygon is oriented along the motion, so the box extents are read
  // back through that orientation.
  double l = 0.0;
  double w = 0.0;
  if (shape_from_box(det.bbox.width / config_.px_per_m, det.bbox.height / config_.px_per_m,
                     agent_orientation(track.state), l, w)) {
    track.state.l = std::clamp(l, kMinExtent, kMaxExtent);
    track.state.w = std::clamp(w, kMinExtent, kMaxExtent);
  } else if (track.observed.empty()) {
    track.state.l = std::clamp(det.bbox.width / config_.px_per_m, kMinExtent, kMaxExtent);
    track.state.w = std::clamp(det.bbox.height / config_.px_per_m, kMinExtent, kMaxExtent);
  }
  track.bbox = det.bbox;
  track.observed.push_back(p);
  track.observed_frame.push_back(frame_);
  while (static_cast<int>(track.observed.size()) > config_.velocity_window + 1) {
    track.observed.pop_front();
    track.observed_frame.pop_front();
  }
  if (!det.feature.degenerate) {
    track.gallery.push_back(det.feature);
    if (track.gallery.size() > config_.gallery_size) track.gallery.erase(track.gallery.begin());
  }
  track.mu = 0;
  ++track.hits;
  if (track.status == TrackStatus::kTentative && track.hits >= config_.n_init) {
    track.status = TrackStatus::kConfirmed;
    ++stats_.tracks_confirmed;
  }
}

Track Tracker::spawn(const Detection& det) {
  Track t;
  t.id = next_id_++;
  t.age = 1;
  t.state.x = det.bbox.center() / config_.px_per_m;
  t.state.v = {};
  t.state.v_pref = {};
  t.predicted = det.bbox;
  ++stats_.tracks_created;
  // hits starts at 0 so update() accounts for the first observation.
  update(t, det);
  // Warm-up: nothing precedes the first frames, so tracks born there cannot
  // have completed n_init hits; confirm them at birth.
  if (t.status == TrackStatus::kTentative && frame_ < config_.n_init) {
    t.status = TrackStatus::kConfirmed;
    ++stats_.tracks_confirmed;
  }
  return t;
}

std::vector<LabeledBox> Tracker::step(std::span<const Detection> detections) {
  ++frame_;
  ++stats_.frames;
  for (Track& t : tracks_) ++t.age;
  if (!tracks_.empty()) predict();

  std::vector<CascadeTrack> cascade;
  cascade.reserve(tracks_.size());
  for (const Track& t : tracks_) {
    const double gate_m =
        std::min(config_.frvo.rho, config_.gate_base_m + config_.frvo.v_max * config_.frvo.dt * t.mu);
    cascade.push_back({&t.gallery, t.predicted, t.status == TrackStatus::kConfirmed, gate_m * config_.px_per_m, t.mu});
  }
  std::vector<BoundingBox> boxes;
  std::vector<FeatureVector> features;
  boxes.reserve(detections.size());
  features.reserve(detections.size());
  for (const Detection& d : detections) {
    boxes.push_back(d.bbox);
    features.push_back(d.feature);
  }
  CascadeParams params;
  params.lambda = config_.lambda;
  params.min_iou = config_.min_iou;
  params.gate_radius = config_.frvo.rho * config_.px_per_m;
  const Assignment assignment = match_cascade(cascade, boxes, features, params);

  for (const auto& [ti, dj] : assignment.matches) update(tracks_[ti], detections[dj]);
  for (const std::size_t ti : assignment.unmatched_tracks) {
    Track& t = tracks_[ti];
    ++t.mu;
    if (t.status == TrackStatus::kTentative || t.mu > config_.xi) {
      t.status = TrackStatus::kDeleted;
      ++stats_.tracks_deleted;
    }
  }
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::kDeleted; });
  for (const std::size_t dj : assignment.unmatched_detections) tracks_.push_back(spawn(detections[dj]));

  std::vector<LabeledBox> out;
  for (const Track& t : tracks_) {
    if (t.status == TrackStatus::kConfirmed && (config_.max_coast_output < 0 || t.mu <= config_.max_coast_output)) out.push_back({t.id, t.mu == 0 ? t.bbox : t.predicted, 1.0});
  }
  std::sort(out.begin(), out.end(), [](const LabeledBox& a, const LabeledBox& b) { return a.id < b.id; });
  return out;
}

SequenceResult run_sequence(std::span<const std::vector<Detection>> frames, const TrackerConfig& config) {
  Tracker tracker(config);
  SequenceResult result;
  result.hypothesis.ensure_frames(frames.size());
  std::set<int> ids;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    result.hypothesis.frames[f] = tracker.step(frames[f]);
    for (const LabeledBox& b : result.hypothesis.frames[f]) ids.insert(b.id);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.stats = tracker.stats();
  result.ids = ids.size();
  return result;
}

std::vector<std::vector<Detection>> build_detections(const MotSequence& det, const MaskTable& masks,
                                                     const PatchTable& patches, FeatureMode mode,
                                                     std::size_t dim) {
  std::vector<std::vector<Detection>> frames(det.frame_count());
  for (std::size_t f = 0; f < det.frame_count(); ++f) {
    for (std::size_t j = 0; j < det.frames[f].size(); ++j) {
      const LabeledBox& row = det.frames[f][j];
      const std::optional<Mask> mask = f < masks.size() && j < masks[f].size() ? masks[f][j] : std::nullopt;
      const std::optional<Patch> patch =
          f < patches.size() && j < patches[f].size() ? patches[f][j] : std::nullopt;
      if (mode == FeatureMode::kSegmented && !mask) {
        throw Error(ErrorCode::kConfiguration, "frame " + std::to_string(f + 1) + " detection " +
                                                   std::to_string(j) + " has no mask");
      }
      try {
        frames[f].push_back(make_detection(row.box, row.confidence, mask, patch, mode, dim));
      } catch (const Error& e) {
        throw Error(e.code(), "frame " + std::to_string(f + 1) + " detection " + std::to_string(j) + ": " + e.what());
      }
    }
  }
  return frames;
}

std::vector<std::vector<Detection>> load_detections(const SequencePaths& paths, FeatureMode mode,
                                                    std::size_t dim) {
  MotSequence det = read_detections(paths.det());
  // Trailing frames without detections still count.
  if (std::filesystem::exists(paths.seqinfo())) det.ensure_frames(read_seqinfo(paths.seqinfo()).length);
  MaskTable masks;
  if (std::filesystem::exists(paths.masks())) {
    masks = read_masks(paths.masks(), det);
  } else if (mode == FeatureMode::kSegmented) {
    throw Error(ErrorCode::kConfiguration,
                "segmented features requested but " + paths.masks().string() + " does not exist");
  }
  PatchTable patches;
  if (std::filesystem::exists(paths.patches())) patches = read_patches(paths.patches(), det);
  return build_detections(det, masks, patches, mode, dim);
}

}  // namespace densetrack
