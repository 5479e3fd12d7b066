#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "densetrack/association.hpp"
#include "densetrack/features.hpp"
#include "densetrack/frvo.hpp"
#include "densetrack/mot_io.hpp"

namespace densetrack {

enum class MotionModel { kFrvo, kConstVel, kNone };
enum class FeatureMode { kSegmented, kBbox };

MotionModel parse_motion_model(const std::string& name);
FeatureMode parse_feature_mode(const std::string& name);
const char* to_string(MotionModel m);
const char* to_string(FeatureMode m);

struct TrackerConfig {
  int xi = 30;  // frames without update before a confirmed track is deleted (mu > xi)
  double lambda = 0.4;
  double min_iou = 0.3;
  int n_init = 3;
  FrvoParams frvo;  // frvo.dt is the frame interval
  double px_per_m = 40.0;
  std::size_t feature_dim = 128;
  std::size_t gallery_size = 30;
  MotionModel motion = MotionModel::kFrvo;
  FeatureMode features = FeatureMode::kSegmented;
  int velocity_window = 5;  // frames of history behind the preferred velocity
  // Appearance candidates must lie within this distance of the predicted
  // position; the radius grows by v_max * dt per missed frame, up to rho.
  double gate_base_m = 0.3;
  // Confirmed tracks are reported for at most this many missed frames, at
  // their predicted box; < 0 reports them until deletion.
  int max_coast_output = -1;

  void validate() const;
};

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

struct Track {
  int id = 0;
  PedestrianState state;
  BoundingBox bbox;      // last observed box
  BoundingBox predicted; // box predicted for the current frame
  std::vector<FeatureVector> gallery;  // newest last, at most gallery_size
  int mu = 0;
  int age = 0;
  int hits = 0;
  TrackStatus status = TrackStatus::kTentative;
  std::deque<Vec2> observed;  // recent observed positions (m), newest last
  std::deque<int> observed_frame;
};

struct Detection {
  BoundingBox bbox;
  double confidence = 1.0;
  std::optional<Mask> mask;
  FeatureVector feature;
};

// Builds the detection and its descriptor. Segmented mode requires a mask;
// bbox mode uses the whole box. Without a patch the feature is degenerate
// and the detection can only be matched by overlap.
Detection make_detection(const BoundingBox& bbox, double confidence, const std::optional<Mask>& mask,
                         const std::optional<Patch>& patch, FeatureMode mode, std::size_t dim);

struct TrackerStats {
  std::size_t frames = 0;
  std::size_t tracks_created = 0;
  std::size_t tracks_confirmed = 0;
  std::size_t tracks_deleted = 0;
  std::size_t lp_infeasible = 0;  // agent-steps whose FRVO LP fell back
  std::size_t lp_solves = 0;
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig config);

  // One frame: predict, associate, update, manage lifecycle. Returns every
  // confirmed track: the observed box when updated, else the predicted one.
  std::vector<LabeledBox> step(std::span<const Detection> detections);

  // Live tracks (tentative and confirmed).
  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerStats& stats() const { return stats_; }
  const TrackerConfig& config() const { return config_; }

 private:
  void predict();
  void update(Track& track, const Detection& det);
  Track spawn(const Detection& det);

  TrackerConfig config_;
  std::vector<Track> tracks_;
  TrackerStats stats_;
  int next_id_ = 1;
  int frame_ = 0;
};

struct SequenceResult {
  MotSequence hypothesis;
  TrackerStats stats;
  std::size_t ids = 0;
  double seconds = 0.0;  // wall time of the tracking loop
};

// Runs the tracker over per-frame detections.
SequenceResult run_sequence(std::span<const std::vector<Detection>> frames, const TrackerConfig& config);

// Detections from a detection sequence and its side tables (either table may
// be empty). Throws Error(kConfiguration) when segmented features are
// requested and a mask is missing.
std::vector<std::vector<Detection>> build_detections(const MotSequence& det, const MaskTable& masks,
                                                     const PatchTable& patches, FeatureMode mode,
                                                     std::size_t dim);

// Loads det.txt (+ masks, patches when present) and builds detections, one
// list per frame of seqinfo.ini when that file exists.
// Throws Error(kConfiguration) when segmented features are requested and the
// sequence has no masks.
std::vector<std::vector<Detection>> load_detections(const SequencePaths& paths, FeatureMode mode,
                                                    std::size_t dim);

}  // namespace densetrack
