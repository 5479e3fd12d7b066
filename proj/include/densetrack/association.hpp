#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "densetrack/features.hpp"

namespace densetrack {

// Rows are tracks, columns detections. Only admissible entries may be matched.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double cost(std::size_t r, std::size_t c) const { return costs_[r * cols_ + c]; }
  bool admissible(std::size_t r, std::size_t c) const { return gate_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, double cost, bool admissible);
  void gate_out(std::size_t r, std::size_t c) { gate_[r * cols_ + c] = 0; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> costs_;
  std::vector<std::uint8_t> gate_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track, detection), sorted by track
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

double iou(const BoundingBox& a, const BoundingBox& b);

// cost(i, j) = min over gallery i of cosine_distance to detection j; gated
// where the cost exceeds lambda, the gallery is empty or a feature is
// degenerate.
CostMatrix build_cosine_costs(std::span<const std::vector<FeatureVector>> galleries,
                              std::span<const FeatureVector> detections, double lambda);

// cost(i, j) = 1 - iou; gated where iou < min_iou.
CostMatrix build_iou_costs(std::span<const BoundingBox> predicted,
                           std::span<const BoundingBox> detected, double min_iou);

// Square padding with a 1e6 sentinel: the result has the largest possible
// number of admissible matches and, among those, the smallest total cost.
Assignment hungarian(const CostMatrix& costs);

struct CascadeTrack {
  const std::vector<FeatureVector>* gallery = nullptr;
  BoundingBox predicted;
  bool confirmed = false;
  // Per-track spatial gate (px); <= 0 falls back to CascadeParams::gate_radius.
  double gate_radius = 0.0;
  // Frames since the last update; stage 1 serves lower values first.
  int misses = 0;
};

struct CascadeParams {
  double lambda = 0.4;
  double min_iou = 0.3;
  // Appearance candidates must lie within this centre distance (px) of the
  // predicted box; <= 0 disables the spatial gate.
  double gate_radius = 0.0;
};

// Stage 1 matches confirmed tracks by appearance, in increasing order of
// misses; stage 2 matches the remaining tracks and detections by overlap.
Assignment match_cascade(std::span<const CascadeTrack> tracks,
                         std::span<const BoundingBox> detection_boxes,
                         std::span<const FeatureVector> detection_features, const CascadeParams& params);

}  // namespace densetrack
