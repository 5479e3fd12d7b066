#include "densetrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

constexpr double kSentinel = 1e6;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, what);
}

Assignment complete(std::vector<std::pair<std::size_t, std::size_t>> matches, std::size_t rows,
                    std::size_t cols) {
  Assignment out;
  std::sort(matches.begin(), matches.end());
  std::vector<bool> row_used(rows, false);
  std::vector<bool> col_used(cols, false);
  for (const auto& [r, c] : matches) {
    row_used[r] = true;
    col_used[c] = true;
  }
  out.matches = std::move(matches);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_used[r]) out.unmatched_tracks.push_back(r);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_used[c]) out.unmatched_detections.push_back(c);
  }
  return out;
}

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), costs_(rows * cols, 0.0), gate_(rows * cols, 0) {}

void CostMatrix::set(std::size_t r, std::size_t c, double cost, bool admissible) {
  costs_[r * cols_ + c] = cost;
  gate_[r * cols_ + c] = admissible && std::isfinite(cost) ? 1 : 0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  // Areas in the same corner arithmetic as the intersection, so identical
  // boxes give exactly 1.
  const double inter = w * h;
  const double area_a = (a.right() - a.left) * (a.bottom() - a.top);
  const double area_b = (b.right() - b.left) * (b.bottom() - b.top);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

namespace {

bool usable(const FeatureVector& f) { return !f.degenerate && f.norm() > 0.0; }

// Smallest cosine distance from `det` to the gallery; infinity when nothing
// is comparable.
double gallery_distance(const std::vector<FeatureVector>& gallery, const FeatureVector& det) {
  double best = std::numeric_limits<double>::infinity();
  for (const FeatureVector& g : gallery) {
    if (usable(g)) best = std::min(best, cosine_distance(g, det));
  }
  return best;
}

}  // namespace

CostMatrix build_cosine_costs(std::span<const std::vector<FeatureVector>> galleries,
                              std::span<const FeatureVector> detections, double lambda) {
  if (!(lambda > 0.0 && lambda < 2.0)) invalid("cosine gate lambda must lie in (0, 2)");
  CostMatrix m(galleries.size(), detections.size());
  for (std::size_t i = 0; i < galleries.size(); ++i) {
    for (std::size_t j = 0; j < detections.size(); ++j) {
      if (!usable(detections[j])) continue;
      const double best = gallery_distance(galleries[i], detections[j]);
      if (std::isfinite(best)) m.set(i, j, best, best <= lambda);
    }
  }
  return m;
}

CostMatrix build_iou_costs(std::span<const BoundingBox> predicted, std::span<const BoundingBox> detected,
                           double min_iou) {
  if (!(min_iou >= 0.0 && min_iou < 1.0)) invalid("min_iou must lie in [0, 1)");
  CostMatrix m(predicted.size(), detected.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < detected.size(); ++j) {
      const double z = iou(predicted[i], detected[j]);
      m.set(i, j, 1.0 - z, z >= min_iou);
    }
  }
  return m;
}

Assignment hungarian(const CostMatrix& costs) {
  const std::size_t rows = costs.rows();
  const std::size_t cols = costs.cols();
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};

  auto a = [&](std::size_t r, std::size_t c) {
    return r < rows && c < cols && costs.admissible(r, c) ? costs.cost(r, c) : kSentinel;
  };

  // Potentials method on a 1-based square matrix; p[j] is the row assigned to
  // column j.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = p[j] - 1;
    const std::size_t c = j - 1;
    if (r < rows && c < cols && costs.admissible(r, c)) matches.emplace_back(r, c);
  }
  return complete(std::move(matches), rows, cols);
}

Assignment match_cascade(std::span<const CascadeTrack> tracks, std::span<const BoundingBox> detection_boxes,
                         std::span<const FeatureVector> detection_features, const CascadeParams& params) {
  if (detection_boxes.size() != detection_features.size()) {
    invalid("detection boxes and features differ in length");
  }
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<bool> det_taken(detection_boxes.size(), false);
  std::vector<bool> track_taken(tracks.size(), false);

  // Stage 1: appearance, confirmed tracks only, one level per frames-since-
  // update so recently seen tracks claim detections first.
  std::vector<int> levels;
  for (const CascadeTrack& t : tracks) {
    if (t.confirmed && t.gallery != nullptr) levels.push_back(t.misses);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (!(params.lambda > 0.0 && params.lambda < 2.0)) invalid("cosine gate lambda must lie in (0, 2)");
  for (const int level : levels) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (tracks[i].confirmed && tracks[i].gallery != nullptr && tracks[i].misses == level) rows.push_back(i);
    }
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < detection_boxes.size(); ++j) {
      if (!det_taken[j]) cols.push_back(j);
    }
    if (cols.empty()) break;
    // Same costs as build_cosine_costs, evaluated only inside the spatial gate.
    CostMatrix cosine(rows.size(), cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const CascadeTrack& t = tracks[rows[a]];
      const double radius = t.gate_radius > 0.0 ? t.gate_radius : params.gate_radius;
      const Vec2 c = t.predicted.center();
      for (std::size_t b = 0; b < cols.size(); ++b) {
        const std::size_t j = cols[b];
        if (radius > 0.0 && norm_sq(detection_boxes[j].center() - c) > radius * radius) continue;
        if (!usable(detection_features[j])) continue;
        const double best = gallery_distance(*t.gallery, detection_features[j]);
        if (std::isfinite(best)) cosine.set(a, b, best, best <= params.lambda);
      }
    }
    for (const auto& [a, b] : hungarian(cosine).matches) {
      matches.emplace_back(rows[a], cols[b]);
      track_taken[rows[a]] = true;
      det_taken[cols[b]] = true;
    }
  }

  // Stage 2: overlap, everything left.
  std::vector<std::size_t> rest_tracks;
  std::vector<std::size_t> rest_dets;
  std::vector<BoundingBox> predicted;
  std::vector<BoundingBox> detected;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (track_taken[i]) continue;
    rest_tracks.push_back(i);
    predicted.push_back(tracks[i].predicted);
  }
  for (std::size_t j = 0; j < detection_boxes.size(); ++j) {
    if (det_taken[j]) continue;
    rest_dets.push_back(j);
    detected.push_back(detection_boxes[j]);
  }
  if (!rest_tracks.empty() && !rest_dets.empty()) {
    for (const auto& [a, b] : hungarian(build_iou_costs(predicted, detected, params.min_iou)).matches) {
      matches.emplace_back(rest_tracks[a], rest_dets[b]);
    }
  }
  return complete(std::move(matches), tracks.size(), detection_boxes.size());
}

}  // namespace densetrack
