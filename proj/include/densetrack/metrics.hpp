#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "densetrack/mot_io.hpp"

namespace densetrack {

using GroundTruth = MotSequence;

struct FrameMatch {
  // (gt index, hyp index) within the frame, sorted by gt index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> ious;  // aligned with pairs
  std::vector<std::size_t> missed_gt;
  std::vector<std::size_t> false_hyp;
};

// CLEAR-MOT frame correspondence. Pairs in `previous` (gt id -> hyp id from
// the preceding frame) are kept while their IoU stays >= threshold; the rest
// are assigned by Hungarian on 1 - IoU, gated at the threshold.
FrameMatch frame_match(const FrameBoxes& gt, const FrameBoxes& hyp, double iou_threshold = 0.5,
                       const std::map<int, int>& previous = {});

struct EvalResult {
  std::size_t gt_total = 0;  // annotated boxes over all frames
  std::size_t gt_tracks = 0;
  std::size_t matches = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t idsw = 0;
  std::size_t mostly_tracked = 0;
  std::size_t mostly_lost = 0;
  double mt = 0.0;  // fractions of gt tracks
  double ml = 0.0;
  double motp = 0.0;  // mean IoU over matches
  double mota = 0.0;
  double mota_without_fp = 0.0;
  double fn_rate = 0.0;  // fn / gt_total
  std::map<int, double> coverage;  // gt id -> matched fraction of its lifespan
};

// Throws Error(kDomain) when the hypothesis has rows in frames beyond the
// ground truth, listing those frames.
EvalResult evaluate(const GroundTruth& gt, const MotSequence& hyp, double iou_threshold = 0.5);

// `key=value` lines in a fixed order; numbers printed with 6 decimals.
std::string format_report(const EvalResult& r);
nlohmann::json to_json(const EvalResult& r);

}  // namespace densetrack
