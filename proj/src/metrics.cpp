#include "densetrack/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "densetrack/association.hpp"
#include "densetrack/error.hpp"

namespace densetrack {

namespace {

constexpr double kMinTrackedFraction = 0.8;
constexpr double kMaxLostFraction = 0.2;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

FrameMatch frame_match(const FrameBoxes& gt, const FrameBoxes& hyp, double iou_threshold,
                       const std::map<int, int>& previous) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "iou threshold must lie in (0, 1)");
  }
  FrameMatch out;
  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> hyp_used(hyp.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  if (!previous.empty()) {
    std::unordered_map<int, std::size_t> hyp_by_id;
    for (std::size_t j = 0; j < hyp.size(); ++j) hyp_by_id.emplace(hyp[j].id, j);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const auto prev = previous.find(gt[i].id);
      if (prev == previous.end()) continue;
      const auto h = hyp_by_id.find(prev->second);
      if (h == hyp_by_id.end() || hyp_used[h->second]) continue;
      if (iou(gt[i].box, hyp[h->second].box) >= iou_threshold) {
        gt_used[i] = true;
        hyp_used[h->second] = true;
        pairs.emplace_back(i, h->second);
      }
    }
  }

  std::vector<std::size_t> rest_gt;
  std::vector<std::size_t> rest_hyp;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt_used[i]) rest_gt.push_back(i);
  }
  for (std::size_t j = 0; j < hyp.size(); ++j) {
    if (!hyp_used[j]) rest_hyp.push_back(j);
  }
  if (!rest_gt.empty() && !rest_hyp.empty()) {
    CostMatrix costs(rest_gt.size(), rest_hyp.size());
    for (std::size_t a = 0; a < rest_gt.size(); ++a) {
      for (std::size_t b = 0; b < rest_hyp.size(); ++b) {
        const double z = iou(gt[rest_gt[a]].box, hyp[rest_hyp[b]].box);
        costs.set(a, b, 1.0 - z, z >= iou_threshold);
      }
    }
    for (const auto& [a, b] : hungarian(costs).matches) pairs.emplace_back(rest_gt[a], rest_hyp[b]);
  }

  std::sort(pairs.begin(), pairs.end());
  std::fill(gt_used.begin(), gt_used.end(), false);
  std::fill(hyp_used.begin(), hyp_used.end(), false);
  for (const auto& [i, j] : pairs) {
    gt_used[i] = true;
    hyp_used[j] = true;
    out.ious.push_back(iou(gt[i].box, hyp[j].box));
  }
  out.pairs = std::move(pairs);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt_used[i]) out.missed_gt.push_back(i);
  }
  for (std::size_t j = 0; j < hyp.size(); ++j) {
    if (!hyp_used[j]) out.false_hyp.push_back(j);
  }
  return out;
}

EvalResult evaluate(const GroundTruth& gt, const MotSequence& hyp, double iou_threshold) {
  if (hyp.frame_count() > gt.frame_count()) {
    std::string frames;
    std::size_t listed = 0;
    for (std::size_t f = gt.frame_count(); f < hyp.frame_count(); ++f) {
      if (hyp.frames[f].empty()) continue;
      if (listed++ > 0) frames += ',';
      frames += std::to_string(f + 1);
    }
    if (listed > 0) {
      throw Error(ErrorCode::kDomain, "hypothesis has rows in frames absent from ground truth: " + frames);
    }
  }

  EvalResult r;
  std::map<int, std::size_t> lifespan;
  std::map<int, std::size_t> matched;
  std::map<int, int> last_hyp;  // gt id -> hyp id at its most recent match
  std::map<int, int> previous;  // correspondences of the preceding frame
  double iou_sum = 0.0;

  static const FrameBoxes kEmpty;
  for (std::size_t f = 0; f < gt.frame_count(); ++f) {
    const FrameBoxes& g = gt.frames[f];
    const FrameBoxes& h = f < hyp.frame_count() ? hyp.frames[f] : kEmpty;
    std::set<int> seen;
    for (const LabeledBox& b : g) {
      if (!seen.insert(b.id).second) {
        throw Error(ErrorCode::kDomain, "ground truth repeats id " + std::to_string(b.id) + " in frame " +
                                            std::to_string(f + 1));
      }
      ++lifespan[b.id];
    }
    const FrameMatch m = frame_match(g, h, iou_threshold, previous);
    std::map<int, int> current;
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      const int gid = g[m.pairs[k].first].id;
      const int hid = h[m.pairs[k].second].id;
      const auto last = last_hyp.find(gid);
      if (last != last_hyp.end() && last->second != hid) ++r.idsw;
      last_hyp[gid] = hid;
      current[gid] = hid;
      ++matched[gid];
      iou_sum += m.ious[k];
    }
    previous = std::move(current);
    r.gt_total += g.size();
    r.matches += m.pairs.size();
    r.fn += m.missed_gt.size();
    r.fp += m.false_hyp.size();
  }
  // Hypothesis frames past the ground truth are empty here (checked above).

  r.gt_tracks = lifespan.size();
  for (const auto& [id, span] : lifespan) {
    const double c = static_cast<double>(matched[id]) / static_cast<double>(span);
    r.coverage[id] = c;
    if (c >= kMinTrackedFraction) ++r.mostly_tracked;
    if (c <= kMaxLostFraction) ++r.mostly_lost;
  }
  if (r.gt_tracks > 0) {
    r.mt = static_cast<double>(r.mostly_tracked) / static_cast<double>(r.gt_tracks);
    r.ml = static_cast<double>(r.mostly_lost) / static_cast<double>(r.gt_tracks);
  }
  r.motp = r.matches > 0 ? iou_sum / static_cast<double>(r.matches) : 0.0;
  const double denom = static_cast<double>(std::max<std::size_t>(r.gt_total, 1));
  r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.idsw) / denom;
  r.mota_without_fp = 1.0 - static_cast<double>(r.fn + r.idsw) / denom;
  r.fn_rate = static_cast<double>(r.fn) / denom;
  return r;
}

std::string format_report(const EvalResult& r) {
  std::string s;
  const auto line = [&s](const std::string& key, const std::string& value) { s += key + '=' + value + '\n'; };
  line("gt_total", std::to_string(r.gt_total));
  line("gt_tracks", std::to_string(r.gt_tracks));
  line("matches", std::to_string(r.matches));
  line("mostly_tracked", std::to_string(r.mostly_tracked));
  line("mostly_lost", std::to_string(r.mostly_lost));
  line("MT", fixed6(r.mt));
  line("ML", fixed6(r.ml));
  line("FN", std::to_string(r.fn));
  line("FN_rate", fixed6(r.fn_rate));
  line("FP", std::to_string(r.fp));
  line("IDSW", std::to_string(r.idsw));
  line("MOTP", fixed6(r.motp));
  line("MOTA", fixed6(r.mota));
  line("MOTA_without_FP", fixed6(r.mota_without_fp));
  for (const auto& [id, c] : r.coverage) line("coverage." + std::to_string(id), fixed6(c));
  return s;
}

nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json j;
  j["gt_total"] = r.gt_total;
  j["gt_tracks"] = r.gt_tracks;
  j["matches"] = r.matches;
  j["mostly_tracked"] = r.mostly_tracked;
  j["mostly_lost"] = r.mostly_lost;
  j["MT"] = r.mt;
  j["ML"] = r.ml;
  j["FN"] = r.fn;
  j["FN_rate"] = r.fn_rate;
  j["FP"] = r.fp;
  j["IDSW"] = r.idsw;
  j["MOTP"] = r.motp;
  j["MOTA"] = r.mota;
  j["MOTA_without_FP"] = r.mota_without_fp;
  nlohmann::json cov = nlohmann::json::object();
  for (const auto& [id, c] : r.coverage) cov[std::to_string(id)] = c;
  j["coverage"] = cov;
  return j;
}

}  // namespace densetrack
