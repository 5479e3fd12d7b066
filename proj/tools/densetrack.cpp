// densetrack: simulate, track, eval, analyze-bound.
//
// Exit codes: 0 success, 1 usage, 2 data error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "densetrack/config.hpp"
#include "densetrack/error.hpp"
#include "densetrack/geometry.hpp"
#include "densetrack/metrics.hpp"
#include "densetrack/mot_io.hpp"
#include "densetrack/simulator.hpp"
#include "densetrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace densetrack;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

// hyp.txt -> hyp.<suffix>
fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p.replace_extension(suffix);
  return p;
}

struct SimulateArgs {
  fs::path scenario;
  fs::path out_dir;
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<double> dropout;
  std::optional<double> jitter;
  std::optional<double> occlusion;
  std::optional<double> feature_noise;
};

int cmd_simulate(const SimulateArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  if (a.seed) cfg.seed = a.seed;
  nlohmann::json doc = read_json(a.scenario);
  if (cfg.seed) doc["seed"] = *cfg.seed;
  ScenarioDocument sd = scenario_from_json(doc);
  apply_noise(sd.noise, cfg.noise);
  if (a.dropout) sd.noise.dropout_rate = *a.dropout;
  if (a.jitter) sd.noise.bbox_jitter_sigma = *a.jitter;
  if (a.occlusion) sd.noise.occlusion_iou_suppress = *a.occlusion;
  if (a.feature_noise) sd.noise.feature_noise_sigma = *a.feature_noise;
  sd.noise.validate();
  cfg.validate();

  const SimOutput out = simulate(sd.scenario, cfg.frvo, sd.noise);
  write_sequence(a.out_dir, out);

  nlohmann::json echo = to_json(cfg);
  echo["seed"] = sd.scenario.seed;
  echo["noise"] = {{"dropout_rate", sd.noise.dropout_rate},
                   {"bbox_jitter_sigma", sd.noise.bbox_jitter_sigma},
                   {"occlusion_iou_suppress", sd.noise.occlusion_iou_suppress},
                   {"feature_noise_sigma", sd.noise.feature_noise_sigma}};
  echo["scenario"] = doc;
  write_json(a.out_dir / "config.json", echo);

  const Trajectories& t = out.trajectories;
  std::size_t arrived = 0;
  for (const auto& f : t.arrival_frame) arrived += f.has_value() ? 1 : 0;
  std::printf("sequence: %s (%zu agents, %zu frames)\n", a.out_dir.string().c_str(), sd.scenario.agents.size(),
              out.info.length);
  std::printf("density: %.4f agents/m^2\n", t.initial_density);
  std::printf("collision audit: %zu overlapping pair-frames, %zu fallback steps, %zu/%zu arrived\n",
              t.overlapping_pairs, t.infeasible_steps, arrived, t.arrival_frame.size());
  std::printf("boxes: %zu gt, %zu detections\n", out.gt.box_count(), out.detections.box_count());
  return 0;
}

struct TrackArgs {
  fs::path sequence;
  fs::path out_file;
  fs::path config;
  std::string features;
  std::string motion;
  std::optional<int> xi;
  std::optional<double> lambda;
};

int cmd_track(const TrackArgs& a) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.features.empty()) cfg.tracker.features = parse_feature_mode(a.features);
  if (!a.motion.empty()) cfg.tracker.motion = parse_motion_model(a.motion);
  if (a.xi) cfg.tracker.xi = *a.xi;
  if (a.lambda) cfg.tracker.lambda = *a.lambda;
  const SequencePaths paths{a.sequence};
  const SeqInfo info = read_seqinfo(paths.seqinfo());
  TrackerConfig tc = cfg.tracker;
  tc.frvo = cfg.frvo;
  tc.frvo.dt = 1.0 / info.fps;
  tc.px_per_m = info.px_per_m;
  tc.validate();
  cfg.validate();

  const auto detections = load_detections(paths, tc.features, tc.feature_dim);
  const SequenceResult r = run_sequence(detections, tc);
  {
    std::ofstream out = open_out(a.out_file);
    write_hypothesis(out, r.hypothesis);
  }
  nlohmann::json echo = to_json(cfg);
  echo["sequence"] = a.sequence.string();
  echo["fps"] = info.fps;
  echo["px_per_m"] = info.px_per_m;
  write_json(sibling(a.out_file, ".config.json"), echo);

  const double fps = r.seconds > 0.0 ? static_cast<double>(detections.size()) / r.seconds : 0.0;
  std::printf("tracked: %s (features=%s, motion=%s)\n", a.sequence.string().c_str(), to_string(tc.features),
              to_string(tc.motion));
  std::printf("frames: %zu, ids: %zu, fallback LP steps: %zu\n", detections.size(), r.ids, r.stats.lp_infeasible);
  std::printf("runtime: %.3f s, %.1f frames/s\n", r.seconds, fps);
  return 0;
}

struct EvalArgs {
  fs::path gt;
  fs::path hyp;
  double iou = 0.5;
  fs::path out;
};

int cmd_eval(const EvalArgs& a) {
  const fs::path gt_file = fs::is_directory(a.gt) ? SequencePaths{a.gt}.gt() : a.gt;
  const GroundTruth gt = read_gt(gt_file);
  const MotSequence hyp = read_hypothesis(a.hyp);
  const EvalResult r = evaluate(gt, hyp, a.iou);
  const fs::path out = a.out.empty() ? sibling(a.hyp, ".eval.json") : a.out;
  nlohmann::json doc = to_json(r);
  doc["iou_threshold"] = a.iou;
  write_json(out, doc);
  std::cout << format_report(r);
  return 0;
}

struct BoundArgs {
  double r = 0.0;
  double sigma = 0.0;
  std::vector<double> delta_range;
  int steps = 21;
  fs::path out;
};

int cmd_analyze_bound(const BoundArgs& a) {
  double lo = 0.0;
  double hi = 2.0 * a.r * (a.steps - 1) / a.steps;  // [0, 2r) in equal steps
  if (!a.delta_range.empty()) {
    lo = a.delta_range[0];
    hi = a.delta_range[1];
  }
  if (a.steps < 1 || (a.steps == 1 && hi != lo) || hi < lo) {
    throw Error(ErrorCode::kDomain, "delta range must be increasing with at least two steps");
  }
  std::string csv = "delta,bound\n";
  char line[96];
  for (int i = 0; i < a.steps; ++i) {
    const double delta = a.steps == 1 ? lo : lo + (hi - lo) * i / (a.steps - 1);
    std::snprintf(line, sizeof line, "%.10f,%.12f\n", delta, delta_overlap_error_bound(a.r, delta, a.sigma));
    csv += line;
  }
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    open_out(a.out) << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense-crowd tracking toolkit: simulate, track, evaluate"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Render a scenario into a sequence directory");
  s->add_option("scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  s->add_option("out-dir", sim.out_dir, "Output sequence directory")->required();
  s->add_option("--seed", sim.seed, "Seed for layout and noise");
  s->add_option("--config", sim.config, "Run config JSON (default $DENSETRACK_CONFIG)");
  s->add_option("--dropout", sim.dropout, "Detection dropout rate");
  s->add_option("--jitter", sim.jitter, "Box corner jitter sigma (px)");
  s->add_option("--occlusion", sim.occlusion, "Occlusion suppression IoU (1 disables)");
  s->add_option("--feature-noise", sim.feature_noise, "Intensity noise sigma");

  TrackArgs trk;
  auto* t = app.add_subcommand("track", "Track a sequence directory");
  t->add_option("sequence-dir", trk.sequence, "Sequence directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("out-file", trk.out_file, "Hypothesis file")->required();
  t->add_option("--config", trk.config, "Run config JSON (default $DENSETRACK_CONFIG)");
  t->add_option("--features", trk.features, "Appearance input")->check(CLI::IsMember({"segmented", "bbox"}));
  t->add_option("--motion", trk.motion, "Motion model")->check(CLI::IsMember({"frvo", "constvel", "none"}));
  t->add_option("--xi", trk.xi, "Missed frames before deletion");
  t->add_option("--lambda", trk.lambda, "Cosine gate");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "CLEAR-MOT evaluation of a hypothesis");
  e->add_option("gt", ev.gt, "Sequence directory or gt.txt")->required()->check(CLI::ExistingPath);
  e->add_option("hyp-file", ev.hyp, "Hypothesis file")->required()->check(CLI::ExistingFile);
  e->add_option("--iou", ev.iou, "Match threshold")->check(CLI::Range(0.0, 1.0));
  e->add_option("--out", ev.out, "JSON report (default <hyp>.eval.json)");

  BoundArgs bd;
  auto* b = app.add_subcommand("analyze-bound", "Angular error bound of a circular VO under delta-overlap");
  b->add_option("--r", bd.r, "Agent radius")->required();
  b->add_option("--sigma", bd.sigma, "Centre distance to the observer")->required();
  b->add_option("--delta-range", bd.delta_range, "First and last delta (default [0, 2r) )")->expected(2);
  b->add_option("--steps", bd.steps, "Rows");
  b->add_option("--out", bd.out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*t) return cmd_track(trk);
    if (*e) return cmd_eval(ev);
    return cmd_analyze_bound(bd);
  } catch (const Error& err) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(err.code()), err.what());
    return kData;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kData;
  }
}
