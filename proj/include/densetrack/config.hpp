#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "densetrack/simulator.hpp"
#include "densetrack/tracker.hpp"

namespace densetrack {

// Settings shared by the command-line tools. Layers are applied in order
// defaults, config file, flags; each layer only touches the keys it sets.
//
// Config document:
//   {"seed": n,
//    "tracker": {"xi", "lambda", "min_iou", "n_init", "feature_dim", "gallery_size",
//                "motion", "features", "velocity_window", "gate_base_m", "max_coast_output"},
//    "frvo": {"tau", "rho", "v_max", "polygon_k", "reciprocity", "safety_margin"},
//    "noise": {"dropout_rate", "bbox_jitter_sigma", "occlusion_iou_suppress",
//              "feature_noise_sigma"}}
// The frame interval and pixel scale always come from the sequence.
struct RunConfig {
  TrackerConfig tracker;
  FrvoParams frvo;
  // Noise keys to lay over a scenario's own noise model.
  nlohmann::json noise = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::filesystem::path source;  // config file read, empty when none

  void validate() const;
};

// Applies the keys present in `doc`. Unknown keys and ill-typed values throw
// Error(kConfiguration).
void apply_config(RunConfig& config, const nlohmann::json& doc);

// Reads `path`, or $DENSETRACK_CONFIG when `path` is empty; defaults when
// neither names a file.
RunConfig load_run_config(const std::filesystem::path& path);

// Effective values in the config file layout, plus "config_file".
nlohmann::json to_json(const RunConfig& config);

}  // namespace densetrack
