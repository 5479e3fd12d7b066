#include "densetrack/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

[[noreturn]] void configuration(const std::string& what) { throw Error(ErrorCode::kConfiguration, what); }

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) configuration(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) configuration("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void take(const nlohmann::json& obj, const char* key, T& field) {
  if (!obj.contains(key)) return;
  try {
    field = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    configuration(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  tracker.validate();
  frvo.validate();
  NoiseModel n;
  apply_noise(n, noise);
  n.validate();
}

void apply_config(RunConfig& config, const nlohmann::json& doc) {
  reject_unknown(doc, {"seed", "tracker", "frvo", "noise"}, "config");
  if (doc.contains("seed")) {
    std::uint64_t seed = 0;
    take(doc, "seed", seed);
    config.seed = seed;
  }
  if (doc.contains("tracker")) {
    const nlohmann::json& t = doc["tracker"];
    reject_unknown(t,
                   {"xi", "lambda", "min_iou", "n_init", "feature_dim", "gallery_size", "motion", "features",
                    "velocity_window", "gate_base_m", "max_coast_output"},
                   "tracker");
    TrackerConfig& c = config.tracker;
    take(t, "xi", c.xi);
    take(t, "lambda", c.lambda);
    take(t, "min_iou", c.min_iou);
    take(t, "n_init", c.n_init);
    take(t, "feature_dim", c.feature_dim);
    take(t, "gallery_size", c.gallery_size);
    take(t, "velocity_window", c.velocity_window);
    take(t, "gate_base_m", c.gate_base_m);
    take(t, "max_coast_output", c.max_coast_output);
    std::string name;
    if (t.contains("motion")) {
      take(t, "motion", name);
      c.motion = parse_motion_model(name);
    }
    if (t.contains("features")) {
      take(t, "features", name);
      c.features = parse_feature_mode(name);
    }
  }
  if (doc.contains("frvo")) {
    const nlohmann::json& f = doc["frvo"];
    reject_unknown(f, {"tau", "rho", "v_max", "polygon_k", "reciprocity", "safety_margin"}, "frvo");
    FrvoParams& p = config.frvo;
    take(f, "tau", p.tau);
    take(f, "rho", p.rho);
    take(f, "v_max", p.v_max);
    take(f, "polygon_k", p.polygon_k);
    take(f, "reciprocity", p.reciprocity);
    take(f, "safety_margin", p.safety_margin);
  }
  if (doc.contains("noise")) {
    NoiseModel probe;
    apply_noise(probe, doc["noise"]);  // key and type check
    for (const auto& [key, value] : doc["noise"].items()) config.noise[key] = value;
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (file.empty()) {
    if (const char* env = std::getenv("DENSETRACK_CONFIG"); env != nullptr && *env != '\0') file = env;
  }
  RunConfig config;
  if (file.empty()) return config;
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config file " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, file.string() + ": " + e.what());
  }
  apply_config(config, doc);
  config.source = file;
  return config;
}

nlohmann::json to_json(const RunConfig& config) {
  const TrackerConfig& t = config.tracker;
  const FrvoParams& f = config.frvo;
  nlohmann::json out;
  out["config_file"] = config.source.string();
  out["seed"] = config.seed ? nlohmann::json(*config.seed) : nlohmann::json(nullptr);
  out["tracker"] = {{"xi", t.xi},
                    {"lambda", t.lambda},
                    {"min_iou", t.min_iou},
                    {"n_init", t.n_init},
                    {"feature_dim", t.feature_dim},
                    {"gallery_size", t.gallery_size},
                    {"motion", to_string(t.motion)},
                    {"features", to_string(t.features)},
                    {"velocity_window", t.velocity_window},
                    {"gate_base_m", t.gate_base_m},
                    {"max_coast_output", t.max_coast_output}};
  out["frvo"] = {{"tau", f.tau},
                 {"rho", f.rho},
                 {"v_max", f.v_max},
                 {"polygon_k", f.polygon_k},
                 {"reciprocity", f.reciprocity},
                 {"safety_margin", f.safety_margin}};
  out["noise"] = config.noise;
  return out;
}

}  // namespace densetrack
