#include "config.h"

#include "cinetransfer/error.h"
#include "cinetransfer/random.h"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace cinetransfer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

LogLevel parseLogLevel(const std::string& name) {
  if (name == "debug") {
    return LogLevel::Debug;
  }
  if (name == "info") {
    return LogLevel::Info;
  }
  if (name == "warn") {
    return LogLevel::Warn;
  }
  if (name == "error") {
    return LogLevel::Error;
  }
  if (name == "off") {
    return LogLevel::Off;
  }
  throw InputError("unknown log level: " + name);
}

fs::path resolve(const PipelineConfig& cfg, const json& j, const char* key) {
  if (!j.contains(key)) {
    return {};
  }
  const fs::path p(j.at(key).get<std::string>());
  return p.is_absolute() ? p : cfg.config_dir / p;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

void readCamOpt(const json& j, CamOptConfig& c) {
  read(j, "lambda_instance", c.lambda_instance);
  read(j, "lambda_semantic", c.lambda_semantic);
  read(j, "lambda_motion", c.lambda_motion);
  read(j, "lambda_temporal", c.lambda_temporal);
  read(j, "fd_rotation", c.fd_rotation);
  read(j, "fd_translation", c.fd_translation);
  read(j, "initial_step", c.initial_step);
  read(j, "min_step", c.min_step);
  read(j, "max_iterations", c.max_iterations);
  read(j, "tolerance", c.tolerance);
  read(j, "warm_start", c.warm_start);
  read(j, "smoothing_sweeps", c.smoothing_sweeps);
}

void readRefine(const json& j, PipelineConfig& cfg) {
  RefineConfig& r = cfg.refine;
  read(j, "strength", r.strength);
  read(j, "latent_weight", r.latent_weight);
  read(j, "stochastic", r.stochastic);
  read(j, "denoiser", cfg.denoiser);
  int steps = r.schedule.steps;
  double betaStart = 1e-4;
  double betaEnd = 0.02;
  read(j, "steps", steps);
  read(j, "beta_start", betaStart);
  read(j, "beta_end", betaEnd);
  r.schedule = build_schedule(steps, betaStart, betaEnd);
}

void readSynth(const json& j, SynthSettings& s) {
  if (j.contains("shot")) {
    s.scene.shot = parse_shot(j.at("shot").get<std::string>());
  }
  if (j.contains("preset")) {
    s.scene.preset = parse_preset(j.at("preset").get<std::string>());
  }
  read(j, "frames", s.scene.frames);
  read(j, "width", s.scene.width);
  read(j, "height", s.scene.height);
  read(j, "focal", s.scene.focal);
  read(j, "fps", s.scene.fps);
  read(j, "init_rotation_deg", s.init_rotation_deg);
  read(j, "init_translation_fraction", s.init_translation_fraction);
  read(j, "character_arm_drop_deg", s.character_arm_drop_deg);
  read(j, "character_scale", s.character_scale);
}

} // namespace

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  CT_CHECK_INPUT(in.good(), "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();

  PipelineConfig cfg;
  cfg.config_dir = fs::absolute(path).parent_path();
  try {
    const json j = json::parse(ss.str());
    CT_CHECK_INPUT(j.is_object(), "config must be a JSON object");
    read(j, "body_model", cfg.body_model);
    if (cfg.body_model.rfind("builtin:", 0) != 0) {
      cfg.body_model = resolve(cfg, j, "body_model").string();
    }
    cfg.character_mesh = resolve(cfg, j, "character_mesh");
    cfg.character_keypoints = resolve(cfg, j, "character_keypoints");
    cfg.bone_map = resolve(cfg, j, "bone_map");
    cfg.motion = resolve(cfg, j, "motion");
    cfg.cameras = resolve(cfg, j, "cameras");
    cfg.evidence_dir = resolve(cfg, j, "evidence_dir");
    cfg.environment_dir = resolve(cfg, j, "environment_dir");
    cfg.output_dir = resolve(cfg, j, "output_dir");
    if (j.contains("ground_truth")) {
      const json& gt = j.at("ground_truth");
      cfg.ground_truth.joints = resolve(cfg, gt, "joints");
      cfg.ground_truth.masks_dir = resolve(cfg, gt, "masks_dir");
    }
    if (j.contains("camopt")) {
      readCamOpt(j.at("camopt"), cfg.camopt);
    }
    if (j.contains("refine")) {
      readRefine(j.at("refine"), cfg);
    }
    if (j.contains("synth")) {
      readSynth(j.at("synth"), cfg.synth);
    }
    read(j, "match_bone_lengths", cfg.match_bone_lengths);
    read(j, "jobs", cfg.jobs);
    read(j, "seed", cfg.seed);
    if (j.contains("log_level")) {
      cfg.log_level = parseLogLevel(j.at("log_level").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  CT_CHECK_INPUT(!cfg.output_dir.empty(), "config needs an output_dir");
  CT_CHECK_INPUT(cfg.jobs >= 1, "jobs must be at least 1");
  return cfg;
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  // FNV-1a of the stage name, folded into the pipeline seed
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : stage) {
    h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  }
  return mix_seed(seed ^ h);
}

} // namespace cinetransfer::cli
