#pragma once

#include "cinetransfer/camopt.h"
#include "cinetransfer/log.h"
#include "cinetransfer/refine.h"
#include "cinetransfer/synth.h"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace cinetransfer::cli {

struct SynthSettings {
  SceneSpec scene;
  /// Bounds of the perturbation applied to the written initial cameras.
  double init_rotation_deg = 0.0;
  double init_translation_fraction = 0.0;
  /// Character generator: arm drop (degrees) and uniform scale.
  double character_arm_drop_deg = 45.0;
  double character_scale = 1.15;
};

struct GroundTruthPaths {
  std::filesystem::path joints;
  std::filesystem::path masks_dir;
};

/// Every path is resolved against the directory of the config file. Stage
/// outputs go under output_dir/<stage>/.
struct PipelineConfig {
  std::filesystem::path config_dir;
  std::string body_model = "builtin:capsule-man";
  std::filesystem::path character_mesh;
  std::filesystem::path character_keypoints;
  /// Empty selects the default body-joint map.
  std::filesystem::path bone_map;
  std::filesystem::path motion;
  std::filesystem::path cameras;
  std::filesystem::path evidence_dir;
  std::filesystem::path environment_dir;
  std::filesystem::path output_dir;
  GroundTruthPaths ground_truth;

  CamOptConfig camopt;
  RefineConfig refine;
  std::string denoiser = "zero";
  SynthSettings synth;
  bool match_bone_lengths = false;

  int jobs = 1;
  std::uint64_t seed = 0;
  LogLevel log_level = LogLevel::Warn;
};

/// Parses a UTF-8 JSON config. Throws InputError on malformed content.
PipelineConfig load_config(const std::filesystem::path& path);

/// Per-stage seed derived from the pipeline seed.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

} // namespace cinetransfer::cli
