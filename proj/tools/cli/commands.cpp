#include "commands.h"

#include "cinetransfer/capsule_man.h"
#include "cinetransfer/error.h"
#include "cinetransfer/io.h"
#include "cinetransfer/log.h"
#include "cinetransfer/metrics.h"
#include "cinetransfer/parallel.h"
#include "cinetransfer/retarget.h"
#include "cinetransfer/synth.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>

namespace cinetransfer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Loads and checks every input first; only then runs the stage. Input
// problems found while loading exit with 2, anything later with 3.
template <typename Inputs>
int runStage(
    const std::string& name,
    const std::function<Inputs()>& prepare,
    const std::function<void(Inputs&)>& execute) {
  std::optional<Inputs> inputs;
  try {
    inputs = prepare();
  } catch (const std::exception& e) {
    log_message(LogLevel::Error, name, std::string("validation failed: ") + e.what());
    return kExitValidation;
  }
  try {
    execute(*inputs);
  } catch (const std::exception& e) {
    log_message(LogLevel::Error, name, std::string("stage failed: ") + e.what());
    return kExitStage;
  }
  log_info(name, "done");
  return kExitOk;
}

void requireFile(const fs::path& path, const char* what) {
  CT_CHECK_INPUT(!path.empty(), std::string("config is missing ") + what);
  CT_CHECK_INPUT(fs::exists(path), std::string(what) + " not found: " + path.string());
}

BoneMap boneMapFor(const PipelineConfig& cfg) {
  return cfg.bone_map.empty() ? BoneMap::smpl_default() : load_bone_map(cfg.bone_map);
}

fs::path stageDir(const PipelineConfig& cfg, const char* stage) {
  return cfg.output_dir / stage;
}

std::vector<Vertices> loadMeshSequence(const fs::path& dir, Faces& faces) {
  std::vector<Vertices> meshes;
  for (int i = 0; fs::exists(dir / frame_file("mesh", i, "obj")); ++i) {
    CharacterMesh m = load_obj(dir / frame_file("mesh", i, "obj"));
    if (i == 0) {
      faces = m.faces;
    } else {
      CT_CHECK_INPUT(m.faces == faces, "retargeted meshes do not share one face list");
    }
    meshes.push_back(std::move(m.vertices));
  }
  CT_CHECK_INPUT(!meshes.empty(), "no retargeted meshes in " + dir.string());
  return meshes;
}

std::vector<std::vector<Vec3>> jointsMetres(const std::vector<JointSet>& mm) {
  std::vector<std::vector<Vec3>> out;
  for (const JointSet& s : mm) {
    std::vector<Vec3> f;
    for (const Vec3& p : s.positions) {
      f.push_back(p / 1000.0);
    }
    out.push_back(std::move(f));
  }
  return out;
}

void writeText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.good()) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

} // namespace

Frame shade_character(const Fragments& fragments, const Vertices& vertices, const Faces& faces, const PinholeCamera& cam) {
  static const Vec3 kAlbedo(0.85, 0.6, 0.45);
  const Vec3 light = Vec3(-0.3, -0.5, -1.0).normalized();
  Frame f(fragments.width, fragments.height, -1.0);
  for (size_t i = 0; i < fragments.triangle.size(); ++i) {
    const int tri = fragments.triangle[i];
    if (tri < 0) {
      continue;
    }
    const Face& face = faces[static_cast<size_t>(tri)];
    const Vec3 n = (vertices[face[1]] - vertices[face[0]]).cross(vertices[face[2]] - vertices[face[0]]);
    const double len = n.norm();
    const double lambert = len > 0.0 ? std::abs((cam.world_to_camera.rotation * n / len).dot(light)) : 0.0;
    const double shade = 0.25 + 0.75 * lambert;
    for (int c = 0; c < 3; ++c) {
      f.samples[3 * i + c] = 2.0 * kAlbedo[c] * shade - 1.0;
    }
  }
  return f;
}

int cmd_synth(const PipelineConfig& cfg) {
  struct Inputs {
    SceneSpec spec;
  };
  return runStage<Inputs>(
      "synth",
      [&] {
        Inputs in{cfg.synth.scene};
        in.spec.seed = stage_seed(cfg.seed, "synth");
        in.spec.validate();
        CT_CHECK_INPUT(cfg.synth.character_scale > 0.0, "character scale must be positive");
        CT_CHECK_INPUT(
            cfg.synth.init_rotation_deg >= 0.0 && cfg.synth.init_translation_fraction >= 0.0,
            "initial camera perturbation bounds must be non-negative");
        return in;
      },
      [&](Inputs& in) {
        const GroundTruthBundle b = make_scene(in.spec, cfg.jobs);
        const CameraTrajectory init = perturb_camera(
            b.cameras, cfg.synth.init_rotation_deg, cfg.synth.init_translation_fraction, b.scene_diameter,
            stage_seed(cfg.seed, "synth-camera"));
        const SynthCharacter character =
            make_character(cfg.synth.character_arm_drop_deg * std::numbers::pi / 180.0, cfg.synth.character_scale);
        const Video env =
            make_environment(in.spec.width, in.spec.height, in.spec.frames, stage_seed(cfg.seed, "synth-environment"));

        const fs::path dir = stageDir(cfg, "synth");
        save_motion(dir / "motion.json", b.motion);
        save_cameras(dir / "cameras_gt.json", b.cameras);
        save_cameras(dir / "cameras_init.json", init);
        save_evidence(dir / "evidence", b.evidence);
        save_joints(dir / "joints3d.json", b.joints3d);
        save_frames(dir / "environment", env);
        save_obj(dir / "character.obj", character.mesh.vertices, character.mesh.faces);
        save_keypoints(dir / "character_keypoints.json", character.keypoints);
        save_bone_map(dir / "bone_map.json", BoneMap::smpl_default());
      });
}

int cmd_retarget(const PipelineConfig& cfg) {
  struct Inputs {
    BodyModel body;
    CharacterMesh character;
    Keypoints2D keypoints;
    BoneMap map;
    MotionClip motion;
  };
  return runStage<Inputs>(
      "retarget",
      [&] {
        requireFile(cfg.character_mesh, "character_mesh");
        requireFile(cfg.character_keypoints, "character_keypoints");
        requireFile(cfg.motion, "motion");
        Inputs in{load_body_model(cfg.body_model), load_obj(cfg.character_mesh), load_keypoints(cfg.character_keypoints),
                  boneMapFor(cfg), load_motion(cfg.motion)};
        in.map.validate(in.body.num_joints());
        in.motion.validate(in.body.num_joints());
        CT_CHECK_INPUT(
            in.keypoints.points.size() == in.map.entries.size(),
            "character keypoint count does not match the bone map");
        return in;
      },
      [&](Inputs& in) {
        RetargetOptions options;
        options.bone_map = in.map;
        options.match_bone_lengths = cfg.match_bone_lengths;
        const RetargetResult r = retarget_character(in.body, in.character, in.keypoints, options);
        for (const std::string& w : r.warnings) {
          log_warn("retarget", w);
        }
        const Animation anim = animate(in.character, r.adjustment, r.weights, in.motion, in.body.parents, cfg.jobs);

        const fs::path dir = stageDir(cfg, "retarget");
        for (size_t t = 0; t < anim.meshes.size(); ++t) {
          save_obj(dir / frame_file("mesh", static_cast<int>(t), "obj"), anim.meshes[t], in.character.faces);
        }
        save_joints(dir / "joints.json", joints_mm(anim.joints));

        const SkeletonAdjustment& a = r.adjustment;
        json rest = json::array();
        for (const Vec3& p : a.adjusted_rest_joints) {
          rest.push_back({p.x(), p.y(), p.z()});
        }
        const json report = {
            {"scale", a.scale},
            {"mesh_translation", {a.mesh_translation.x(), a.mesh_translation.y(), a.mesh_translation.z()}},
            {"delta_r", a.delta_r},
            {"adjusted_rest_joints", rest},
            {"body_height", r.body_height},
            {"character_height", r.character_height},
            {"warnings", r.warnings}};
        writeText(dir / "adjustment.json", report.dump(1) + "\n");
      });
}

int cmd_reshoot(const PipelineConfig& cfg) {
  struct Inputs {
    CameraTrajectory cameras;
    AnimatedScene scene;
    EvidenceTrack evidence;
  };
  return runStage<Inputs>(
      "reshoot",
      [&] {
        requireFile(cfg.cameras, "cameras");
        requireFile(cfg.evidence_dir, "evidence_dir");
        requireFile(cfg.motion, "motion");
        cfg.camopt.validate();
        Inputs in;
        in.cameras = load_cameras(cfg.cameras);
        const BodyModel body = load_body_model(cfg.body_model);
        const MotionClip motion = load_motion(cfg.motion);
        const BoneMap map = boneMapFor(cfg);
        const int n = in.cameras.num_frames();
        CT_CHECK_INPUT(static_cast<int>(motion.frames.size()) == n, "motion frame count does not match the cameras");
        // the optimizer renders the body driven by the motion; keypoints
        // come from the adjusted skeleton written by retarget
        const AnimatedScene bodyScene = pose_scene(body, motion, map, cfg.jobs);
        in.scene.meshes = bodyScene.meshes;
        in.scene.faces = bodyScene.faces;
        const auto joints = jointsMetres(load_joints(stageDir(cfg, "retarget") / "joints.json"));
        CT_CHECK_INPUT(static_cast<int>(joints.size()) == n, "retargeted joint count does not match the cameras");
        const std::vector<int> kpJoints = map.keypoint_joints();
        for (const auto& frame : joints) {
          std::vector<Vec3> kp;
          for (int j : kpJoints) {
            CT_CHECK_INPUT(j < static_cast<int>(frame.size()), "bone map joint outside the retargeted skeleton");
            kp.push_back(frame[static_cast<size_t>(j)]);
          }
          in.scene.keypoint_points.push_back(std::move(kp));
        }
        in.evidence = load_evidence(cfg.evidence_dir, n);
        for (const EvidenceFrame& f : in.evidence.frames) {
          CT_CHECK_INPUT(
              f.keypoints.points.empty() || f.keypoints.points.size() == kpJoints.size(),
              "evidence keypoint count does not match the bone map");
        }
        return in;
      },
      [&](Inputs& in) {
        // evidence resolution is a stage failure, not a config problem
        in.evidence.validate(in.cameras.num_frames(), in.cameras.intrinsics.width, in.cameras.intrinsics.height);
        AnimatedScene& scene = in.scene;
        for (size_t t = 0; t < in.evidence.frames.size(); ++t) {
          if (in.evidence.frames[t].keypoints.points.empty()) {
            // no keypoint evidence for this frame: nothing to align against
            in.evidence.frames[t].keypoints.points.assign(scene.keypoint_points[t].size(), Keypoint{});
          }
        }
        CamOptConfig camCfg = cfg.camopt;
        camCfg.jobs = cfg.jobs;
        const TrajectoryResult r = optimize_trajectory(in.cameras, scene, in.evidence, camCfg);

        const fs::path dir = stageDir(cfg, "reshoot");
        save_cameras(dir / "cameras.json", r.cameras);
        std::string csv = "frame,initial_loss,final_loss,iterations,skipped\n";
        char line[160];
        for (size_t t = 0; t < r.frames.size(); ++t) {
          const FrameResult& f = r.frames[t];
          std::snprintf(
              line, sizeof(line), "%zu,%.17g,%.17g,%d,%d\n", t, f.initial.total, f.final.total, f.iterations,
              f.skipped ? 1 : 0);
          csv += line;
          if (f.skipped) {
            log_warn("reshoot", "frame " + std::to_string(t) + " skipped: no usable evidence");
          }
        }
        writeText(dir / "losses.csv", csv);
      });
}

int cmd_compose_refine(const PipelineConfig& cfg) {
  struct Inputs {
    CameraTrajectory cameras;
    Faces faces;
    std::vector<Vertices> meshes;
    Video environment;
    std::unique_ptr<Denoiser> denoiser;
  };
  return runStage<Inputs>(
      "compose-refine",
      [&] {
        requireFile(cfg.environment_dir, "environment_dir");
        cfg.refine.validate();
        Inputs in;
        in.denoiser = make_denoiser(cfg.denoiser);
        in.cameras = load_cameras(stageDir(cfg, "reshoot") / "cameras.json");
        in.meshes = loadMeshSequence(stageDir(cfg, "retarget"), in.faces);
        in.environment = load_frames(cfg.environment_dir);
        return in;
      },
      [&](Inputs& in) {
        const int n = in.cameras.num_frames();
        CT_CHECK_INPUT(static_cast<int>(in.meshes.size()) == n, "retargeted mesh count does not match the cameras");
        CT_CHECK_INPUT(
            static_cast<int>(in.environment.size()) == n, "environment frame count does not match the cameras");
        for (const Frame& f : in.environment) {
          CT_CHECK_INPUT(
              f.width == in.cameras.intrinsics.width && f.height == in.cameras.intrinsics.height,
              "environment resolution does not match the cameras");
        }
        Video foreground(static_cast<size_t>(n));
        std::vector<Mask> masks(static_cast<size_t>(n));
        parallel_for(static_cast<size_t>(n), cfg.jobs, [&](size_t t) {
          const PinholeCamera cam = in.cameras.camera(static_cast<int>(t));
          const Fragments frags = rasterize(in.meshes[t], in.faces, cam);
          masks[t] = frags.mask();
          foreground[t] = shade_character(frags, in.meshes[t], in.faces, cam);
        });
        const Composite comp = composite(foreground, masks, in.environment);
        RefineConfig refineCfg = cfg.refine;
        refineCfg.seed = stage_seed(cfg.seed, "refine");
        const Video refined = refine_video(comp.frames, comp.masks, *in.denoiser, refineCfg, cfg.jobs);

        const fs::path dir = stageDir(cfg, "compose");
        save_frames(dir / "composite", comp.frames);
        save_masks(dir / "masks", comp.masks);
        save_frames(dir / "refined", refined);
      });
}

int cmd_eval(const PipelineConfig& cfg) {
  struct Inputs {
    std::vector<JointSet> predJoints;
    std::vector<JointSet> gtJoints;
    std::vector<Mask> predMasks;
    std::vector<Mask> gtMasks;
  };
  return runStage<Inputs>(
      "eval",
      [&] {
        requireFile(cfg.ground_truth.joints, "ground_truth.joints");
        requireFile(cfg.ground_truth.masks_dir, "ground_truth.masks_dir");
        return Inputs{
            load_joints(stageDir(cfg, "retarget") / "joints.json"), load_joints(cfg.ground_truth.joints),
            load_masks(stageDir(cfg, "compose") / "masks"), load_masks(cfg.ground_truth.masks_dir)};
      },
      [&](Inputs& in) {
        const MetricsReport report = evaluate(in.predJoints, in.gtJoints, in.predMasks, in.gtMasks);
        save_report(stageDir(cfg, "eval") / "report.json", report);
        std::printf(
            "frames %zu  mpjpe %.4f mm  pa %.4f  iou %.4f\n", report.per_frame.size(), report.mean.mpjpe,
            report.mean.pa, report.mean.iou);
      });
}

int run_command(const std::string& name, const PipelineConfig& cfg) {
  if (name == "synth") {
    return cmd_synth(cfg);
  }
  if (name == "retarget") {
    return cmd_retarget(cfg);
  }
  if (name == "reshoot") {
    return cmd_reshoot(cfg);
  }
  if (name == "compose-refine") {
    return cmd_compose_refine(cfg);
  }
  if (name == "eval") {
    return cmd_eval(cfg);
  }
  log_message(LogLevel::Error, "cli", "unknown command: " + name);
  return kExitValidation;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Cinematic motion transfer pipeline"};
  app.require_subcommand(1, 1);
  std::string configPath;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool verbose = false;
  app.add_option("--config", configPath, "Pipeline config (JSON)")->required();
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "Log progress at info level");
  for (const char* name : {"synth", "retarget", "reshoot", "compose-refine", "eval"}) {
    app.add_subcommand(name)->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  PipelineConfig cfg;
  try {
    cfg = load_config(configPath);
  } catch (const std::exception& e) {
    log_message(LogLevel::Error, "cli", e.what());
    return kExitValidation;
  }
  if (seed) {
    cfg.seed = *seed;
  }
  if (jobs) {
    cfg.jobs = *jobs;
  }
  set_log_level(verbose ? LogLevel::Info : cfg.log_level);
  return run_command(app.get_subcommands().front()->get_name(), cfg);
}

} // namespace cinetransfer::cli
