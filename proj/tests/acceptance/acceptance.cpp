// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance <work-dir>

#include "commands.h"
#include "config.h"

#include "cinetransfer/body.h"
#include "cinetransfer/camopt.h"
#include "cinetransfer/capsule_man.h"
#include "cinetransfer/io.h"
#include "cinetransfer/metrics.h"
#include "cinetransfer/refine.h"
#include "cinetransfer/retarget.h"
#include "cinetransfer/synth.h"

#include "oracles.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace cinetransfer;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

Vec3 randomAxisAngle(Sampler& rng, double maxAngle) {
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return axis.normalized() * rng.uniform(0.0, maxAngle);
}

RigidTransform randomRigid(Sampler& rng) {
  return RigidTransform::from(
      Rotation(randomAxisAngle(rng, kPi)), Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)));
}

double angleBetween(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// 1. Rest-pose identity, rigid equivariance and convex blending on capsule-man.
Outcome lbsSuite() {
  const Stopwatch clock;
  const CapsuleMan& c = synth_body();
  const BodyModel& m = c.model;
  Sampler rng(1);

  const PosedBody rest = pose_body(m, PoseFrame::rest(m.num_joints()));
  double restError = 0.0;
  for (size_t v = 0; v < rest.vertices.size(); ++v) {
    restError = std::max(restError, (rest.vertices[v] - m.template_vertices[v]).norm());
  }

  double rigidError = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RigidTransform> skin;
    for (int k = 0; k < m.num_joints(); ++k) {
      skin.push_back(randomRigid(rng));
    }
    const RigidTransform g = randomRigid(rng);
    std::vector<RigidTransform> moved;
    for (const RigidTransform& s : skin) {
      moved.push_back(g * s);
    }
    const Vertices base = lbs(m.template_vertices, m.skin_weights, skin);
    const Vertices out = lbs(m.template_vertices, m.skin_weights, moved);
    for (size_t v = 0; v < out.size(); ++v) {
      rigidError = std::max(rigidError, (out[v] - g.apply(base[v])).norm());
    }
  }

  // each skinned vertex is the weighted sum of its per-joint candidates and
  // lies inside their bounding box
  double blendError = 0.0;
  bool insideHull = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RigidTransform> skin;
    for (int k = 0; k < m.num_joints(); ++k) {
      skin.push_back(randomRigid(rng));
    }
    const Vertices out = lbs(m.template_vertices, m.skin_weights, skin);
    for (size_t v = 0; v < out.size(); ++v) {
      Vec3 sum = Vec3::Zero();
      Vec3 lo = Vec3::Constant(1e300);
      Vec3 hi = Vec3::Constant(-1e300);
      for (int k = 0; k < m.num_joints(); ++k) {
        const double w = m.skin_weights(static_cast<Eigen::Index>(v), k);
        if (w == 0.0) {
          continue;
        }
        const Vec3 candidate = skin[static_cast<size_t>(k)].apply(m.template_vertices[v]);
        sum += w * candidate;
        lo = lo.cwiseMin(candidate);
        hi = hi.cwiseMax(candidate);
      }
      blendError = std::max(blendError, (out[v] - sum).norm());
      insideHull = insideHull && (out[v].array() >= lo.array() - 1e-12).all() &&
          (out[v].array() <= hi.array() + 1e-12).all();
    }
  }
  const double seconds = clock.seconds();
  Outcome o;
  o.pass = restError <= 1e-9 && rigidError <= 1e-6 && blendError <= 1e-9 && insideHull && seconds < 5.0;
  o.detail = format(
      "rest %.1e (<=1e-9), rigid %.1e (<=1e-6), blend %.1e, in hull %s, %.2f s (<5 s)", restError, rigidError,
      blendError, insideHull ? "yes" : "no", seconds);
  return o;
}

// 2. Height normalization, zero-delta reduction to plain LBS, A-pose wrist direction.
Outcome retargetFidelity() {
  const CapsuleMan& body = synth_body();
  const double ls = measure_height(body.model.template_vertices);
  const MotionClip idle = make_motion(MotionPreset::Idle, 2, 30.0);

  double heightError = 0.0;
  for (double scale : {0.8, 1.15, 1.4}) {
    const SynthCharacter ch = make_character(kPi / 4, scale);
    const RetargetResult r = retarget_character(body.model, ch.mesh, ch.keypoints);
    const Animation anim = animate(ch.mesh, r.adjustment, r.weights, idle, body.model.parents);
    for (const Vertices& mesh : anim.meshes) {
      heightError = std::max(heightError, std::abs(measure_height(mesh) - ls));
    }
  }

  const SynthCharacter same = make_character(0.0, 1.0);
  const Keypoints2D kp = front_view_keypoints(body.rest_joints, BoneMap::smpl_default(), 100.0, Vec2(256.0, 256.0));
  const RetargetResult r0 = retarget_character(body.model, same.mesh, kp);
  const MotionClip walk = make_motion(MotionPreset::Walk, 8, 30.0);
  const Animation a0 = animate(same.mesh, r0.adjustment, r0.weights, walk, body.model.parents);
  bool exact = std::all_of(r0.adjustment.delta_r.begin(), r0.adjustment.delta_r.end(), [](double d) { return d == 0.0; });
  for (size_t t = 0; t < walk.frames.size(); ++t) {
    const Kinematics kin = forward_kinematics(body.rest_joints, body.model.parents, walk.frames[t]);
    exact = exact && a0.meshes[t] == lbs(same.mesh.vertices, r0.weights, kin.skinning);
  }

  const SynthCharacter apose = make_character(kPi / 4, 1.15);
  const RetargetResult ra = retarget_character(body.model, apose.mesh, apose.keypoints);
  const MotionClip raise = make_motion(MotionPreset::ArmRaise, 20, 30.0);
  const Animation aa = animate(apose.mesh, ra.adjustment, ra.weights, raise, body.model.parents);
  double worst = 0.0;
  for (size_t t = 0; t < raise.frames.size(); ++t) {
    const PosedBody canon = pose_body(body.model, raise.frames[t]);
    for (auto [shoulder, wrist] : {std::pair{kLeftShoulder, kLeftWrist}, std::pair{kRightShoulder, kRightWrist}}) {
      worst = std::max(
          worst, angleBetween(aa.joints[t][wrist] - aa.joints[t][shoulder], canon.joints[wrist] - canon.joints[shoulder]));
    }
  }
  const double worstDeg = worst * 180.0 / kPi;

  Outcome o;
  o.pass = heightError <= 1e-6 * ls && exact && worstDeg <= 5.0;
  o.detail = format(
      "height error %.1e m (<=%.1e), identical skeletons exact %s, wrist direction %.3f deg (<=5)", heightError,
      1e-6 * ls, exact ? "yes" : "no", worstDeg);
  return o;
}

// 3. Library losses and metrics against brute force.
Outcome lossOracles() {
  Sampler rng(3);
  const int trials = 200;
  double li = 0.0;
  double lm = 0.0;
  double pa = 0.0;
  double io = 0.0;
  double mp = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const int w = 8 + static_cast<int>(rng.uniform(0, 24));
    const int h = 8 + static_cast<int>(rng.uniform(0, 24));
    const Mask a = oracle::random_mask(w, h, rng);
    const Mask b = oracle::random_mask(w, h, rng);
    li = std::max(li, std::abs(loss_instance(a, b).value - oracle::loss_instance(a, b)));
    pa = std::max(pa, std::abs(pixel_accuracy(a, b) - oracle::pixel_accuracy(a, b)));
    io = std::max(io, std::abs(iou(a, b) - oracle::iou(a, b)));
    const FlowField fa = oracle::random_flow(w, h, rng);
    const FlowField fb = oracle::random_flow(w, h, rng);
    lm = std::max(lm, std::abs(loss_motion(fa, fb, a).value - oracle::loss_motion(fa, fb, a)));
    JointSet ja;
    JointSet jb;
    const int n = 1 + static_cast<int>(rng.uniform(0, 30));
    for (int k = 0; k < n; ++k) {
      ja.positions.emplace_back(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-500, 500));
      jb.positions.emplace_back(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-500, 500));
    }
    mp = std::max(mp, std::abs(mpjpe(ja, jb) - oracle::mpjpe(ja.positions, jb.positions)));
  }
  const double worst = std::max({li, lm, pa, io, mp});
  Outcome o;
  o.pass = worst <= 1e-9;
  o.detail = format(
      "%d instances each; max |diff| L_i %.1e, L_m %.1e, PA %.1e, IoU %.1e, MPJPE %.1e (<=1e-9)", trials, li, lm, pa,
      io, mp);
  return o;
}

std::vector<Vec3> jointsMetres(const JointSet& mm) {
  std::vector<Vec3> out;
  for (const Vec3& p : mm.positions) {
    out.push_back(p / 1000.0);
  }
  return out;
}

// 4. Camera recovery from perturbed ground truth, per shot type.
Outcome cameraRecovery() {
  Outcome o;
  for (ShotType shot : kAllShots) {
    SceneSpec spec;
    spec.shot = shot;
    spec.frames = 30;
    const GroundTruthBundle b = make_scene(spec);
    const CameraTrajectory init =
        perturb_camera(b.cameras, 5.0, 0.05, b.scene_diameter, 1000 + static_cast<std::uint64_t>(shot));
    const Stopwatch clock;
    const TrajectoryResult r = optimize_trajectory(init, b.scene, b.evidence, CamOptConfig{});
    const double seconds = clock.seconds();
    int recovered = 0;
    double initError = 0.0;
    for (int t = 0; t < spec.frames; ++t) {
      const std::vector<Vec3> joints = jointsMetres(b.joints3d[t]);
      recovered += mean_projection_distance(r.cameras.camera(t), b.cameras.camera(t), joints) <= 1.0;
      initError += mean_projection_distance(init.camera(t), b.cameras.camera(t), joints);
    }
    const double fraction = static_cast<double>(recovered) / spec.frames;
    const bool ok = fraction >= 0.9 && seconds <= 60.0;
    o.pass = o.pass && ok;
    o.detail += format(
        "%s%s %d/%d (init %.1f px) %.1f s", o.detail.empty() ? "" : "; ", std::string(shot_name(shot)).c_str(),
        recovered, spec.frames, initError / spec.frames, seconds);
  }
  o.detail += " (need >=90% within 1 px, <=60 s per shot)";
  return o;
}

// 5. Ground-truth camera as init, noisy motion: reprojection error reduction.
Outcome perturbationRobustness() {
  Outcome o;
  const CapsuleMan& body = synth_body();
  for (ShotType shot : kAllShots) {
    SceneSpec spec;
    spec.shot = shot;
    spec.frames = 30;
    const GroundTruthBundle b = make_scene(spec);
    double before = 0.0;
    double after = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const MotionClip noisy = perturb_motion(b.motion, 0.02, body.height, 100 + seed);
      const AnimatedScene scene = pose_scene(body.model, noisy, BoneMap::smpl_default());
      const TrajectoryResult r = optimize_trajectory(b.cameras, scene, b.evidence, CamOptConfig{});
      for (int t = 0; t < spec.frames; ++t) {
        const Keypoints2D& kp = b.evidence.frames[t].keypoints;
        before += mean_reprojection_error(b.cameras.camera(t), scene.keypoint_points[t], kp);
        after += mean_reprojection_error(r.cameras.camera(t), scene.keypoint_points[t], kp);
      }
    }
    const double reduction = before > 0.0 ? 1.0 - after / before : 0.0;
    o.pass = o.pass && reduction >= 0.5;
    o.detail += format(
        "%s%s %.2f->%.2f px (%.0f%%)", o.detail.empty() ? "" : "; ", std::string(shot_name(shot)).c_str(),
        before / (5 * spec.frames), after / (5 * spec.frames), 100.0 * reduction);
  }
  o.detail += " (need >=50% per shot, 5 seeds)";
  return o;
}

// 6. Refinement limit cases, forward-noise variance and determinism.
Outcome refinementAlgebra() {
  Sampler rng(6);
  const int w = 32;
  const int h = 24;
  Video video;
  std::vector<Mask> masks;
  for (int t = 0; t < 3; ++t) {
    Frame f(w, h);
    for (double& s : f.samples) {
      s = rng.uniform(-1, 1);
    }
    video.push_back(std::move(f));
    Mask m(w, h);
    for (auto& bit : m.bits) {
      bit = rng.uniform() < 0.4 ? 1 : 0;
    }
    masks.push_back(std::move(m));
  }
  const std::vector<Mask> none(3, Mask(w, h));
  Mask allSet(w, h);
  std::fill(allSet.bits.begin(), allSet.bits.end(), 1);
  const std::vector<Mask> full(3, allSet);
  const ZeroDenoiser zero;
  const BlurDenoiser blur;

  RefineConfig cfg;
  cfg.strength = 0.0;
  const bool identity = refine_video(video, masks, blur, cfg) == video;

  cfg = {};
  cfg.strength = 0.6;
  const Video masked = refine_video(video, masks, zero, cfg);
  const Video pure = refine_video(video, none, zero, cfg);
  bool outside = true;
  for (size_t t = 0; t < video.size(); ++t) {
    for (size_t p = 0; p < masks[t].size(); ++p) {
      for (int c = 0; c < 3 && masks[t].bits[p] == 0; ++c) {
        outside = outside && masked[t].samples[3 * p + c] == pure[t].samples[3 * p + c];
      }
    }
  }

  cfg = {};
  cfg.latent_weight = 0.0;
  double reproduce = 0.0;
  for (const Denoiser* d : {static_cast<const Denoiser*>(&zero), static_cast<const Denoiser*>(&blur)}) {
    const Video out = refine_video(video, full, *d, cfg);
    for (size_t t = 0; t < video.size(); ++t) {
      for (size_t i = 0; i < video[t].samples.size(); ++i) {
        reproduce = std::max(reproduce, std::abs(out[t].samples[i] - video[t].samples[i]));
      }
    }
  }

  const NoiseSchedule sched = build_schedule(50, 1e-4, 0.02);
  const Frame zeros(500, 200); // 1e5 samples
  const Frame eps = sample_noise(std::vector<Frame>{zeros}, 11)[0];
  double worstVar = 0.0;
  for (int t : {1, 10, 25, 50}) {
    const Frame x = forward_noise(zeros, t, eps, sched);
    double mean = 0.0;
    for (double v : x.samples) {
      mean += v;
    }
    mean /= static_cast<double>(x.samples.size());
    double var = 0.0;
    for (double v : x.samples) {
      var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(x.samples.size() - 1);
    worstVar = std::max(worstVar, std::abs(var / (1.0 - sched.alpha_bar(t)) - 1.0));
  }

  cfg = {};
  cfg.seed = 42;
  cfg.stochastic = true;
  const bool deterministic = refine_video(video, masks, blur, cfg) == refine_video(video, masks, blur, cfg);

  Outcome o;
  o.pass = identity && outside && reproduce <= 1e-5 && worstVar <= 0.02 && deterministic;
  o.detail = format(
      "s=0 identity %s, outside mask = pure denoising %s, w=0 full mask %.1e (<=1e-5), variance off by %.2f%% "
      "(<=2%%), seed determinism %s",
      identity ? "yes" : "no", outside ? "yes" : "no", reproduce, 100.0 * worstVar, deterministic ? "yes" : "no");
  return o;
}

// 7. The command-line pipeline on a 30-frame ARC scene.
Outcome pipelineIntegration(const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string config = R"({
  "output_dir": "out",
  "character_mesh": "out/synth/character.obj",
  "character_keypoints": "out/synth/character_keypoints.json",
  "bone_map": "out/synth/bone_map.json",
  "motion": "out/synth/motion.json",
  "cameras": "out/synth/cameras_init.json",
  "evidence_dir": "out/synth/evidence",
  "environment_dir": "out/synth/environment",
  "ground_truth": {"joints": "out/synth/joints3d.json", "masks_dir": "out/synth/evidence"},
  "synth": {"shot": "ARC", "preset": "walk", "frames": 30, "width": 256, "height": 256,
            "init_rotation_deg": 5.0, "init_translation_fraction": 0.05},
  "seed": 1,
  "log_level": "warn"
})";
  std::ofstream(work / "pipeline.json") << config;

  Outcome o;
  const Stopwatch clock;
  try {
    const cli::PipelineConfig cfg = cli::load_config(work / "pipeline.json");
    for (const char* stage : {"synth", "retarget", "reshoot", "compose-refine", "eval"}) {
      const int code = cli::run_command(stage, cfg);
      if (code != cli::kExitOk) {
        o.pass = false;
        o.detail = format("stage %s exited with %d", stage, code);
        return o;
      }
    }
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("pipeline error: ") + e.what();
    return o;
  }
  const double seconds = clock.seconds();

  // mean values from the written report
  std::ifstream in(work / "out/eval/report.json");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const size_t meanAt = text.find("\"mean\"");
  auto field = [&](const char* key) {
    const size_t k = text.find(std::string("\"") + key + "\"", meanAt);
    if (meanAt == std::string::npos || k == std::string::npos) {
      return std::nan("");
    }
    return std::strtod(text.c_str() + text.find(':', k) + 1, nullptr);
  };
  const double iouMean = field("iou");
  const double mpjpeMean = field("mpjpe");
  const double paMean = field("pa");
  o.pass = seconds <= 180.0 && iouMean >= 0.9 && mpjpeMean <= 5.0;
  o.detail = format(
      "%.1f s (<=180 s), IoU %.4f (>=0.9), MPJPE %.4f mm (<=5), PA %.4f", seconds, iouMean, mpjpeMean, paMean);
  return o;
}

} // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "cinetransfer_acceptance";
  set_log_level(LogLevel::Warn);

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 LBS correctness", lbsSuite},
      {"2 retargeting fidelity", retargetFidelity},
      {"3 loss oracles", lossOracles},
      {"4 camera recovery", cameraRecovery},
      {"5 perturbation robustness", perturbationRobustness},
      {"6 refinement algebra", refinementAlgebra},
      {"7 pipeline integration", [&] { return pipelineIntegration(work); }},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
