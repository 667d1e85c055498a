#include "cinetransfer/synth.h"

#include "cinetransfer/error.h"
#include "cinetransfer/parallel.h"
#include "cinetransfer/random.h"
#include "cinetransfer/raster.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cinetransfer {

namespace {

constexpr double kPi = std::numbers::pi;

struct NamedShot {
  ShotType shot;
  std::string_view name;
};
constexpr NamedShot kShotNames[] = {
    {ShotType::PushIn, "PUSH-IN"}, {ShotType::PullOut, "PULL-OUT"}, {ShotType::Pan, "PAN"},
    {ShotType::Track, "TRACK"},    {ShotType::Follow, "FOLLOW"},    {ShotType::Arc, "ARC"}};

struct NamedPreset {
  MotionPreset preset;
  std::string_view name;
};
constexpr NamedPreset kPresetNames[] = {
    {MotionPreset::Walk, "walk"},
    {MotionPreset::ArmRaise, "arm-raise"},
    {MotionPreset::Turn, "turn"},
    {MotionPreset::Idle, "idle"}};

// Mid-body height the cameras aim at.
constexpr double kAimHeight = 0.9;
constexpr double kElevation = 0.07;

Vec3 viewDirection(double azimuth) {
  return Vec3(std::sin(azimuth) * std::cos(kElevation), std::sin(kElevation), std::cos(azimuth) * std::cos(kElevation));
}

Vec3 horizontalRight(double azimuth) {
  return Vec3(std::cos(azimuth), 0.0, -std::sin(azimuth));
}

double smoothstep(double u) {
  return u * u * (3.0 - 2.0 * u);
}

Vec3 uniformDirection(Sampler& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

} // namespace

std::string_view shot_name(ShotType shot) {
  for (const auto& s : kShotNames) {
    if (s.shot == shot) {
      return s.name;
    }
  }
  return "ARC";
}

ShotType parse_shot(std::string_view name) {
  for (const auto& s : kShotNames) {
    if (s.name == name) {
      return s.shot;
    }
  }
  throw InputError("unknown shot type: " + std::string(name));
}

std::string_view preset_name(MotionPreset preset) {
  for (const auto& p : kPresetNames) {
    if (p.preset == preset) {
      return p.name;
    }
  }
  return "idle";
}

MotionPreset parse_preset(std::string_view name) {
  for (const auto& p : kPresetNames) {
    if (p.name == name) {
      return p.preset;
    }
  }
  throw InputError("unknown motion preset: " + std::string(name));
}

void SceneSpec::validate() const {
  CT_CHECK_INPUT(frames >= 2, "a synthetic scene needs at least 2 frames");
  CT_CHECK_INPUT(width >= 16 && height >= 16, "synthetic resolution must be at least 16x16");
  CT_CHECK_INPUT(focal > 0.0, "focal length must be positive");
  CT_CHECK_INPUT(fps > 0.0, "fps must be positive");
}

const CapsuleMan& synth_body() {
  static const CapsuleMan body = make_capsule_man();
  return body;
}

MotionClip make_motion(MotionPreset preset, int frames, double fps) {
  CT_CHECK_INPUT(frames >= 1, "motion needs at least one frame");
  CT_CHECK_INPUT(fps > 0.0, "fps must be positive");
  MotionClip clip;
  clip.fps = fps;
  clip.frames.reserve(static_cast<size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    PoseFrame p = PoseFrame::rest(kNumSmplJoints);
    const double time = f / fps;
    const double u = frames > 1 ? static_cast<double>(f) / (frames - 1) : 0.0;
    auto set = [&p](int joint, const Mat3& r) { p.local_rotations[joint].axis_angle = matrix_to_axis_angle(r); };
    auto rx = [](double a) { return rotation_to_matrix(Vec3(a, 0.0, 0.0)); };
    auto ry = [](double a) { return rotation_to_matrix(Vec3(0.0, a, 0.0)); };
    switch (preset) {
      case MotionPreset::Walk: {
        const double phase = 2.0 * kPi * 1.0 * time;
        const double swing = 0.45 * std::sin(phase);
        p.root_translation = Vec3(0.0, 0.02 * std::sin(2.0 * phase), 1.0 * time);
        set(kLeftHip, rx(-swing));
        set(kRightHip, rx(swing));
        set(kLeftKnee, rx(0.35 * (0.5 - 0.5 * std::cos(phase))));
        set(kRightKnee, rx(0.35 * (0.5 + 0.5 * std::cos(phase))));
        set(kSpine2, ry(0.1 * std::sin(phase)));
        set(kLeftShoulder, rx(swing) * rotation_about_z(-1.2));
        set(kRightShoulder, rx(-swing) * rotation_about_z(1.2));
        set(kLeftElbow, ry(0.3));
        set(kRightElbow, ry(-0.3));
        break;
      }
      case MotionPreset::ArmRaise: {
        const double a = 1.0 * std::sin(kPi * u);
        set(kLeftShoulder, rotation_about_z(a));
        set(kRightShoulder, rotation_about_z(-a));
        set(kLeftElbow, rotation_about_z(0.5 * a));
        set(kRightElbow, rotation_about_z(-0.5 * a));
        break;
      }
      case MotionPreset::Turn: {
        set(kPelvis, ry(0.5 * kPi * smoothstep(u)));
        set(kLeftShoulder, rotation_about_z(-0.6));
        set(kRightShoulder, rotation_about_z(0.6));
        break;
      }
      case MotionPreset::Idle:
        break;
    }
    clip.frames.push_back(std::move(p));
  }
  return clip;
}

CameraTrajectory make_cameras(ShotType shot, std::span<const Vec3> rootPath, const CameraIntrinsics& intrinsics) {
  CT_CHECK_INPUT(!rootPath.empty(), "camera path needs at least one root position");
  const int n = static_cast<int>(rootPath.size());
  CameraTrajectory traj;
  traj.intrinsics = intrinsics;
  traj.extrinsics.reserve(static_cast<size_t>(n));
  auto aim = [&](int t) {
    const Vec3& p = rootPath[static_cast<size_t>(t)];
    return Vec3(p.x(), kAimHeight, p.z());
  };
  // Static-eye shots sit off the path midpoint so a walking root stays 4-6 m away.
  const Vec3 aimMid = 0.5 * (aim(0) + aim(n - 1));
  for (int t = 0; t < n; ++t) {
    const double u = n > 1 ? static_cast<double>(t) / (n - 1) : 0.0;
    const Vec3 target = aim(t);
    Vec3 eye;
    Vec3 look;
    switch (shot) {
      case ShotType::PushIn: {
        const double az = 20.0 * kPi / 180.0;
        eye = target + (6.0 - 2.0 * u) * viewDirection(az);
        look = target;
        break;
      }
      case ShotType::PullOut: {
        const double az = -20.0 * kPi / 180.0;
        eye = target + (4.0 + 2.0 * u) * viewDirection(az);
        look = target;
        break;
      }
      case ShotType::Pan: {
        const double az = 10.0 * kPi / 180.0;
        eye = aimMid + 5.0 * viewDirection(az);
        look = target + (-0.4 + 0.8 * u) * horizontalRight(az);
        break;
      }
      case ShotType::Track: {
        const double az = 0.0;
        eye = aimMid + 5.0 * viewDirection(az) + (-0.5 + u) * horizontalRight(az);
        look = eye - 5.0 * viewDirection(az);
        break;
      }
      case ShotType::Follow: {
        const double az = 30.0 * kPi / 180.0;
        eye = target + 4.5 * viewDirection(az);
        look = target;
        break;
      }
      case ShotType::Arc: {
        const double az = (-45.0 + 90.0 * u) * kPi / 180.0;
        eye = target + 4.5 * viewDirection(az);
        look = target;
        break;
      }
    }
    traj.extrinsics.push_back(look_at(eye, look));
  }
  return traj;
}

AnimatedScene pose_scene(
    const BodyModel& body,
    const MotionClip& motion,
    const BoneMap& map,
    int jobs,
    std::vector<std::vector<Vec3>>* allJoints) {
  motion.validate(body.num_joints());
  map.validate(body.num_joints());
  const std::vector<int> kpJoints = map.keypoint_joints();
  const size_t n = motion.frames.size();
  AnimatedScene scene;
  scene.faces = body.faces;
  scene.meshes.resize(n);
  scene.keypoint_points.resize(n);
  std::vector<std::vector<Vec3>> joints(n);
  parallel_for(n, jobs, [&](size_t t) {
    PosedBody posed = pose_body(body, motion.frames[t]);
    std::vector<Vec3> kp;
    kp.reserve(kpJoints.size());
    for (int j : kpJoints) {
      kp.push_back(posed.joints[static_cast<size_t>(j)]);
    }
    scene.meshes[t] = std::move(posed.vertices);
    scene.keypoint_points[t] = std::move(kp);
    joints[t] = std::move(posed.joints);
  });
  if (allJoints != nullptr) {
    *allJoints = std::move(joints);
  }
  return scene;
}

EvidenceTrack render_evidence(const AnimatedScene& scene, const CameraTrajectory& cameras, int jobs) {
  const int n = cameras.num_frames();
  CT_CHECK_INPUT(static_cast<int>(scene.meshes.size()) == n, "scene and camera frame counts differ");
  CT_CHECK_INPUT(
      scene.keypoint_points.empty() || static_cast<int>(scene.keypoint_points.size()) == n,
      "scene keypoint frame count differs from the cameras");
  EvidenceTrack track;
  track.frames.resize(static_cast<size_t>(n));
  parallel_for(static_cast<size_t>(n), jobs, [&](size_t i) {
    const int t = static_cast<int>(i);
    const PinholeCamera cam = cameras.camera(t);
    const Fragments frags = rasterize(scene.meshes[i], scene.faces, cam);
    EvidenceFrame& ev = track.frames[i];
    ev.mask = frags.mask();
    if (!scene.keypoint_points.empty()) {
      for (const ProjectedJoint& pj : project_joints(scene.keypoint_points[i], cam)) {
        ev.keypoints.points.push_back({pj.uv.x(), pj.uv.y(), pj.visible ? 1.0 : 0.0});
      }
    }
    if (t + 1 < n) {
      ev.flow = flow_from_fragments(frags, scene.faces, scene.meshes[i + 1], cameras.camera(t + 1));
    }
  });
  return track;
}

GroundTruthBundle make_scene(const SceneSpec& spec, int jobs) {
  spec.validate();
  const CapsuleMan& body = synth_body();
  GroundTruthBundle out;
  out.spec = spec;
  out.motion = make_motion(spec.preset, spec.frames, spec.fps);

  std::vector<std::vector<Vec3>> joints;
  out.scene = pose_scene(body.model, out.motion, BoneMap::smpl_default(), jobs, &joints);
  std::vector<Vec3> rootPath;
  rootPath.reserve(joints.size());
  for (const auto& j : joints) {
    rootPath.push_back(j[kPelvis]);
  }

  CameraIntrinsics intr;
  intr.fx = spec.focal;
  intr.fy = spec.focal;
  intr.cx = 0.5 * spec.width;
  intr.cy = 0.5 * spec.height;
  intr.width = spec.width;
  intr.height = spec.height;
  out.cameras = make_cameras(spec.shot, rootPath, intr);
  out.evidence = render_evidence(out.scene, out.cameras, jobs);
  out.joints3d = joints_mm(joints);

  const Vertices& rest = body.model.template_vertices;
  Vec3 lo = rest.front();
  Vec3 hi = rest.front();
  for (const Vec3& p : rest) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  out.scene_diameter = (hi - lo).norm();
  return out;
}

MotionClip perturb_motion(const MotionClip& motion, double sigma, double bodyHeight, std::uint64_t seed) {
  CT_CHECK_INPUT(sigma >= 0.0, "motion noise sigma must be non-negative");
  CT_CHECK_INPUT(bodyHeight > 0.0, "body height must be positive");
  if (sigma == 0.0) {
    return motion;
  }
  // Root noise carries most of the displacement; rotation noise adds a
  // non-rigid residual that no camera can explain.
  const double rootStd = 0.5 * sigma * bodyHeight;
  const double rotationStd = 1.0 * sigma;
  Sampler rng(mix_seed(seed));
  MotionClip out = motion;
  for (PoseFrame& f : out.frames) {
    for (int a = 0; a < 3; ++a) {
      f.root_translation[a] += rootStd * rng.normal();
    }
    for (Rotation& r : f.local_rotations) {
      const Vec3 noise(rotationStd * rng.normal(), rotationStd * rng.normal(), rotationStd * rng.normal());
      r.axis_angle = matrix_to_axis_angle(rotation_to_matrix(noise) * rotation_to_matrix(r));
    }
  }
  return out;
}

CameraTrajectory perturb_camera(
    const CameraTrajectory& trajectory,
    double maxRotationDeg,
    double maxTranslationFraction,
    double sceneDiameter,
    std::uint64_t seed) {
  CT_CHECK_INPUT(maxRotationDeg >= 0.0 && maxTranslationFraction >= 0.0, "perturbation bounds must be non-negative");
  CT_CHECK_INPUT(sceneDiameter >= 0.0, "scene diameter must be non-negative");
  Sampler rng(mix_seed(seed));
  CameraTrajectory out = trajectory;
  for (RigidTransform& e : out.extrinsics) {
    const Vec3 axis = uniformDirection(rng);
    const double angle = rng.uniform(0.0, maxRotationDeg) * kPi / 180.0;
    const Vec3 dir = uniformDirection(rng);
    const double shift = rng.uniform(0.0, maxTranslationFraction * sceneDiameter);
    if (angle == 0.0 && shift == 0.0) {
      continue;
    }
    const Vec3 center = -e.rotation.transpose() * e.translation;
    const Mat3 rotation = rotation_to_matrix(Vec3(angle * axis)) * e.rotation;
    const Vec3 movedCenter = center + shift * dir;
    e.rotation = rotation;
    e.translation = -rotation * movedCenter;
  }
  return out;
}

Video make_environment(int width, int height, int frames, std::uint64_t seed) {
  CT_CHECK_INPUT(width > 0 && height > 0 && frames > 0, "environment size must be positive");
  Sampler rng(mix_seed(seed));
  double phase[3];
  for (double& p : phase) {
    p = rng.uniform(0.0, 2.0 * kPi);
  }
  Video video;
  video.reserve(static_cast<size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    Frame f(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = (x + 0.5) / width;
        const double v = (y + 0.5) / height;
        for (int c = 0; c < 3; ++c) {
          const double wave = std::sin(2.0 * kPi * (1.5 * u + 0.01 * t) + phase[c]) *
              std::cos(2.0 * kPi * (0.75 + 0.25 * c) * v + phase[(c + 1) % 3]);
          f.samples[(static_cast<size_t>(y) * width + x) * 3 + c] = 0.3 * (2.0 * v - 1.0) + 0.5 * wave;
        }
      }
    }
    video.push_back(std::move(f));
  }
  return video;
}

SynthCharacter make_character(double armDrop, double scale) {
  CapsuleManParams params;
  params.arm_drop = armDrop;
  params.scale = scale;
  CapsuleMan cm = make_capsule_man(params);
  SynthCharacter out;
  out.mesh.vertices = cm.model.template_vertices;
  out.mesh.faces = cm.model.faces;
  out.rest_joints = cm.rest_joints;
  const double height = cm.height;
  const double ppm = 400.0 / height;
  out.keypoints = front_view_keypoints(out.rest_joints, BoneMap::smpl_default(), ppm, Vec2(256.0, 256.0));
  return out;
}

double mean_projection_distance(const PinholeCamera& a, const PinholeCamera& b, std::span<const Vec3> points) {
  const auto pa = project_joints(points, a);
  const auto pb = project_joints(points, b);
  double sum = 0.0;
  int n = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    if (!pa[i].visible || !pb[i].visible) {
      continue;
    }
    sum += (pa[i].uv - pb[i].uv).norm();
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

std::vector<JointSet> joints_mm(const std::vector<std::vector<Vec3>>& joints) {
  std::vector<JointSet> out;
  out.reserve(joints.size());
  for (const auto& frame : joints) {
    JointSet s;
    s.positions.reserve(frame.size());
    for (const Vec3& p : frame) {
      s.positions.push_back(1000.0 * p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace cinetransfer
