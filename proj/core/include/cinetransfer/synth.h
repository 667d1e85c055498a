#pragma once

#include "cinetransfer/body.h"
#include "cinetransfer/camopt.h"
#include "cinetransfer/capsule_man.h"
#include "cinetransfer/metrics.h"
#include "cinetransfer/refine.h"
#include "cinetransfer/retarget.h"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cinetransfer {

enum class ShotType { PushIn, PullOut, Pan, Track, Follow, Arc };
enum class MotionPreset { Walk, ArmRaise, Turn, Idle };

/// "PUSH-IN", "PULL-OUT", "PAN", "TRACK", "FOLLOW", "ARC".
std::string_view shot_name(ShotType shot);
ShotType parse_shot(std::string_view name);
/// "walk", "arm-raise", "turn", "idle".
std::string_view preset_name(MotionPreset preset);
MotionPreset parse_preset(std::string_view name);

inline constexpr ShotType kAllShots[] = {
    ShotType::PushIn, ShotType::PullOut, ShotType::Pan,
    ShotType::Track, ShotType::Follow, ShotType::Arc};

struct SceneSpec {
  ShotType shot = ShotType::Arc;
  MotionPreset preset = MotionPreset::Walk;
  int frames = 30;
  int width = 256;
  int height = 256;
  /// Focal length in pixels; the principal point is the image center.
  double focal = 340.0;
  double fps = 30.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruthBundle {
  SceneSpec spec;
  MotionClip motion;
  CameraTrajectory cameras;
  EvidenceTrack evidence;
  /// All body joints per frame, millimetres.
  std::vector<JointSet> joints3d;
  /// Posed body meshes and the bone-map joints (metres) behind the evidence.
  AnimatedScene scene;
  /// Bounding-box diagonal of the rest body, metres.
  double scene_diameter = 0.0;
};

/// The built-in body every synthetic scene uses (capsule-man, T-pose).
const CapsuleMan& synth_body();

/// Analytic joint-angle curves over `frames` frames. Idle is the rest pose.
MotionClip make_motion(MotionPreset preset, int frames, double fps);

/// Camera path for a shot around a moving root. Every camera looks at (or
/// near) the root at mid-body height from 4 to 6 m away.
CameraTrajectory make_cameras(
    ShotType shot,
    std::span<const Vec3> rootPath,
    const CameraIntrinsics& intrinsics);

/// Masks, bone-map keypoints (confidence 1 when visible, else 0) and flow to
/// the next frame, rendered from the posed meshes.
EvidenceTrack render_evidence(
    const AnimatedScene& scene,
    const CameraTrajectory& cameras,
    int jobs = 1);

/// Poses `body` for every frame of `motion`; keypoint points follow `map`.
/// When `allJoints` is given it receives every body joint per frame.
AnimatedScene pose_scene(
    const BodyModel& body,
    const MotionClip& motion,
    const BoneMap& map,
    int jobs = 1,
    std::vector<std::vector<Vec3>>* allJoints = nullptr);

GroundTruthBundle make_scene(const SceneSpec& spec, int jobs = 1);

/// Seeded zero-mean Gaussian noise on root translation and local rotations,
/// scaled so the mean joint displacement is roughly sigma * bodyHeight.
MotionClip perturb_motion(const MotionClip& motion, double sigma, double bodyHeight, std::uint64_t seed);

/// Per frame: rotation about the camera center by an angle uniform in
/// [0, maxRotationDeg] about a uniformly random axis, and a shift of the
/// center by a length uniform in [0, maxTranslationFraction * sceneDiameter]
/// in a uniformly random direction.
CameraTrajectory perturb_camera(
    const CameraTrajectory& trajectory,
    double maxRotationDeg,
    double maxTranslationFraction,
    double sceneDiameter,
    std::uint64_t seed);

/// Smooth procedural backdrop in [-1, 1], drifting slowly over time.
Video make_environment(int width, int height, int frames, std::uint64_t seed);

struct SynthCharacter {
  CharacterMesh mesh;
  Keypoints2D keypoints;
  /// Rest joints of the generator, before any normalization.
  std::vector<Vec3> rest_joints;
};

/// Capsule-man in an A-pose (arms dropped by `armDrop` radians), scaled by
/// `scale`, with front-view keypoints for the default bone map.
SynthCharacter make_character(double armDrop, double scale);

/// Mean pixel distance between the projections of `points` by two cameras,
/// over points visible in both.
double mean_projection_distance(
    const PinholeCamera& a,
    const PinholeCamera& b,
    std::span<const Vec3> points);

/// Body joints of a posed scene in millimetres.
std::vector<JointSet> joints_mm(const std::vector<std::vector<Vec3>>& joints);

} // namespace cinetransfer
