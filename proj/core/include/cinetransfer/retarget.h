#pragma once

#include "cinetransfer/body.h"

#include <span>
#include <string>
#include <vector>

namespace cinetransfer {

/// A generated character in its own rest pose, facing +Z with +Y up.
struct CharacterMesh {
  Vertices vertices;
  Faces faces;

  /// Structural checks only; a flat mesh passes and fails at retargeting.
  void validate() const;
};

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  double confidence = 0.0;
};

/// 2D keypoints in an image pixel frame (x right, y down).
struct Keypoints2D {
  std::vector<Keypoint> points;

  int size() const {
    return static_cast<int>(points.size());
  }
};

/// One keypoint/joint correspondence. The bone measured for this entry runs
/// from `parent_joint` to `joint`; parent_joint < 0 marks an anchor entry
/// that carries no angle.
struct BoneMapEntry {
  int keypoint = 0;
  int joint = 0;
  int parent_joint = -1;
};

struct BoneMap {
  std::vector<BoneMapEntry> entries;

  int keypoint_count() const {
    return static_cast<int>(entries.size());
  }
  /// Body joint of each keypoint index.
  std::vector<int> keypoint_joints() const;
  /// Keypoint index of a body joint, or -1.
  int keypoint_of_joint(int joint) const;
  /// Injective on both sides, keypoint indices dense in [0, K), every
  /// referenced joint exists and every parent joint is itself mapped.
  void validate(int numJoints) const;

  /// Fifteen-point map (head, neck, shoulders, elbows, wrists, pelvis/spine,
  /// hips, knees, ankles) onto SMPL joints.
  static BoneMap smpl_default();
};

struct SkeletonAdjustment {
  /// Factor applied to the character mesh before binding (L_s / L_m).
  double scale = 1.0;
  /// Added to the scaled mesh so its ground point lands on the body's.
  Vec3 mesh_translation = Vec3::Zero();
  /// Per bone-map entry, radians in (-pi, pi].
  std::vector<double> delta_r;
  std::vector<Vec3> adjusted_rest_joints;
  /// Rotation that carries each joint's canonical rest bone directions onto
  /// the adjusted ones. Identity when no angle delta touches the joint.
  std::vector<Mat3> rest_rotations;
};

/// Max Y minus min Y. Throws InputError on an empty vertex set.
double measure_height(const Vertices& vertices);

/// Confidence below which a keypoint does not define a bone angle.
inline constexpr double kMinKeypointConfidence = 0.3;

struct DeltaR {
  std::vector<double> angles;
  std::vector<std::string> warnings;
};

/// In-plane angle differences between the character's bones and the
/// canonical skeleton's, one per bone-map entry, wrapped into (-pi, pi].
DeltaR compute_delta_r(
    const Keypoints2D& characterKeypoints,
    const Keypoints2D& canonicalKeypoints,
    const BoneMap& map);

/// Orthographic front view of a skeleton (camera on +Z looking at -Z), in
/// pixel coordinates with y down. Confidence is 1 for every point.
Keypoints2D front_view_keypoints(
    std::span<const Vec3> joints,
    const BoneMap& map,
    double pixelsPerMeter,
    const Vec2& imageCenter);

/// Scales the rest joints about the root, then, parents first, rotates each
/// mapped bone's subtree about the bone's parent joint around +Z until the
/// bone has turned by its angle delta in total.
SkeletonAdjustment adapt_skeleton(
    std::span<const Vec3> canonicalRestJoints,
    std::span<const int> parents,
    const BoneMap& map,
    std::span<const double> deltaR,
    double scale);

/// Inverse-distance bone weights: 1/(d + eps)^4 over the four nearest bones,
/// eps = 1e-4 * mesh height. Leaf joints get a bone extending half their
/// parent bone's length past the joint.
SkinWeights auto_skin_weights(
    const Vertices& vertices,
    std::span<const Vec3> restJoints,
    std::span<const int> parents);

/// Applies scale and mesh_translation to character vertices.
Vertices normalize_character(const Vertices& vertices, const SkeletonAdjustment& adj);

/// Local rotations of a frame after compensating for the adjusted rest pose.
std::vector<Mat3> compensate_rotations(
    const PoseFrame& frame,
    const SkeletonAdjustment& adj,
    std::span<const int> parents);

struct Animation {
  std::vector<Vertices> meshes;
  std::vector<std::vector<Vec3>> joints;
};

/// Skins the normalized character through the adjusted skeleton with the
/// compensated motion, one posed mesh per frame.
Animation animate(
    const CharacterMesh& mesh,
    const SkeletonAdjustment& adj,
    const SkinWeights& weights,
    const MotionClip& motion,
    std::span<const int> parents,
    int jobs = 1);

struct RetargetOptions {
  BoneMap bone_map = BoneMap::smpl_default();
  /// Stretch mapped bones to the character's 2D bone-length proportions.
  bool match_bone_lengths = false;
};

struct RetargetResult {
  SkeletonAdjustment adjustment;
  SkinWeights weights;
  double body_height = 0.0;
  double character_height = 0.0;
  std::vector<std::string> warnings;
};

/// Height normalization, angle deltas, skeleton adaptation and skinning for
/// one character against the body's rest skeleton.
RetargetResult retarget_character(
    const BodyModel& body,
    const CharacterMesh& character,
    const Keypoints2D& characterKeypoints,
    const RetargetOptions& options = {});

} // namespace cinetransfer
