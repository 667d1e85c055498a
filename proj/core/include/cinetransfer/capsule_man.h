#pragma once

#include "cinetransfer/body.h"

#include <array>
#include <string>
#include <vector>

namespace cinetransfer {

/// SMPL joint ordering used by the built-in body and the default bone map.
enum SmplJoint : int {
  kPelvis = 0,
  kLeftHip = 1,
  kRightHip = 2,
  kSpine1 = 3,
  kLeftKnee = 4,
  kRightKnee = 5,
  kSpine2 = 6,
  kLeftAnkle = 7,
  kRightAnkle = 8,
  kSpine3 = 9,
  kLeftFoot = 10,
  kRightFoot = 11,
  kNeck = 12,
  kLeftCollar = 13,
  kRightCollar = 14,
  kHead = 15,
  kLeftShoulder = 16,
  kRightShoulder = 17,
  kLeftElbow = 18,
  kRightElbow = 19,
  kLeftWrist = 20,
  kRightWrist = 21,
  kLeftHand = 22,
  kRightHand = 23,
  kNumSmplJoints = 24,
};

const std::array<int, kNumSmplJoints>& smpl_parents();
const std::array<const char*, kNumSmplJoints>& smpl_joint_names();

/// Parameters of the procedural "capsule-man": one tube per joint, running
/// from the joint to its main child (or to a tip point for leaf joints).
struct CapsuleManParams {
  /// Downward rotation of both arms about the shoulders, radians. Zero is a
  /// T-pose; pi/4 is a 45 degree A-pose.
  double arm_drop = 0.0;
  /// Uniform scale about the ground point below the pelvis.
  double scale = 1.0;
  int sides = 8;
  /// Target spacing between tube rings, meters (before scaling).
  double ring_spacing = 0.045;
};

struct CapsuleMan {
  BodyModel model;
  CapsuleManParams params;
  /// Generating joint (tube owner) of every vertex.
  std::vector<int> vertex_joint;
  /// Position of each vertex along its tube in [0, 1].
  std::vector<double> vertex_param;
  /// Rest joints in the generated pose.
  std::vector<Vec3> rest_joints;
  /// Analytic rest height, from the generator parameters.
  double height = 0.0;
};

/// Builds the capsule-man body. Deterministic; 904 vertices at the default ring spacing, for any arm drop and scale.
CapsuleMan make_capsule_man(const CapsuleManParams& params = {});

/// Analytic max-Y minus min-Y of the generated mesh.
double capsule_man_height(const CapsuleManParams& params);

} // namespace cinetransfer
