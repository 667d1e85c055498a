#include "cinetransfer/capsule_man.h"

#include "cinetransfer/error.h"

#include <cmath>
#include <numbers>

namespace cinetransfer {

namespace {

// T-pose rest layout, meters, feet on y = 0, facing +Z.
struct JointSpec {
  Vec3 position;
  int tubeEnd; // joint index of the main child, or -1 for a tip
  Vec3 tip;    // used when tubeEnd < 0
  double radius;
};

const std::array<JointSpec, kNumSmplJoints>& layout() {
  static const std::array<JointSpec, kNumSmplJoints> kLayout = {{
      {{0.0, 0.92, 0.0}, kSpine1, {}, 0.13},
      {{0.09, 0.85, 0.0}, kLeftKnee, {}, 0.075},
      {{-0.09, 0.85, 0.0}, kRightKnee, {}, 0.075},
      {{0.0, 1.04, 0.0}, kSpine2, {}, 0.13},
      {{0.09, 0.48, 0.0}, kLeftAnkle, {}, 0.055},
      {{-0.09, 0.48, 0.0}, kRightAnkle, {}, 0.055},
      {{0.0, 1.16, 0.0}, kSpine3, {}, 0.14},
      {{0.09, 0.05, 0.0}, kLeftFoot, {}, 0.05},
      {{-0.09, 0.05, 0.0}, kRightFoot, {}, 0.05},
      {{0.0, 1.28, 0.0}, kNeck, {}, 0.14},
      {{0.09, 0.05, 0.10}, -1, {0.09, 0.05, 0.17}, 0.05},
      {{-0.09, 0.05, 0.10}, -1, {-0.09, 0.05, 0.17}, 0.05},
      {{0.0, 1.46, 0.0}, kHead, {}, 0.05},
      {{0.06, 1.40, 0.0}, kLeftShoulder, {}, 0.045},
      {{-0.06, 1.40, 0.0}, kRightShoulder, {}, 0.045},
      {{0.0, 1.56, 0.0}, -1, {0.0, 1.78, 0.0}, 0.10},
      {{0.17, 1.40, 0.0}, kLeftElbow, {}, 0.05},
      {{-0.17, 1.40, 0.0}, kRightElbow, {}, 0.05},
      {{0.44, 1.40, 0.0}, kLeftWrist, {}, 0.04},
      {{-0.44, 1.40, 0.0}, kRightWrist, {}, 0.04},
      {{0.68, 1.40, 0.0}, kLeftHand, {}, 0.035},
      {{-0.68, 1.40, 0.0}, kRightHand, {}, 0.035},
      {{0.76, 1.40, 0.0}, -1, {0.84, 1.40, 0.0}, 0.035},
      {{-0.76, 1.40, 0.0}, -1, {-0.84, 1.40, 0.0}, 0.035},
  }};
  return kLayout;
}

enum class Part { Torso, Arm, Leg, Head };

Part partOf(int j) {
  switch (j) {
    case kPelvis:
    case kSpine1:
    case kSpine2:
    case kSpine3:
      return Part::Torso;
    case kNeck:
    case kHead:
      return Part::Head;
    case kLeftHip:
    case kRightHip:
    case kLeftKnee:
    case kRightKnee:
    case kLeftAnkle:
    case kRightAnkle:
    case kLeftFoot:
    case kRightFoot:
      return Part::Leg;
    default:
      return Part::Arm;
  }
}

constexpr int kNumShape = 10;

} // namespace

const std::array<int, kNumSmplJoints>& smpl_parents() {
  static const std::array<int, kNumSmplJoints> kParents = {
      -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  return kParents;
}

const std::array<const char*, kNumSmplJoints>& smpl_joint_names() {
  static const std::array<const char*, kNumSmplJoints> kNames = {
      "pelvis",         "left_hip",      "right_hip",   "spine1",      "left_knee",
      "right_knee",     "spine2",        "left_ankle",  "right_ankle", "spine3",
      "left_foot",      "right_foot",    "neck",        "left_collar", "right_collar",
      "head",           "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
      "left_wrist",     "right_wrist",   "left_hand",   "right_hand"};
  return kNames;
}

double capsule_man_height(const CapsuleManParams& params) {
  // head tip on top; foot tubes (horizontal, radius r) touch y = ankle - r
  const auto& l = layout();
  const double top = l[kHead].tip.y();
  const double bottom = l[kLeftFoot].position.y() - l[kLeftFoot].radius;
  return params.scale * (top - bottom);
}

CapsuleMan make_capsule_man(const CapsuleManParams& params) {
  CT_CHECK_INPUT(params.scale > 0.0, "capsule-man scale must be positive");
  CT_CHECK_INPUT(params.sides >= 3, "capsule-man needs at least 3 sides per ring");
  CT_CHECK_INPUT(params.ring_spacing > 0.0, "capsule-man ring spacing must be positive");

  const auto& l = layout();
  const auto& parents = smpl_parents();

  // joint and tip positions after the arm drop and scale
  std::vector<Vec3> joints(kNumSmplJoints);
  std::vector<Vec3> tips(kNumSmplJoints);
  for (int j = 0; j < kNumSmplJoints; ++j) {
    joints[j] = l[j].position;
    tips[j] = l[j].tip;
  }
  if (params.arm_drop != 0.0) {
    for (int side = 0; side < 2; ++side) {
      const int shoulder = side == 0 ? kLeftShoulder : kRightShoulder;
      const double angle = side == 0 ? -params.arm_drop : params.arm_drop;
      const Mat3 rot = rotation_about_z(angle);
      const Vec3 pivot = l[shoulder].position;
      for (int j : subtree(parents, shoulder)) {
        joints[j] = pivot + rot * (l[j].position - pivot);
        tips[j] = pivot + rot * (l[j].tip - pivot);
      }
    }
  }
  for (int j = 0; j < kNumSmplJoints; ++j) {
    joints[j] *= params.scale;
    tips[j] *= params.scale;
  }

  CapsuleMan out;
  out.params = params;
  out.rest_joints = joints;
  out.height = capsule_man_height(params);

  Vertices verts;
  Faces faces;
  std::vector<int> owner;
  std::vector<double> param;
  std::vector<Vec3> radial; // unit radial direction, zero for cap centers
  std::vector<int> startCap(kNumSmplJoints, -1);

  for (int j = 0; j < kNumSmplJoints; ++j) {
    const Vec3 a = joints[j];
    const Vec3 b = l[j].tubeEnd >= 0 ? joints[l[j].tubeEnd] : tips[j];
    const Vec3 axis = (b - a).normalized();
    const double r = l[j].radius * params.scale;
    const Vec3 ref = std::abs(axis.dot(Vec3::UnitY())) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
    const Vec3 e1 = axis.cross(ref).normalized();
    const Vec3 e2 = axis.cross(e1);
    // ring count from the undeformed layout so every pose and scale shares
    // one topology
    const Vec3 layoutEnd = l[j].tubeEnd >= 0 ? l[l[j].tubeEnd].position : l[j].tip;
    const double layoutLength = (layoutEnd - l[j].position).norm();
    const int rings = std::max(2, static_cast<int>(std::ceil(layoutLength / params.ring_spacing - 1e-9)));

    const int base = static_cast<int>(verts.size());
    startCap[j] = base;
    verts.push_back(a);
    owner.push_back(j);
    param.push_back(0.0);
    radial.push_back(Vec3::Zero());
    for (int i = 0; i < rings; ++i) {
      const double t = (i + 0.5) / rings;
      const Vec3 c = a + t * (b - a);
      for (int k = 0; k < params.sides; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / params.sides;
        const Vec3 dir = std::cos(phi) * e1 + std::sin(phi) * e2;
        verts.push_back(c + r * dir);
        owner.push_back(j);
        param.push_back(t);
        radial.push_back(dir);
      }
    }
    const int endCap = static_cast<int>(verts.size());
    verts.push_back(b);
    owner.push_back(j);
    param.push_back(1.0);
    radial.push_back(Vec3::Zero());

    const int n = params.sides;
    auto ringVertex = [&](int ring, int k) { return base + 1 + ring * n + (k % n); };
    for (int k = 0; k < n; ++k) {
      faces.push_back({base, ringVertex(0, k + 1), ringVertex(0, k)});
      faces.push_back({endCap, ringVertex(rings - 1, k), ringVertex(rings - 1, k + 1)});
      for (int i = 0; i + 1 < rings; ++i) {
        faces.push_back({ringVertex(i, k), ringVertex(i, k + 1), ringVertex(i + 1, k + 1)});
        faces.push_back({ringVertex(i, k), ringVertex(i + 1, k + 1), ringVertex(i + 1, k)});
      }
    }
  }

  const int nv = static_cast<int>(verts.size());
  BodyModel& m = out.model;
  m.template_vertices = verts;
  m.faces = faces;
  m.parents.assign(parents.begin(), parents.end());
  for (const char* name : smpl_joint_names()) {
    m.joint_names.emplace_back(name);
  }

  // joints sit exactly on the start-cap centers
  std::vector<Eigen::Triplet<double>> reg;
  for (int j = 0; j < kNumSmplJoints; ++j) {
    reg.emplace_back(j, startCap[j], 1.0);
  }
  m.joint_regressor.resize(kNumSmplJoints, nv);
  m.joint_regressor.setFromTriplets(reg.begin(), reg.end());

  // rigid per tube, blended with the parent over the first quarter
  m.skin_weights = SkinWeights::Zero(nv, kNumSmplJoints);
  for (int v = 0; v < nv; ++v) {
    const int j = owner[v];
    const int p = parents[j];
    const double t = param[v];
    if (p >= 0 && t < 0.25) {
      const double wp = 0.5 * (1.0 - t / 0.25);
      m.skin_weights(v, p) = wp;
      m.skin_weights(v, j) = 1.0 - wp;
    } else {
      m.skin_weights(v, j) = 1.0;
    }
  }

  m.shape_dirs = Eigen::MatrixXd::Zero(3 * nv, kNumShape);
  const double s = params.scale;
  for (int v = 0; v < nv; ++v) {
    const Vec3& p = verts[v];
    const int j = owner[v];
    const Part part = partOf(j);
    const double side = p.x() >= 0.0 ? 1.0 : -1.0;
    auto set = [&](int col, const Vec3& d) { m.shape_dirs.block<3, 1>(3 * v, col) = d; };
    set(0, Vec3(0.0, 0.1 * p.y(), 0.0));
    set(1, 0.02 * s * radial[v]);
    if (part == Part::Torso) {
      set(2, 0.03 * s * radial[v]);
    }
    if (part == Part::Arm) {
      set(3, 0.015 * s * radial[v]);
      set(6, Vec3(0.1 * p.x(), 0.0, 0.0));
      set(8, Vec3(0.03 * s * side, 0.0, 0.0));
    }
    if (part == Part::Leg) {
      set(4, 0.02 * s * radial[v]);
      set(7, Vec3(0.0, 0.1 * (p.y() - joints[kLeftHip].y()), 0.0));
      set(9, Vec3(0.02 * s * side, 0.0, 0.0));
    }
    if (j == kHead) {
      set(5, 0.1 * (p - joints[kHead]));
    }
  }

  out.vertex_joint = std::move(owner);
  out.vertex_param = std::move(param);
  m.validate();
  return out;
}

} // namespace cinetransfer
