#include "cinetransfer/retarget.h"

#include "cinetransfer/capsule_man.h"
#include "cinetransfer/error.h"
#include "cinetransfer/parallel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

namespace cinetransfer {

namespace {

double wrapAngle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) {
    a += 2.0 * std::numbers::pi;
  }
  return a;
}

double pointSegmentDistance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) {
    return (p - a).norm();
  }
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

Vec3 groundAnchor(const Vertices& v) {
  Vec3 lo = v.front();
  Vec3 hi = v.front();
  for (const Vec3& p : v) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {0.5 * (lo.x() + hi.x()), lo.y(), 0.5 * (lo.z() + hi.z())};
}

bool isIdentity(const Mat3& m) {
  return m == Mat3::Identity();
}

} // namespace

void CharacterMesh::validate() const {
  CT_CHECK_INPUT(!vertices.empty(), "character mesh has no vertices");
  for (const Face& f : faces) {
    for (int idx : f) {
      CT_CHECK_INPUT(
          idx >= 0 && idx < static_cast<int>(vertices.size()),
          "character face index out of range");
    }
  }
}

std::vector<int> BoneMap::keypoint_joints() const {
  std::vector<int> out(entries.size(), -1);
  for (const auto& e : entries) {
    if (e.keypoint >= 0 && e.keypoint < static_cast<int>(out.size())) {
      out[e.keypoint] = e.joint;
    }
  }
  return out;
}

int BoneMap::keypoint_of_joint(int joint) const {
  for (const auto& e : entries) {
    if (e.joint == joint) {
      return e.keypoint;
    }
  }
  return -1;
}

void BoneMap::validate(int numJoints) const {
  CT_CHECK_INPUT(!entries.empty(), "bone map is empty");
  std::set<int> keypoints;
  std::set<int> joints;
  for (const auto& e : entries) {
    CT_CHECK_INPUT(
        e.keypoint >= 0 && e.keypoint < keypoint_count(),
        "bone map keypoint index out of range");
    CT_CHECK_INPUT(e.joint >= 0 && e.joint < numJoints, "bone map joint out of range");
    CT_CHECK_INPUT(e.parent_joint < numJoints, "bone map parent joint out of range");
    CT_CHECK_INPUT(keypoints.insert(e.keypoint).second, "bone map keypoint used twice");
    CT_CHECK_INPUT(joints.insert(e.joint).second, "bone map joint used twice");
  }
  for (const auto& e : entries) {
    CT_CHECK_INPUT(
        e.parent_joint < 0 || joints.count(e.parent_joint) == 1,
        "bone map parent joint " + std::to_string(e.parent_joint) + " is not mapped");
    CT_CHECK_INPUT(e.parent_joint != e.joint, "bone map entry has a zero-length bone");
  }
}

BoneMap BoneMap::smpl_default() {
  BoneMap m;
  m.entries = {
      {0, kHead, kNeck},
      {1, kNeck, kPelvis},
      {2, kRightShoulder, kNeck},
      {3, kRightElbow, kRightShoulder},
      {4, kRightWrist, kRightElbow},
      {5, kLeftShoulder, kNeck},
      {6, kLeftElbow, kLeftShoulder},
      {7, kLeftWrist, kLeftElbow},
      {8, kPelvis, -1},
      {9, kRightHip, kPelvis},
      {10, kRightKnee, kRightHip},
      {11, kRightAnkle, kRightKnee},
      {12, kLeftHip, kPelvis},
      {13, kLeftKnee, kLeftHip},
      {14, kLeftAnkle, kLeftKnee},
  };
  return m;
}

double measure_height(const Vertices& vertices) {
  CT_CHECK_INPUT(!vertices.empty(), "cannot measure the height of an empty mesh");
  double lo = vertices.front().y();
  double hi = lo;
  for (const Vec3& p : vertices) {
    lo = std::min(lo, p.y());
    hi = std::max(hi, p.y());
  }
  return hi - lo;
}

DeltaR compute_delta_r(
    const Keypoints2D& characterKeypoints,
    const Keypoints2D& canonicalKeypoints,
    const BoneMap& map) {
  const int k = map.keypoint_count();
  CT_CHECK_INPUT(characterKeypoints.size() == k, "character keypoint count must match the bone map");
  CT_CHECK_INPUT(canonicalKeypoints.size() == k, "canonical keypoint count must match the bone map");

  DeltaR out;
  out.angles.assign(static_cast<size_t>(k), 0.0);
  for (size_t i = 0; i < map.entries.size(); ++i) {
    const BoneMapEntry& e = map.entries[i];
    if (e.parent_joint < 0) {
      continue;
    }
    const int pk = map.keypoint_of_joint(e.parent_joint);
    CT_CHECK_INPUT(pk >= 0, "bone map parent joint is not mapped");
    const Keypoint& c0 = characterKeypoints.points[pk];
    const Keypoint& c1 = characterKeypoints.points[e.keypoint];
    if (c0.confidence < kMinKeypointConfidence || c1.confidence < kMinKeypointConfidence) {
      continue;
    }
    const Keypoint& r0 = canonicalKeypoints.points[pk];
    const Keypoint& r1 = canonicalKeypoints.points[e.keypoint];
    // flip image y so angles are measured counter-clockwise with y up
    const Vec2 charBone(c1.u - c0.u, -(c1.v - c0.v));
    const Vec2 canonBone(r1.u - r0.u, -(r1.v - r0.v));
    if (charBone.squaredNorm() == 0.0 || canonBone.squaredNorm() == 0.0) {
      out.warnings.push_back(
          "zero-length bone for keypoint " + std::to_string(e.keypoint) + "; angle delta set to 0");
      continue;
    }
    out.angles[i] = wrapAngle(
        std::atan2(charBone.y(), charBone.x()) - std::atan2(canonBone.y(), canonBone.x()));
  }
  return out;
}

Keypoints2D front_view_keypoints(
    std::span<const Vec3> joints,
    const BoneMap& map,
    double pixelsPerMeter,
    const Vec2& imageCenter) {
  Keypoints2D out;
  out.points.resize(map.entries.size());
  for (const auto& e : map.entries) {
    CT_CHECK_INPUT(
        e.joint >= 0 && e.joint < static_cast<int>(joints.size()),
        "bone map joint out of range");
    const Vec3& p = joints[e.joint];
    out.points[e.keypoint] = {
        imageCenter.x() + pixelsPerMeter * p.x(), imageCenter.y() - pixelsPerMeter * p.y(), 1.0};
  }
  return out;
}

SkeletonAdjustment adapt_skeleton(
    std::span<const Vec3> canonicalRestJoints,
    std::span<const int> parents,
    const BoneMap& map,
    std::span<const double> deltaR,
    double scale) {
  const int nj = static_cast<int>(canonicalRestJoints.size());
  CT_CHECK_INPUT(static_cast<int>(parents.size()) == nj, "parent count does not match joint count");
  CT_CHECK_INPUT(scale > 0.0, "skeleton scale must be positive");
  CT_CHECK_INPUT(
      deltaR.size() == map.entries.size(), "angle delta count must match the bone map");
  map.validate(nj);

  SkeletonAdjustment adj;
  adj.scale = scale;
  adj.delta_r.assign(deltaR.begin(), deltaR.end());
  const Vec3 root = canonicalRestJoints[0];
  adj.adjusted_rest_joints.resize(nj);
  for (int k = 0; k < nj; ++k) {
    adj.adjusted_rest_joints[k] =
        scale == 1.0 ? canonicalRestJoints[k] : Vec3(root + scale * (canonicalRestJoints[k] - root));
  }

  std::vector<size_t> order(map.entries.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return map.entries[a].joint < map.entries[b].joint;
  });

  // angle deltas are absolute per bone; a bone already turned by an
  // ancestor's entry only needs the remainder
  std::vector<double> accumulated(static_cast<size_t>(nj), 0.0);
  std::vector<double> turnedBy(static_cast<size_t>(nj), 0.0);
  for (size_t i : order) {
    const BoneMapEntry& e = map.entries[i];
    if (e.parent_joint < 0) {
      continue;
    }
    const double angle = deltaR[i] - turnedBy[e.joint];
    if (angle == 0.0) {
      continue;
    }
    const Mat3 rot = rotation_about_z(angle);
    const Vec3 pivot = adj.adjusted_rest_joints[e.parent_joint];
    const std::vector<int> moved = subtree(parents, e.joint);
    std::vector<char> inside(static_cast<size_t>(nj), 0);
    for (int j : moved) {
      adj.adjusted_rest_joints[j] = pivot + rot * (adj.adjusted_rest_joints[j] - pivot);
      turnedBy[j] += angle;
      inside[j] = 1;
    }
    // a joint's bone frame turns when the joint or any of its children moved
    for (int k = 0; k < nj; ++k) {
      bool turned = inside[k] != 0;
      for (int c = k + 1; c < nj && !turned; ++c) {
        turned = parents[c] == k && inside[c] != 0;
      }
      if (turned) {
        accumulated[k] += angle;
      }
    }
  }

  adj.rest_rotations.resize(nj);
  for (int k = 0; k < nj; ++k) {
    adj.rest_rotations[k] =
        accumulated[k] == 0.0 ? Mat3::Identity() : rotation_about_z(accumulated[k]);
  }
  return adj;
}

SkinWeights auto_skin_weights(
    const Vertices& vertices,
    std::span<const Vec3> restJoints,
    std::span<const int> parents) {
  const int nj = static_cast<int>(restJoints.size());
  CT_CHECK_INPUT(static_cast<int>(parents.size()) == nj, "parent count does not match joint count");
  CT_CHECK_INPUT(nj > 0, "skeleton has no joints");
  const int nv = static_cast<int>(vertices.size());

  struct Segment {
    int joint;
    Vec3 a;
    Vec3 b;
  };
  std::vector<Segment> segments;
  for (int k = 0; k < nj; ++k) {
    bool hasChild = false;
    for (int c = 0; c < nj; ++c) {
      if (parents[c] == k) {
        segments.push_back({k, restJoints[k], restJoints[c]});
        hasChild = true;
      }
    }
    if (!hasChild) {
      const int p = parents[k];
      const Vec3 extent = p >= 0 ? Vec3(0.5 * (restJoints[k] - restJoints[p])) : Vec3::Zero();
      segments.push_back({k, restJoints[k], restJoints[k] + extent});
    }
  }

  const double height = nv > 0 ? measure_height(vertices) : 0.0;
  const double eps = height > 0.0 ? 1e-4 * height : 1e-12;
  const int nearest = std::min(4, nj);

  SkinWeights weights = SkinWeights::Zero(nv, nj);
  std::vector<double> dist(static_cast<size_t>(nj));
  std::vector<int> idx(static_cast<size_t>(nj));
  for (int v = 0; v < nv; ++v) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (const Segment& s : segments) {
      dist[s.joint] = std::min(dist[s.joint], pointSegmentDistance(vertices[v], s.a, s.b));
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + nearest, idx.end(), [&](int a, int b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    double total = 0.0;
    for (int i = 0; i < nearest; ++i) {
      const double w = 1.0 / std::pow(dist[idx[i]] + eps, 4);
      weights(v, idx[i]) = w;
      total += w;
    }
    weights.row(v) /= total;
  }
  return weights;
}

Vertices normalize_character(const Vertices& vertices, const SkeletonAdjustment& adj) {
  Vertices out(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) {
    out[i] = adj.scale * vertices[i] + adj.mesh_translation;
  }
  return out;
}

std::vector<Mat3> compensate_rotations(
    const PoseFrame& frame,
    const SkeletonAdjustment& adj,
    std::span<const int> parents) {
  const size_t nj = parents.size();
  CT_CHECK_INPUT(frame.local_rotations.size() == nj, "motion joint count does not match the skeleton");
  CT_CHECK_INPUT(adj.rest_rotations.size() == nj, "adjustment joint count does not match the skeleton");
  std::vector<Mat3> out(nj);
  for (size_t k = 0; k < nj; ++k) {
    const Mat3 r = rotation_to_matrix(frame.local_rotations[k]);
    const Mat3& own = adj.rest_rotations[k];
    const int p = parents[k];
    const bool parentIdentity = p < 0 || isIdentity(adj.rest_rotations[p]);
    if (parentIdentity && isIdentity(own)) {
      out[k] = r;
      continue;
    }
    const Mat3 before = parentIdentity ? Mat3::Identity() : adj.rest_rotations[p];
    out[k] = before * r * own.transpose();
  }
  return out;
}

Animation animate(
    const CharacterMesh& mesh,
    const SkeletonAdjustment& adj,
    const SkinWeights& weights,
    const MotionClip& motion,
    std::span<const int> parents,
    int jobs) {
  const int nj = static_cast<int>(parents.size());
  CT_CHECK_INPUT(
      static_cast<int>(adj.adjusted_rest_joints.size()) == nj,
      "adjusted skeleton joint count does not match parents");
  CT_CHECK_INPUT(
      weights.rows() == static_cast<Eigen::Index>(mesh.vertices.size()) && weights.cols() == nj,
      "skin weights must be character vertices x joints");
  motion.validate(nj);

  const Vertices rest = normalize_character(mesh.vertices, adj);
  Animation out;
  out.meshes.resize(motion.frames.size());
  out.joints.resize(motion.frames.size());
  parallel_for(motion.frames.size(), jobs, [&](size_t t) {
    const PoseFrame& frame = motion.frames[t];
    const std::vector<Mat3> rotations = compensate_rotations(frame, adj, parents);
    const Kinematics kin = forward_kinematics(
        adj.adjusted_rest_joints, parents, rotations, frame.root_translation);
    out.meshes[t] = lbs(rest, weights, kin.skinning);
    out.joints[t] = kin.joint_positions();
  });
  return out;
}

RetargetResult retarget_character(
    const BodyModel& body,
    const CharacterMesh& character,
    const Keypoints2D& characterKeypoints,
    const RetargetOptions& options) {
  character.validate();
  const BoneMap& map = options.bone_map;
  map.validate(body.num_joints());

  RetargetResult out;
  const Vertices bodyRest = shaped_template(body, PoseFrame::rest(body.num_joints()));
  const std::vector<Vec3> canonicalJoints = regress_joints(body, bodyRest);
  out.body_height = measure_height(bodyRest);
  out.character_height = measure_height(character.vertices);
  CT_CHECK_INPUT(out.character_height > 0.0, "character mesh has zero height");

  const Keypoints2D canonicalKeypoints =
      front_view_keypoints(canonicalJoints, map, 100.0, Vec2(256.0, 256.0));
  DeltaR dr = compute_delta_r(characterKeypoints, canonicalKeypoints, map);
  out.warnings = std::move(dr.warnings);

  out.adjustment = adapt_skeleton(canonicalJoints, body.parents, map, dr.angles, 1.0);
  out.adjustment.scale = out.body_height / out.character_height;
  out.adjustment.mesh_translation =
      groundAnchor(bodyRest) - out.adjustment.scale * groundAnchor(character.vertices);

  if (options.match_bone_lengths) {
    auto extent = [](const Keypoints2D& kp) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const Keypoint& p : kp.points) {
        lo = std::min(lo, p.v);
        hi = std::max(hi, p.v);
      }
      return hi - lo;
    };
    const double charExtent = extent(characterKeypoints);
    const double canonExtent = extent(canonicalKeypoints);
    std::vector<size_t> order(map.entries.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return map.entries[a].joint < map.entries[b].joint;
    });
    for (size_t i : order) {
      const BoneMapEntry& e = map.entries[i];
      if (e.parent_joint < 0 || charExtent <= 0.0 || canonExtent <= 0.0) {
        continue;
      }
      const int pk = map.keypoint_of_joint(e.parent_joint);
      const Keypoint& c0 = characterKeypoints.points[pk];
      const Keypoint& c1 = characterKeypoints.points[e.keypoint];
      if (c0.confidence < kMinKeypointConfidence || c1.confidence < kMinKeypointConfidence) {
        continue;
      }
      const Keypoint& r0 = canonicalKeypoints.points[pk];
      const Keypoint& r1 = canonicalKeypoints.points[e.keypoint];
      const double canonLen = std::hypot(r1.u - r0.u, r1.v - r0.v) / canonExtent;
      if (canonLen == 0.0) {
        continue;
      }
      const double ratio = std::hypot(c1.u - c0.u, c1.v - c0.v) / charExtent / canonLen;
      auto& joints = out.adjustment.adjusted_rest_joints;
      const Vec3 shift = (ratio - 1.0) * (joints[e.joint] - joints[e.parent_joint]);
      for (int j : subtree(body.parents, e.joint)) {
        joints[j] += shift;
      }
    }
  }

  const Vertices normalized = normalize_character(character.vertices, out.adjustment);
  out.weights = auto_skin_weights(normalized, out.adjustment.adjusted_rest_joints, body.parents);
  return out;
}

} // namespace cinetransfer
