#pragma once

#include "cinetransfer/geom.h"

#include <Eigen/Sparse>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace cinetransfer {

using Vertices = std::vector<Vec3>;
using Face = std::array<int, 3>;
using Faces = std::vector<Face>;

struct TriangleMesh {
  Vertices vertices;
  Faces faces;
};

/// Per-vertex skinning weights, one row per vertex and one column per joint.
using SkinWeights = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using JointRegressor = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Parametric body: template mesh, linear blend-shape bases, joint regressor
/// and skinning weights. Blend-shape bases are stored flattened with
/// 3*num_vertices rows ordered (x0, y0, z0, x1, ...); empty bases contribute
/// nothing.
///
/// The pose basis, when present, is driven by the standard rotation-matrix
/// feature: for every non-root joint k, the 9 entries of (R_k - I) in
/// row-major order, concatenated in joint order.
struct BodyModel {
  Vertices template_vertices;
  Faces faces;
  Eigen::MatrixXd shape_dirs;
  Eigen::MatrixXd pose_dirs;
  Eigen::MatrixXd expr_dirs;
  JointRegressor joint_regressor;
  std::vector<int> parents;
  SkinWeights skin_weights;
  std::vector<std::string> joint_names;

  int num_vertices() const {
    return static_cast<int>(template_vertices.size());
  }
  int num_joints() const {
    return static_cast<int>(parents.size());
  }
  int num_shape() const {
    return static_cast<int>(shape_dirs.cols());
  }
  int num_expression() const {
    return static_cast<int>(expr_dirs.cols());
  }

  /// Checks every structural invariant; throws InputError on violation.
  void validate() const;
};

/// One frame of world-grounded motion.
struct PoseFrame {
  Vec3 root_translation = Vec3::Zero();
  std::vector<Rotation> local_rotations;
  Eigen::VectorXd shape;
  Eigen::VectorXd expression;

  static PoseFrame rest(int numJoints, int numShape = 0, int numExpression = 0);
};

struct MotionClip {
  std::vector<PoseFrame> frames;
  double fps = 30.0;

  int num_frames() const {
    return static_cast<int>(frames.size());
  }
  /// Non-empty, consistent joint count, single shared shape vector.
  void validate(int numJoints) const;
};

/// Template plus shape and expression offsets; joints are regressed from this.
Vertices shaped_template(const BodyModel& model, const PoseFrame& frame);

/// Adds the pose-corrective offsets of `frame` to rest vertices in place.
void add_pose_blend(const BodyModel& model, const PoseFrame& frame, Vertices& vertices);

std::vector<Vec3> regress_joints(const BodyModel& model, const Vertices& restVertices);

struct Kinematics {
  /// Global joint frames: rotation and world position of each joint.
  std::vector<RigidTransform> global;
  /// global[k] composed with the inverse rest-pose transform of joint k.
  std::vector<RigidTransform> skinning;

  std::vector<Vec3> joint_positions() const;
};

/// Parents must be topologically ordered (parents[k] < k, parents[0] < 0).
Kinematics forward_kinematics(
    std::span<const Vec3> restJoints,
    std::span<const int> parents,
    const PoseFrame& frame);

/// Variant taking local rotation matrices directly.
Kinematics forward_kinematics(
    std::span<const Vec3> restJoints,
    std::span<const int> parents,
    std::span<const Mat3> localRotations,
    const Vec3& rootTranslation);

Vertices lbs(
    const Vertices& restVertices,
    const SkinWeights& weights,
    std::span<const RigidTransform> skinningTransforms);

struct PosedBody {
  Vertices vertices;
  std::vector<Vec3> joints;
};

/// Full model evaluation: blend shapes, joint regression, FK and skinning.
PosedBody pose_body(const BodyModel& model, const PoseFrame& frame);

/// Indices of joint k and all its descendants, ascending.
std::vector<int> subtree(std::span<const int> parents, int joint);

} // namespace cinetransfer
