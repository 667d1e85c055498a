#include "cinetransfer/body.h"

#include "cinetransfer/error.h"

#include <cmath>
#include <string>

namespace cinetransfer {

namespace {

Eigen::Map<Eigen::VectorXd> flat(Vertices& v) {
  return {v.empty() ? nullptr : v.front().data(), static_cast<Eigen::Index>(3 * v.size())};
}

} // namespace

void BodyModel::validate() const {
  const int nv = num_vertices();
  const int nj = num_joints();
  CT_CHECK_INPUT(nv > 0, "body model has no vertices");
  CT_CHECK_INPUT(nj > 0, "body model has no joints");
  CT_CHECK_INPUT(parents[0] < 0, "joint 0 must be the root");
  for (int k = 1; k < nj; ++k) {
    CT_CHECK_INPUT(
        parents[k] >= 0 && parents[k] < k,
        "joint " + std::to_string(k) + " parent is not topologically ordered");
  }
  for (const Face& f : faces) {
    for (int idx : f) {
      CT_CHECK_INPUT(idx >= 0 && idx < nv, "face index out of range");
    }
  }
  const auto checkBasis = [nv](const Eigen::MatrixXd& basis, const char* name) {
    CT_CHECK_INPUT(
        basis.size() == 0 || basis.rows() == 3 * nv,
        std::string(name) + " rows must equal 3 * vertex count");
  };
  checkBasis(shape_dirs, "shape_dirs");
  checkBasis(pose_dirs, "pose_dirs");
  checkBasis(expr_dirs, "expr_dirs");
  CT_CHECK_INPUT(
      pose_dirs.size() == 0 || pose_dirs.cols() == 9 * (nj - 1),
      "pose_dirs must have 9 * (joints - 1) columns");

  CT_CHECK_INPUT(
      joint_regressor.rows() == nj && joint_regressor.cols() == nv,
      "joint regressor must be joints x vertices");
  for (int k = 0; k < nj; ++k) {
    double sum = 0.0;
    for (JointRegressor::InnerIterator it(joint_regressor, k); it; ++it) {
      sum += it.value();
    }
    CT_CHECK_INPUT(
        std::abs(sum - 1.0) <= 1e-6,
        "joint regressor row " + std::to_string(k) + " does not sum to 1");
  }

  CT_CHECK_INPUT(
      skin_weights.rows() == nv && skin_weights.cols() == nj,
      "skin weights must be vertices x joints");
  for (int v = 0; v < nv; ++v) {
    CT_CHECK_INPUT(
        skin_weights.row(v).minCoeff() >= 0.0,
        "skin weight row " + std::to_string(v) + " has a negative entry");
    CT_CHECK_INPUT(
        std::abs(skin_weights.row(v).sum() - 1.0) <= 1e-6,
        "skin weight row " + std::to_string(v) + " does not sum to 1");
  }
  CT_CHECK_INPUT(
      joint_names.empty() || static_cast<int>(joint_names.size()) == nj,
      "joint name count must match joint count");
}

PoseFrame PoseFrame::rest(int numJoints, int numShape, int numExpression) {
  PoseFrame f;
  f.local_rotations.assign(static_cast<size_t>(numJoints), Rotation{});
  f.shape = Eigen::VectorXd::Zero(numShape);
  f.expression = Eigen::VectorXd::Zero(numExpression);
  return f;
}

void MotionClip::validate(int numJoints) const {
  CT_CHECK_INPUT(!frames.empty(), "motion clip is empty");
  CT_CHECK_INPUT(fps > 0.0, "motion fps must be positive");
  for (size_t t = 0; t < frames.size(); ++t) {
    CT_CHECK_INPUT(
        static_cast<int>(frames[t].local_rotations.size()) == numJoints,
        "motion frame " + std::to_string(t) + " joint count does not match the model");
    CT_CHECK_INPUT(
        frames[t].shape.size() == frames[0].shape.size() &&
            frames[t].shape == frames[0].shape,
        "motion frames must share one shape vector");
  }
}

Vertices shaped_template(const BodyModel& model, const PoseFrame& frame) {
  Vertices out = model.template_vertices;
  auto v = flat(out);

  if (frame.shape.size() > 0) {
    CT_CHECK_INPUT(
        frame.shape.size() <= model.shape_dirs.cols(),
        "shape coefficient count exceeds the shape basis width");
    v += model.shape_dirs.leftCols(frame.shape.size()) * frame.shape;
  }
  if (frame.expression.size() > 0) {
    CT_CHECK_INPUT(
        frame.expression.size() <= model.expr_dirs.cols(),
        "expression coefficient count exceeds the expression basis width");
    v += model.expr_dirs.leftCols(frame.expression.size()) * frame.expression;
  }
  return out;
}

void add_pose_blend(const BodyModel& model, const PoseFrame& frame, Vertices& vertices) {
  if (model.pose_dirs.size() == 0) {
    return;
  }
  const int nj = model.num_joints();
  CT_CHECK_INPUT(
      static_cast<int>(frame.local_rotations.size()) == nj,
      "pose rotation count does not match the model");
  CT_CHECK_INPUT(vertices.size() == model.template_vertices.size(), "vertex count does not match the model");
  Eigen::VectorXd feature(9 * (nj - 1));
  for (int k = 1; k < nj; ++k) {
    const Mat3 d = rotation_to_matrix(frame.local_rotations[k]) - Mat3::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        feature[9 * (k - 1) + 3 * r + c] = d(r, c);
      }
    }
  }
  flat(vertices) += model.pose_dirs * feature;
}

std::vector<Vec3> regress_joints(const BodyModel& model, const Vertices& restVertices) {
  CT_CHECK_INPUT(
      static_cast<Eigen::Index>(restVertices.size()) == model.joint_regressor.cols(),
      "vertex count does not match the joint regressor width");
  std::vector<Vec3> joints(static_cast<size_t>(model.joint_regressor.rows()), Vec3::Zero());
  for (int k = 0; k < model.joint_regressor.outerSize(); ++k) {
    for (JointRegressor::InnerIterator it(model.joint_regressor, k); it; ++it) {
      joints[k] += it.value() * restVertices[it.col()];
    }
  }
  return joints;
}

std::vector<Vec3> Kinematics::joint_positions() const {
  std::vector<Vec3> out;
  out.reserve(global.size());
  for (const auto& g : global) {
    out.push_back(g.translation);
  }
  return out;
}

Kinematics forward_kinematics(
    std::span<const Vec3> restJoints,
    std::span<const int> parents,
    std::span<const Mat3> localRotations,
    const Vec3& rootTranslation) {
  const size_t nj = restJoints.size();
  CT_CHECK_INPUT(parents.size() == nj, "parent count does not match joint count");
  CT_CHECK_INPUT(localRotations.size() == nj, "rotation count does not match joint count");

  Kinematics out;
  out.global.resize(nj);
  out.skinning.resize(nj);
  for (size_t k = 0; k < nj; ++k) {
    const int p = parents[k];
    if (p < 0) {
      out.global[k] = {localRotations[k], restJoints[k] + rootTranslation};
    } else {
      const RigidTransform local{localRotations[k], restJoints[k] - restJoints[p]};
      out.global[k] = out.global[p] * local;
    }
    const RigidTransform& g = out.global[k];
    // g * inverse(pure translation by the rest joint)
    out.skinning[k] = {g.rotation, g.translation - g.rotation * restJoints[k]};
  }
  return out;
}

Kinematics forward_kinematics(
    std::span<const Vec3> restJoints,
    std::span<const int> parents,
    const PoseFrame& frame) {
  std::vector<Mat3> rotations;
  rotations.reserve(frame.local_rotations.size());
  for (const auto& r : frame.local_rotations) {
    rotations.push_back(rotation_to_matrix(r));
  }
  return forward_kinematics(restJoints, parents, rotations, frame.root_translation);
}

Vertices lbs(
    const Vertices& restVertices,
    const SkinWeights& weights,
    std::span<const RigidTransform> skinningTransforms) {
  CT_CHECK_INPUT(
      weights.rows() == static_cast<Eigen::Index>(restVertices.size()),
      "skin weight rows do not match vertex count");
  CT_CHECK_INPUT(
      weights.cols() == static_cast<Eigen::Index>(skinningTransforms.size()),
      "skin weight columns do not match transform count");
  Vertices out(restVertices.size());
  const Eigen::Index nj = weights.cols();
  for (size_t v = 0; v < restVertices.size(); ++v) {
    Vec3 acc = Vec3::Zero();
    for (Eigen::Index k = 0; k < nj; ++k) {
      const double w = weights(static_cast<Eigen::Index>(v), k);
      if (w != 0.0) {
        acc += w * skinningTransforms[k].apply(restVertices[v]);
      }
    }
    out[v] = acc;
  }
  return out;
}

PosedBody pose_body(const BodyModel& model, const PoseFrame& frame) {
  Vertices rest = shaped_template(model, frame);
  const std::vector<Vec3> restJoints = regress_joints(model, rest);
  add_pose_blend(model, frame, rest);
  const Kinematics kin = forward_kinematics(restJoints, model.parents, frame);
  return {lbs(rest, model.skin_weights, kin.skinning), kin.joint_positions()};
}

std::vector<int> subtree(std::span<const int> parents, int joint) {
  std::vector<char> inside(parents.size(), 0);
  std::vector<int> out;
  inside[static_cast<size_t>(joint)] = 1;
  out.push_back(joint);
  for (size_t k = static_cast<size_t>(joint) + 1; k < parents.size(); ++k) {
    if (parents[k] >= 0 && inside[static_cast<size_t>(parents[k])]) {
      inside[k] = 1;
      out.push_back(static_cast<int>(k));
    }
  }
  return out;
}

} // namespace cinetransfer
