#include "cinetransfer/body.h"
#include "cinetransfer/capsule_man.h"
#include "cinetransfer/error.h"
#include "cinetransfer/random.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace cinetransfer;

namespace {

using Mat4 = Eigen::Matrix4d;

Vec3 randomAxisAngle(Sampler& rng, double maxAngle) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return axis.normalized() * rng.uniform(0.0, maxAngle);
}

PoseFrame randomPose(Sampler& rng, int numJoints, double maxAngle) {
  PoseFrame f = PoseFrame::rest(numJoints);
  for (auto& r : f.local_rotations) {
    r = Rotation(randomAxisAngle(rng, maxAngle));
  }
  f.root_translation = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return f;
}

// Homogeneous 4x4 forward kinematics, written independently of the library.
std::vector<Mat4> oracleSkinning(
    const std::vector<Vec3>& joints, std::span<const int> parents, const PoseFrame& f) {
  const size_t n = joints.size();
  std::vector<Mat4> global(n);
  std::vector<Mat4> skin(n);
  for (size_t k = 0; k < n; ++k) {
    const Vec3 aa = f.local_rotations[k].axis_angle;
    const double angle = aa.norm();
    Mat3 r = Mat3::Identity();
    if (angle > 0) {
      r = Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
    }
    Mat4 local = Mat4::Identity();
    local.topLeftCorner<3, 3>() = r;
    if (parents[k] < 0) {
      local.topRightCorner<3, 1>() = joints[k] + f.root_translation;
      global[k] = local;
    } else {
      local.topRightCorner<3, 1>() = joints[k] - joints[parents[k]];
      global[k] = global[parents[k]] * local;
    }
    Mat4 unrest = Mat4::Identity();
    unrest.topRightCorner<3, 1>() = -joints[k];
    skin[k] = global[k] * unrest;
  }
  return skin;
}

Vertices oracleLbs(const Vertices& rest, const SkinWeights& w, const std::vector<Mat4>& skin) {
  Vertices out(rest.size(), Vec3::Zero());
  for (size_t v = 0; v < rest.size(); ++v) {
    const Eigen::Vector4d h(rest[v].x(), rest[v].y(), rest[v].z(), 1.0);
    for (size_t k = 0; k < skin.size(); ++k) {
      out[v] += w(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k)) *
          (skin[k] * h).head<3>();
    }
  }
  return out;
}

std::vector<RigidTransform> randomTransforms(Sampler& rng, int n) {
  std::vector<RigidTransform> t(static_cast<size_t>(n));
  for (auto& x : t) {
    x = RigidTransform::from(
        Rotation(randomAxisAngle(rng, std::numbers::pi)),
        Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)));
  }
  return t;
}

SkinWeights randomWeights(Sampler& rng, int nv, int nj) {
  SkinWeights w(nv, nj);
  for (int v = 0; v < nv; ++v) {
    for (int k = 0; k < nj; ++k) {
      w(v, k) = rng.uniform();
    }
    w.row(v) /= w.row(v).sum();
  }
  return w;
}

// Two vertices, two joints; a minimal valid model for error paths.
BodyModel tinyModel() {
  BodyModel m;
  m.template_vertices = {Vec3(0, 0, 0), Vec3(0, 1, 0)};
  m.faces = {};
  m.parents = {-1, 0};
  m.joint_names = {"a", "b"};
  m.joint_regressor.resize(2, 2);
  m.joint_regressor.insert(0, 0) = 1.0;
  m.joint_regressor.insert(1, 1) = 1.0;
  m.skin_weights = SkinWeights::Identity(2, 2);
  return m;
}

const CapsuleMan& capsule() {
  static const CapsuleMan c = make_capsule_man();
  return c;
}

} // namespace

TEST(Body, CapsuleModelValidates) {
  EXPECT_NO_THROW(capsule().model.validate());
}

TEST(Body, RestPoseReproducesTemplate) {
  const BodyModel& m = capsule().model;
  const PoseFrame rest = PoseFrame::rest(m.num_joints(), m.num_shape());
  const PosedBody posed = pose_body(m, rest);
  ASSERT_EQ(posed.vertices.size(), m.template_vertices.size());
  for (size_t v = 0; v < posed.vertices.size(); ++v) {
    EXPECT_LE((posed.vertices[v] - m.template_vertices[v]).norm(), 1e-9);
  }
}

TEST(Body, IdentityTransformsLeaveVerticesUnchanged) {
  const BodyModel& m = capsule().model;
  const std::vector<RigidTransform> id(static_cast<size_t>(m.num_joints()));
  const Vertices out = lbs(m.template_vertices, m.skin_weights, id);
  for (size_t v = 0; v < out.size(); ++v) {
    EXPECT_LE((out[v] - m.template_vertices[v]).norm(), 1e-12);
  }
}

TEST(Body, SingleJointQuarterTurn) {
  const Vertices rest = {Vec3(1, 0, 0)};
  const SkinWeights w = SkinWeights::Ones(1, 1);
  const std::vector<RigidTransform> t = {{rotation_about_z(std::numbers::pi / 2), Vec3::Zero()}};
  const Vertices out = lbs(rest, w, t);
  EXPECT_NEAR((out[0] - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(Body, ConvexBlendOfIdentityAndTranslation) {
  const Vertices rest = {Vec3(0.3, -0.2, 0.5)};
  SkinWeights w(1, 2);
  w << 0.5, 0.5;
  const std::vector<RigidTransform> t = {
      RigidTransform::identity(), RigidTransform::pure_translation(Vec3(0, 0, 2))};
  const Vertices out = lbs(rest, w, t);
  EXPECT_NEAR((out[0] - (rest[0] + Vec3(0, 0, 1))).norm(), 0.0, 1e-12);
}

TEST(Body, RigidEquivarianceOnCapsule) {
  const CapsuleMan& c = capsule();
  Sampler rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto skin = randomTransforms(rng, c.model.num_joints());
    const RigidTransform g = randomTransforms(rng, 1)[0];
    std::vector<RigidTransform> moved;
    for (const auto& s : skin) {
      moved.push_back(g * s);
    }
    const Vertices base = lbs(c.model.template_vertices, c.model.skin_weights, skin);
    const Vertices out = lbs(c.model.template_vertices, c.model.skin_weights, moved);
    for (size_t v = 0; v < out.size(); ++v) {
      ASSERT_LE((out[v] - g.apply(base[v])).norm(), 1e-6);
    }
  }
}

TEST(Body, PoseRigidEquivariance) {
  // Rotating the root by Q and re-placing it moves the whole posed body by (Q, t).
  const BodyModel& m = capsule().model;
  Sampler rng(5);
  const PoseFrame f = randomPose(rng, m.num_joints(), 1.0);
  const PosedBody a = pose_body(m, f);
  const Vec3 j0 = a.joints[0] - f.root_translation;
  const Mat3 q = rotation_to_matrix(randomAxisAngle(rng, 3.0));
  const Vec3 t(0.4, -0.3, 1.2);
  PoseFrame g = f;
  g.local_rotations[0] = Rotation(matrix_to_axis_angle(q * rotation_to_matrix(f.local_rotations[0])));
  g.root_translation = q * (j0 + f.root_translation) + t - j0;
  const PosedBody b = pose_body(m, g);
  for (size_t v = 0; v < a.vertices.size(); ++v) {
    ASSERT_LE((b.vertices[v] - (q * a.vertices[v] + t)).norm(), 1e-6);
  }
}

TEST(Body, ConvexHullOfCandidates) {
  // With non-negative weights summing to 1, each coordinate of the blend lies
  // within the range of the per-joint candidates, and equals the explicit sum.
  Sampler rng(3);
  const int nv = 40;
  const int nj = 4;
  Vertices rest;
  for (int v = 0; v < nv; ++v) {
    rest.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  const SkinWeights w = randomWeights(rng, nv, nj);
  const auto t = randomTransforms(rng, nj);
  const Vertices out = lbs(rest, w, t);
  for (int v = 0; v < nv; ++v) {
    Vec3 lo = Vec3::Constant(1e300);
    Vec3 hi = Vec3::Constant(-1e300);
    Vec3 sum = Vec3::Zero();
    for (int k = 0; k < nj; ++k) {
      const Vec3 c = t[k].apply(rest[v]);
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
      sum += w(v, k) * c;
    }
    for (int d = 0; d < 3; ++d) {
      EXPECT_GE(out[v][d], lo[d] - 1e-12);
      EXPECT_LE(out[v][d], hi[d] + 1e-12);
    }
    EXPECT_LE((out[v] - sum).norm(), 1e-12);
  }
}

TEST(Body, PoseBodyMatchesHomogeneousOracle) {
  const BodyModel& m = capsule().model;
  Sampler rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    PoseFrame f = randomPose(rng, m.num_joints(), 0.8);
    f.shape = Eigen::VectorXd::Zero(m.num_shape());
    for (int i = 0; i < m.num_shape(); ++i) {
      f.shape[i] = rng.uniform(-1, 1);
    }
    const Vertices rest = shaped_template(m, f);
    std::vector<Vec3> joints(static_cast<size_t>(m.num_joints()), Vec3::Zero());
    const Eigen::MatrixXd reg(m.joint_regressor);
    for (int k = 0; k < m.num_joints(); ++k) {
      for (int v = 0; v < m.num_vertices(); ++v) {
        joints[k] += reg(k, v) * rest[v];
      }
    }
    const auto skin = oracleSkinning(joints, m.parents, f);
    const Vertices expected = oracleLbs(rest, m.skin_weights, skin);
    const PosedBody posed = pose_body(m, f);
    for (size_t v = 0; v < expected.size(); ++v) {
      ASSERT_LE((posed.vertices[v] - expected[v]).norm(), 1e-9);
    }
    for (int k = 0; k < m.num_joints(); ++k) {
      const Vec3 oj = (skin[k] * Eigen::Vector4d(joints[k].x(), joints[k].y(), joints[k].z(), 1)).head<3>();
      ASSERT_LE((posed.joints[k] - oj).norm(), 1e-9);
    }
  }
}

TEST(Body, ForwardKinematicsRestAndTranslation) {
  const std::vector<Vec3> joints = {Vec3(0, 1, 0), Vec3(0, 2, 0), Vec3(1, 2, 0)};
  const std::vector<int> parents = {-1, 0, 1};
  PoseFrame f = PoseFrame::rest(3);
  Kinematics kin = forward_kinematics(joints, parents, f);
  for (const auto& s : kin.skinning) {
    EXPECT_EQ(s.rotation, Mat3::Identity());
    EXPECT_EQ(s.translation, Vec3::Zero());
  }
  f.root_translation = Vec3(0, 0, 1);
  kin = forward_kinematics(joints, parents, f);
  for (const auto& s : kin.skinning) {
    EXPECT_LE((s.rotation - Mat3::Identity()).norm(), 1e-15);
    EXPECT_LE((s.translation - Vec3(0, 0, 1)).norm(), 1e-15);
  }
}

TEST(Body, TwoJointChainRotatesChild) {
  const std::vector<Vec3> joints = {Vec3(1, 1, 0), Vec3(2, 1, 0)};
  const std::vector<int> parents = {-1, 0};
  PoseFrame f = PoseFrame::rest(2);
  f.local_rotations[0] = Rotation(Vec3(0, 0, std::numbers::pi / 2));
  const Kinematics kin = forward_kinematics(joints, parents, f);
  const auto pos = kin.joint_positions();
  EXPECT_LE((pos[0] - Vec3(1, 1, 0)).norm(), 1e-12);
  EXPECT_LE((pos[1] - Vec3(1, 2, 0)).norm(), 1e-12);
}

TEST(Body, ShapeBlendIsLinear) {
  BodyModel m = tinyModel();
  m.shape_dirs = Eigen::MatrixXd::Zero(6, 2);
  for (int v = 0; v < 2; ++v) {
    m.shape_dirs(3 * v, 0) = 0.1;
    m.shape_dirs(3 * v + 1, 1) = -0.2 * (v + 1);
  }
  PoseFrame f = PoseFrame::rest(2, 2);
  f.shape << 1.0, 0.0;
  Vertices one = shaped_template(m, f);
  EXPECT_NEAR(one[0].x(), 0.1, 1e-15);
  EXPECT_NEAR(one[1].x(), 0.1, 1e-15);

  f.shape << 0.7, -1.3;
  const Vertices both = shaped_template(m, f);
  f.shape << 0.7, 0.0;
  const Vertices a = shaped_template(m, f);
  f.shape << 0.0, -1.3;
  const Vertices b = shaped_template(m, f);
  for (size_t v = 0; v < both.size(); ++v) {
    EXPECT_LE((both[v] - (a[v] + b[v] - m.template_vertices[v])).norm(), 1e-12);
  }
}

TEST(Body, PoseBlendDoesNotMoveJoints) {
  BodyModel m = tinyModel();
  m.pose_dirs = Eigen::MatrixXd::Ones(6, 9);
  PoseFrame f = PoseFrame::rest(2);
  Vertices rest = shaped_template(m, f);
  add_pose_blend(m, f, rest);
  EXPECT_EQ(rest, m.template_vertices);

  f.local_rotations[1] = Rotation(Vec3(0.3, 0, 0));
  const PosedBody posed = pose_body(m, f);
  // Joint 1 sits on vertex 1 before correctives; the corrective offsets
  // vertex 1 but the joint stays on the shaped template.
  EXPECT_LE((posed.joints[1] - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_GT((posed.vertices[1] - Vec3(0, 1, 0)).norm(), 1e-3);
}

TEST(Body, RegressorAffineEquivariance) {
  const BodyModel& m = capsule().model;
  Sampler rng(23);
  const std::vector<Vec3> base = regress_joints(m, m.template_vertices);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 d(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Vertices moved = m.template_vertices;
    for (auto& v : moved) {
      v += d;
    }
    const auto j = regress_joints(m, moved);
    for (size_t k = 0; k < j.size(); ++k) {
      EXPECT_LE((j[k] - (base[k] + d)).norm(), 1e-12);
    }
  }
}

TEST(Body, RegressorOneHotAndMidpoint) {
  BodyModel m = tinyModel();
  m.template_vertices = {Vec3(1, 2, 3), Vec3(3, 4, 5)};
  EXPECT_EQ(regress_joints(m, m.template_vertices)[1], Vec3(3, 4, 5));
  m.joint_regressor.coeffRef(0, 0) = 0.5;
  m.joint_regressor.coeffRef(0, 1) = 0.5;
  EXPECT_LE((regress_joints(m, m.template_vertices)[0] - Vec3(2, 3, 4)).norm(), 1e-15);
}

TEST(Body, ValidationErrors) {
  EXPECT_NO_THROW(tinyModel().validate());
  {
    BodyModel m = tinyModel();
    m.skin_weights(0, 0) = 0.9;
    EXPECT_THROW(m.validate(), InputError);
  }
  {
    BodyModel m = tinyModel();
    m.skin_weights(0, 0) = 1.5;
    m.skin_weights(0, 1) = -0.5;
    EXPECT_THROW(m.validate(), InputError);
  }
  {
    BodyModel m = tinyModel();
    m.joint_regressor.coeffRef(1, 1) = 0.8;
    EXPECT_THROW(m.validate(), InputError);
  }
  {
    BodyModel m = tinyModel();
    m.parents = {-1, 1};
    EXPECT_THROW(m.validate(), InputError);
  }
  {
    BodyModel m = tinyModel();
    m.shape_dirs = Eigen::MatrixXd::Zero(5, 1);
    EXPECT_THROW(m.validate(), InputError);
  }
  {
    BodyModel m = tinyModel();
    EXPECT_THROW(regress_joints(m, {Vec3::Zero()}), InputError);
    PoseFrame f = PoseFrame::rest(2, 3);
    EXPECT_THROW(shaped_template(m, f), InputError);
  }
}

TEST(Body, MotionClipValidation) {
  MotionClip clip;
  EXPECT_THROW(clip.validate(2), InputError);
  clip.frames = {PoseFrame::rest(2, 1), PoseFrame::rest(2, 1)};
  EXPECT_NO_THROW(clip.validate(2));
  EXPECT_THROW(clip.validate(3), InputError);
  clip.frames[1].shape[0] = 0.5;
  EXPECT_THROW(clip.validate(2), InputError);
}

TEST(Body, SubtreeListsDescendants) {
  const auto& p = smpl_parents();
  const auto arm = subtree(p, kLeftShoulder);
  EXPECT_EQ(arm, (std::vector<int>{kLeftShoulder, kLeftElbow, kLeftWrist, kLeftHand}));
  EXPECT_EQ(subtree(p, kPelvis).size(), static_cast<size_t>(kNumSmplJoints));
}
