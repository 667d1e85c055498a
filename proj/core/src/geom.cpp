#include "cinetransfer/geom.h"

#include "cinetransfer/error.h"

#include <cmath>

namespace cinetransfer {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

} // namespace

Mat3 rotation_to_matrix(const Vec3& r) {
  const double theta2 = r.squaredNorm();
  const Mat3 k = skew(r);
  if (theta2 < 1e-16) {
    // second-order series; exact identity at zero
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * k + b * k * k;
}

Mat3 rotation_to_matrix(const Rotation& r) {
  return rotation_to_matrix(r.axis_angle);
}

Vec3 matrix_to_axis_angle(const Mat3& m) {
  const Eigen::AngleAxisd aa(m);
  if (aa.angle() == 0.0) {
    return Vec3::Zero();
  }
  return aa.axis() * aa.angle();
}

Mat3 rotation_about_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return a * b;
}

RigidTransform invert(const RigidTransform& t) {
  return t.inverse();
}

void PinholeCamera::validate() const {
  CT_CHECK_INPUT(fx > 0.0 && fy > 0.0, "camera focal lengths must be positive");
  CT_CHECK_INPUT(width >= 1 && height >= 1, "camera image size must be at least 1x1");
  CT_CHECK_INPUT(std::isfinite(cx) && std::isfinite(cy), "camera principal point must be finite");
}

double PinholeCamera::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

Vec3 PinholeCamera::center() const {
  return -(world_to_camera.rotation.transpose() * world_to_camera.translation);
}

std::optional<Vec2> project_camera_point(const PinholeCamera& cam, const Vec3& p) {
  if (p.z() <= kMinDepth) {
    return std::nullopt;
  }
  return Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
}

std::optional<Vec2> project(const PinholeCamera& cam, const Vec3& worldPoint) {
  return project_camera_point(cam, cam.world_to_camera.apply(worldPoint));
}

RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& worldUp) {
  const Vec3 forward = (target - eye).normalized();
  // image y points down, so the camera's +Y is world "down" projected
  Vec3 right = forward.cross(worldUp);
  if (right.squaredNorm() < 1e-18) {
    right = forward.cross(Vec3::UnitZ());
  }
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 camToWorld;
  camToWorld.col(0) = right;
  camToWorld.col(1) = down;
  camToWorld.col(2) = forward;
  RigidTransform out;
  out.rotation = camToWorld.transpose();
  out.translation = -(out.rotation * eye);
  return out;
}

} // namespace cinetransfer
