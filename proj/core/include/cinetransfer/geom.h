#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <vector>

namespace cinetransfer {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Axis-angle rotation: direction is the axis, norm is the angle in radians.
struct Rotation {
  Vec3 axis_angle = Vec3::Zero();

  Rotation() = default;
  explicit Rotation(const Vec3& aa) : axis_angle(aa) {}
};

/// Rodrigues' formula. The zero vector maps to the identity exactly.
Mat3 rotation_to_matrix(const Rotation& r);
Mat3 rotation_to_matrix(const Vec3& axisAngle);

/// Inverse of rotation_to_matrix; angle in [0, pi].
Vec3 matrix_to_axis_angle(const Mat3& m);

/// Rotation about the +Z axis by `angle` radians.
Mat3 rotation_about_z(double angle);

/// x -> rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() {
    return {};
  }
  static RigidTransform from(const Rotation& r, const Vec3& t) {
    return {rotation_to_matrix(r), t};
  }
  static RigidTransform pure_translation(const Vec3& t) {
    return {Mat3::Identity(), t};
  }

  Vec3 apply(const Vec3& p) const {
    return rotation * p + translation;
  }
  Vec3 axis_angle() const {
    return matrix_to_axis_angle(rotation);
  }
  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Pinhole camera. The camera looks along +Z of its own frame; image x points
/// right and image y points down: u = fx*X/Z + cx, v = fy*Y/Z + cy.
struct PinholeCamera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  RigidTransform world_to_camera;

  /// Throws InputError when intrinsics are not usable.
  void validate() const;

  double diagonal() const;
  /// Camera center in world coordinates.
  Vec3 center() const;
};

/// Points with camera-frame depth at or below this value are behind the camera.
inline constexpr double kMinDepth = 1e-6;

/// Returns the pixel position, or nullopt when the point is behind the camera.
std::optional<Vec2> project(const PinholeCamera& cam, const Vec3& worldPoint);

/// Same as project() for a point already in camera coordinates.
std::optional<Vec2> project_camera_point(const PinholeCamera& cam, const Vec3& cameraPoint);

/// World-to-camera transform for a camera at `eye` looking at `target`,
/// with world +Y mapped towards image up.
RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& worldUp = Vec3::UnitY());

} // namespace cinetransfer
