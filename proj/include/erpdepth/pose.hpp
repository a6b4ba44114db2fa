#pragma once

#include <Eigen/Core>

namespace erpdepth {

// Rigid transform mapping target-frame points into the source frame:
//   P_source = rotation * P_target + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }
  static Pose from_axis_angle(const Eigen::Vector3d& axis_angle,
                              const Eigen::Vector3d& translation);
  // Rotation about the vertical (y) axis; a positive angle increases
  // longitude.
  static Pose yaw(double angle);

  Eigen::Vector3d apply(const Eigen::Vector3d& point) const {
    return rotation * point + translation;
  }

  // (a * b).apply(x) == a.apply(b.apply(x)).
  Pose operator*(const Pose& inner) const;
  Pose inverse() const;

  Eigen::Vector3d axis_angle() const;

  // Throws ConfigError unless R^T R = I and det R = 1 within 1e-9 and every
  // entry is finite.
  void validate() const;
};

// Rodrigues map, smooth through zero.
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle);

// Left Jacobian of SO(3): d(R(w) p)/dw = -[R(w) p]_x * so3_left_jacobian(w).
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& axis_angle);

// d(R(w) p) / dw evaluated at w = axis_angle.
Eigen::Matrix3d rotate_point_jacobian(const Eigen::Vector3d& axis_angle,
                                      const Eigen::Vector3d& point);

// Geodesic angle between two rotations, in radians.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace erpdepth
