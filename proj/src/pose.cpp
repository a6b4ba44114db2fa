#include "erpdepth/pose.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "erpdepth/errors.hpp"

namespace erpdepth {
namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

}  // namespace

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle) {
  const double theta2 = axis_angle.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Eigen::Matrix3d k = skew(axis_angle);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& axis_angle) {
  // J_l = I + (1 - cos t)/t^2 [w]_x + (t - sin t)/t^3 [w]_x^2.
  const double theta2 = axis_angle.squaredNorm();
  const double theta = std::sqrt(theta2);
  double b;
  double c;
  if (theta < 1e-4) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Eigen::Matrix3d k = skew(axis_angle);
  return Eigen::Matrix3d::Identity() + b * k + c * k * k;
}

Eigen::Matrix3d rotate_point_jacobian(const Eigen::Vector3d& axis_angle,
                                      const Eigen::Vector3d& point) {
  const Eigen::Vector3d rotated = rotation_from_axis_angle(axis_angle) * point;
  return -skew(rotated) * so3_left_jacobian(axis_angle);
}

Pose Pose::from_axis_angle(const Eigen::Vector3d& axis_angle,
                           const Eigen::Vector3d& translation) {
  return Pose{rotation_from_axis_angle(axis_angle), translation};
}

Pose Pose::yaw(double angle) {
  return from_axis_angle(Eigen::Vector3d(0.0, angle, 0.0), Eigen::Vector3d::Zero());
}

Pose Pose::operator*(const Pose& inner) const {
  return Pose{rotation * inner.rotation, rotation * inner.translation + translation};
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation.transpose();
  return Pose{rt, -(rt * translation)};
}

Eigen::Vector3d Pose::axis_angle() const {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

void Pose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ConfigError("pose has non-finite entries");
  }
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-9) throw ConfigError("pose rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw ConfigError("pose rotation must have determinant +1");
  }
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d delta = a.transpose() * b;
  const Eigen::Vector3d axis(delta(2, 1) - delta(1, 2), delta(0, 2) - delta(2, 0),
                             delta(1, 0) - delta(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (delta.trace() - 1.0));
}

}  // namespace erpdepth
