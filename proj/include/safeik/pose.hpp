#pragma once

#include <Eigen/Geometry>

namespace safeik {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Element of SE(3) stored as translation plus unit quaternion (w, x, y, z).
/// Also used for every rigid transform in the kinematic chain.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& p) { return {p, Quat::Identity()}; }

  Pose operator*(const Pose& rhs) const {
    return {position + orientation * rhs.position, (orientation * rhs.orientation).normalized()};
  }
  Vec3 apply(const Vec3& p) const { return position + orientation * p; }
  Pose inverse() const {
    const Quat inv = orientation.conjugate();
    return {-(inv * position), inv};
  }
  Eigen::Matrix3d rotation() const { return orientation.toRotationMatrix(); }
};

using Transform = Pose;

/// Rotation vector (axis * angle, angle in [0, pi]) of a unit quaternion.
Vec3 quat_log(const Quat& q);

/// Inverse of quat_log.
Quat quat_exp(const Vec3& rotation_vector);

/// Rotation vector of target * current^-1, i.e. the world-frame rotation that
/// carries `current` onto `target`.
Vec3 orientation_error(const Quat& target, const Quat& current);

/// Geodesic angle in radians between two orientations (sign-invariant).
double angular_distance(const Quat& a, const Quat& b);

/// Fixed-axis roll/pitch/yaw (x, then y, then z) to quaternion.
Quat quat_from_rpy(double roll, double pitch, double yaw);

bool is_unit(const Quat& q, double tol = 1e-9);

}  // namespace safeik
