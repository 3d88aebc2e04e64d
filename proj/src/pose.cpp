#include "safeik/pose.hpp"

#include <cmath>

namespace safeik {

Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;
  const double angle = 2.0 * std::atan2(s, q.w());
  return v * (angle / s);
}

Quat quat_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return q.normalized();
  }
  const double half = 0.5 * angle;
  const Vec3 axis = w / angle;
  return Quat(std::cos(half), std::sin(half) * axis.x(), std::sin(half) * axis.y(),
              std::sin(half) * axis.z());
}

Vec3 orientation_error(const Quat& target, const Quat& current) {
  return quat_log(target * current.conjugate());
}

double angular_distance(const Quat& a, const Quat& b) {
  const Quat d = a.normalized() * b.normalized().conjugate();
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

Quat quat_from_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .normalized();
}

bool is_unit(const Quat& q, double tol) { return std::abs(q.norm() - 1.0) < tol; }

}  // namespace safeik
