#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "safeik/capsule.hpp"
#include "safeik/pose.hpp"

namespace safeik {

using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

enum class JointKind { revolute, prismatic };

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::revolute;
  Vec3 axis = Vec3::UnitZ();        // joint frame
  Transform parent_offset;          // from previous link frame to this joint
  double lower = 0.0;               // rad or m
  double upper = 0.0;
};

/// Capsule rigidly attached to link `link_index` (the frame after joint
/// `link_index`), expressed in that link frame.
struct LinkCollider {
  int link_index = 0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;
};

struct RobotModel {
  std::string name = "robot";
  std::vector<JointSpec> joints;
  Transform base_pose;
  Transform ee_offset;
  std::vector<LinkCollider> colliders;

  int dof() const { return static_cast<int>(joints.size()); }
  JointVector lower_limits() const;
  JointVector upper_limits() const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

bool operator==(const JointSpec& a, const JointSpec& b);
bool operator==(const LinkCollider& a, const LinkCollider& b);
bool operator==(const RobotModel& a, const RobotModel& b);

/// Parses the line-oriented robot description (see data/README.md).
/// Throws ParseError on malformed text and std::invalid_argument on
/// invariant violations.
RobotModel load_robot(std::string_view document);
RobotModel load_robot_file(const std::string& path);

/// Emits a document that load_robot parses back to an identical model.
std::string serialize_robot(const RobotModel& model);

struct Kinematics {
  std::vector<Transform> link_frames;  // world frame of each link
  Pose ee;
};

Kinematics forward_kinematics(const RobotModel& model, const JointVector& q);

/// 6xn world-frame geometric Jacobian of the end effector: linear rows first.
Jacobian geometric_jacobian(const RobotModel& model, const JointVector& q);
Jacobian geometric_jacobian(const RobotModel& model, const Kinematics& kin);

/// World-frame joint axis of joint j given computed link frames.
Vec3 joint_axis_world(const RobotModel& model, const Kinematics& kin, int j);

/// 3xn positional Jacobian of a world point rigidly attached to `link_index`.
/// Columns of joints after that link are zero.
Eigen::Matrix3Xd point_jacobian(const RobotModel& model, const Kinematics& kin, int link_index,
                                const Vec3& point);

/// Partial derivative of the end-effector geometric Jacobian with respect to
/// joint j.
Jacobian jacobian_derivative(const RobotModel& model, const Kinematics& kin, int j);

std::vector<Capsule> link_capsules_world(const RobotModel& model, const JointVector& q);
std::vector<Capsule> link_capsules_world(const RobotModel& model, const Kinematics& kin);

}  // namespace safeik
