#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "safeik/robot_model.hpp"
#include "safeik/text_document.hpp"

using namespace safeik;

namespace {

RobotModel bundled_arm() { return load_robot_file(std::string(SAFEIK_DATA_DIR) + "/arm7.robot"); }

// Independent oracle: homogeneous 4x4 matrices built from raw axis-angle data.
Eigen::Matrix4d homogeneous(const Transform& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = t.orientation.toRotationMatrix();
  m.topRightCorner<3, 1>() = t.position;
  return m;
}

Eigen::Matrix4d matrix_chain_ee(const RobotModel& model, const JointVector& q) {
  Eigen::Matrix4d m = homogeneous(model.base_pose);
  for (int i = 0; i < model.dof(); ++i) {
    const auto& j = model.joints[i];
    Eigen::Matrix4d motion = Eigen::Matrix4d::Identity();
    if (j.kind == JointKind::revolute) {
      motion.topLeftCorner<3, 3>() = Eigen::AngleAxisd(q[i], j.axis).toRotationMatrix();
    } else {
      motion.topRightCorner<3, 1>() = j.axis * q[i];
    }
    m = m * homogeneous(j.parent_offset) * motion;
  }
  return m * homogeneous(model.ee_offset);
}

JointVector random_q(const RobotModel& model, std::mt19937_64& rng) {
  JointVector q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    std::uniform_real_distribution<double> u(model.joints[i].lower, model.joints[i].upper);
    q[i] = u(rng);
  }
  return q;
}

}  // namespace

TEST_CASE("load_robot: minimal one-joint document") {
  const auto model = load_robot(
      "robot one\njoint j revolute axis 0 0 1 xyz 0 0 0 rpy 0 0 0 limits -3.141592653589793 "
      "3.141592653589793\n");
  CHECK(model.dof() == 1);
  CHECK(model.joints[0].upper == doctest::Approx(M_PI));
}

TEST_CASE("load_robot: invariant violations name the field") {
  const std::string head = "robot r\njoint j revolute axis 0 0 1 limits -1 1\n";
  CHECK_THROWS_WITH_AS(load_robot(head + "collider 0 p0 0 0 0 p1 0 0 1 radius 0\n"),
                       doctest::Contains("nonpositive collider radius"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_robot("robot r\njoint j revolute axis 0 0 2 limits -1 1\n"),
                       doctest::Contains("non-unit axis"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_robot("robot r\njoint j revolute axis 0 0 1 limits 1 -1\n"),
                       doctest::Contains("lower limit exceeds"), std::invalid_argument);
  CHECK_THROWS_AS(load_robot(head + "collider 3 p0 0 0 0 p1 0 0 1 radius 0.1\n"),
                  std::invalid_argument);
}

TEST_CASE("load_robot: parse errors carry line and field") {
  try {
    load_robot("robot r\n\njoint j revolute axis 0 0 x limits -1 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "axis");
  }
  CHECK_THROWS_AS(load_robot("robot r\njoint j hinge axis 0 0 1 limits -1 1\n"), ParseError);
  CHECK_THROWS_AS(load_robot("robot r\nlink j\n"), ParseError);
}

TEST_CASE("bundled arm: 7 joints, 8 colliders, zero-config pose by hand") {
  const auto model = bundled_arm();
  CHECK(model.dof() == 7);
  CHECK(model.colliders.size() == 8);
  const auto kin = forward_kinematics(model, JointVector::Zero(7));
  // all offsets are along +z with identity rotations
  const double height = 0.1575 + 0.2025 + 0.2045 + 0.2155 + 0.1845 + 0.2155 + 0.081 + 0.165;
  CHECK(kin.ee.position.x() == doctest::Approx(0.0));
  CHECK(kin.ee.position.y() == doctest::Approx(0.0));
  CHECK(std::abs(kin.ee.position.z() - height) < 1e-12);
  CHECK(angular_distance(kin.ee.orientation, Quat::Identity()) < 1e-12);
}

TEST_CASE("serialize_robot round-trips exactly") {
  const auto model = bundled_arm();
  const auto again = load_robot(serialize_robot(model));
  CHECK(again == model);
  CHECK(serialize_robot(again) == serialize_robot(model));
}

TEST_CASE("forward_kinematics: identity chain and quarter turn") {
  RobotModel m;
  m.joints.push_back({"j", JointKind::revolute, Vec3::UnitZ(), Transform{}, -4, 4});
  m.colliders.push_back({0, Vec3(0, 0, 0), Vec3(1, 0, 0), 0.1});
  {
    const auto kin = forward_kinematics(m, JointVector::Zero(1));
    CHECK(kin.link_frames[0].position.norm() == 0.0);
    CHECK(kin.ee.position.norm() == 0.0);
  }
  m.ee_offset.position = Vec3(1, 0, 0);
  const auto kin = forward_kinematics(m, JointVector::Constant(1, M_PI / 2));
  CHECK(kin.ee.position.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kin.ee.position.y() == doctest::Approx(1.0));
  CHECK_THROWS_AS(forward_kinematics(m, JointVector::Zero(2)), std::invalid_argument);
}

TEST_CASE("forward_kinematics matches an independent matrix-chain oracle") {
  const auto model = bundled_arm();
  JointVector q(7);
  q << 0.3, -0.2, 0.1, -1.2, 0.0, 0.9, 0.4;
  const Eigen::Matrix4d oracle = matrix_chain_ee(model, q);
  const auto kin = forward_kinematics(model, q);
  CHECK((kin.ee.position - oracle.topRightCorner<3, 1>()).norm() < 1e-10);
  CHECK((kin.ee.orientation.toRotationMatrix() - oracle.topLeftCorner<3, 3>()).norm() < 1e-10);
}

TEST_CASE("geometric_jacobian: textbook columns") {
  RobotModel m;
  m.joints.push_back({"j", JointKind::revolute, Vec3::UnitZ(), Transform{}, -4, 4});
  m.ee_offset.position = Vec3(1, 0, 0);
  Jacobian j = geometric_jacobian(m, JointVector::Zero(1));
  Eigen::Matrix<double, 6, 1> expected;
  expected << 0, 1, 0, 0, 0, 1;
  CHECK((j.col(0) - expected).norm() < 1e-15);

  m.joints[0].kind = JointKind::prismatic;
  j = geometric_jacobian(m, JointVector::Zero(1));
  expected << 0, 0, 1, 0, 0, 0;
  CHECK((j.col(0) - expected).norm() < 1e-15);
}

TEST_CASE("geometric_jacobian matches finite differences of FK") {
  const auto model = bundled_arm();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector q = random_q(model, rng);
    const Jacobian jac = geometric_jacobian(model, q);
    const auto kin = forward_kinematics(model, q);
    const double h = 1e-6;
    for (int j = 0; j < 7; ++j) {
      JointVector qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const auto kp = forward_kinematics(model, qp);
      const auto km = forward_kinematics(model, qm);
      const Vec3 lin = (kp.ee.position - km.ee.position) / (2 * h);
      const Vec3 ang = (orientation_error(kp.ee.orientation, kin.ee.orientation) -
                        orientation_error(km.ee.orientation, kin.ee.orientation)) /
                       (2 * h);
      CHECK((lin - jac.col(j).head<3>()).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((ang - jac.col(j).tail<3>()).norm() <= 1e-5 * std::max(1.0, ang.norm()));
    }
  }
}

TEST_CASE("jacobian_derivative matches finite differences of the Jacobian") {
  auto model = bundled_arm();
  // include a prismatic joint to cover the mixed cases
  model.joints[2].kind = JointKind::prismatic;
  model.joints[2].lower = -0.2;
  model.joints[2].upper = 0.2;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const JointVector q = random_q(model, rng);
    const auto kin = forward_kinematics(model, q);
    for (int j = 0; j < 7; ++j) {
      const double h = 1e-6;
      JointVector qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const Jacobian fd = (geometric_jacobian(model, qp) - geometric_jacobian(model, qm)) / (2 * h);
      CHECK((jacobian_derivative(model, kin, j) - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("link_capsules_world: identity, translation equivariance, isometry") {
  RobotModel m;
  m.joints.push_back({"j", JointKind::revolute, Vec3::UnitZ(), Transform{}, -4, 4});
  m.colliders.push_back({0, Vec3(0.1, 0.2, 0.3), Vec3(0.4, 0.5, 0.6), 0.05});
  auto caps = link_capsules_world(m, JointVector::Zero(1));
  CHECK(caps[0].p0 == m.colliders[0].p0);
  CHECK(caps[0].p1 == m.colliders[0].p1);

  m.base_pose.position = Vec3(0, 0, 1);
  caps = link_capsules_world(m, JointVector::Zero(1));
  CHECK((caps[0].p0 - (m.colliders[0].p0 + Vec3(0, 0, 1))).norm() < 1e-15);

  const auto arm = bundled_arm();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto world = link_capsules_world(arm, random_q(arm, rng));
    for (std::size_t c = 0; c < world.size(); ++c) {
      const double local = (arm.colliders[c].p1 - arm.colliders[c].p0).norm();
      CHECK(std::abs((world[c].p1 - world[c].p0).norm() - local) < 1e-12);
      CHECK(world[c].radius == arm.colliders[c].radius);
    }
  }
}
