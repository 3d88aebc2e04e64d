#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SVD>

#include "safeik/geometry.hpp"
#include "safeik/gradient_check.hpp"
#include "safeik/ik_solver.hpp"
#include "safeik/ik_terms.hpp"

using namespace safeik;

namespace {

RobotModel bundled_arm() { return load_robot_file(std::string(SAFEIK_DATA_DIR) + "/arm7.robot"); }

// One revolute joint about z with the tool on the axis: J = [0 0 0 0 0 1]^T.
RobotModel one_link_robot() {
  return load_robot(
      "robot one\n"
      "joint j revolute axis 0 0 1 xyz 0 0 0 rpy 0 0 0 limits -3 3\n"
      "ee xyz 0 0 0.1 rpy 0 0 0\n"
      "collider 0 p0 0 0 0 p1 0 0 0.2 radius 0.05\n");
}

JointVector random_q(const RobotModel& model, std::mt19937_64& rng) {
  JointVector q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    std::uniform_real_distribution<double> u(0.9 * model.joints[i].lower, 0.9 * model.joints[i].upper);
    q[i] = u(rng);
  }
  return q;
}

}  // namespace

TEST_CASE("tracking: zero at the target, 1 cm offset by hand") {
  const RobotModel arm = bundled_arm();
  std::mt19937_64 rng(3);
  const JointVector q = random_q(arm, rng);
  const Pose ee = forward_kinematics(arm, q).ee;

  const TermValue at = tracking_objective(arm, q, ee, ObjectiveWeights{});
  CHECK(at.value < 1e-20);
  CHECK(at.grad.norm() < 1e-12);

  ObjectiveWeights w;
  w.w_track_pos = 1.0;
  w.w_track_ori = 0.0;
  Pose target = ee;
  target.position += Vec3(0.0, 0.01, 0.0);
  CHECK(tracking_objective(arm, q, target, w).value == doctest::Approx(1e-4).epsilon(1e-9));
}

TEST_CASE("smoothness: stationary history and constant velocity") {
  const RobotModel arm = bundled_arm();
  std::mt19937_64 rng(5);
  const JointVector q = random_q(arm, rng);
  const double dt = 1.0 / 90.0;
  const ObjectiveWeights w;

  SolverState rest = SolverState::at_rest(arm, q, dt);
  CHECK(smoothness_objective(arm, rest, q, w).value == 0.0);

  // history on a straight joint-space line; the candidate continues it
  JointVector step(arm.dof());
  for (int i = 0; i < arm.dof(); ++i) step[i] = 0.001 * (i + 1);
  SolverState s = rest;
  s.history = {q, q - step, q - 2.0 * step};
  s.q = q;
  s.ee = forward_kinematics(arm, q).ee;
  const JointVector cand = q + step;
  const Vec3 xv = (forward_kinematics(arm, cand).ee.position - s.ee.position) / dt;
  const double expected = w.w_vel * (step / dt).squaredNorm() + w.w_cart_vel * xv.squaredNorm();
  CHECK(smoothness_objective(arm, s, cand, w).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("self_collision: stretched arm is near zero, a touching pair is w/delta") {
  const RobotModel arm = bundled_arm();
  const SelfCollisionParams p;
  const ObjectiveWeights w;
  CHECK(self_collision_objective(arm, JointVector::Zero(arm.dof()), w.w_selfcol, p).value < 1e-2);

  // Synthetic link set: colliders 0 and 3 touch, everything else is far away.
  std::vector<Capsule> links;
  for (std::size_t i = 0; i < arm.colliders.size(); ++i) {
    const Vec3 far(100.0 * static_cast<double>(i), 0.0, 0.0);
    links.push_back({far, far + Vec3(0.0, 0.0, 0.1), 0.05});
  }
  links[3] = {Vec3(0.1, 0.0, 0.0), Vec3(0.1, 0.0, 0.1), 0.05};  // center gap 0.1 = radii sum
  const auto kin = forward_kinematics(arm, JointVector::Zero(arm.dof()));
  const std::vector<std::pair<int, int>> pairs{{0, 3}};
  const TermValue t = self_collision_objective(arm, kin, links, pairs, 2.0, p);
  CHECK(t.value == doctest::Approx(2.0 / p.delta).epsilon(1e-12));
  CHECK(std::isfinite(t.grad.norm()));
}

TEST_CASE("manipulability: single joint, boundary, stretched arm") {
  const RobotModel one = one_link_robot();
  ManipulabilityParams p;
  p.sigma_min_threshold = 0.1;
  p.condition_number_cap = 1e6;
  const ManipulabilityValue v = manipulability_constraint(one, JointVector::Zero(1), p);
  CHECK(v.sigma_min == doctest::Approx(1.0));
  CHECK(v.value < 0.0);

  // threshold exactly at sigma_min: the first term is 0 and dominates
  const RobotModel arm = bundled_arm();
  std::mt19937_64 rng(11);
  const JointVector q = random_q(arm, rng);
  ManipulabilityParams edge;
  edge.sigma_min_threshold = manipulability_constraint(arm, q, edge).sigma_min;
  edge.condition_number_cap = 1e9;
  const ManipulabilityValue e = manipulability_constraint(arm, q, edge);
  CHECK(e.sigma_min == edge.sigma_min_threshold);
  CHECK(std::abs(e.value) < 1e-12);

  // elbow almost stretched: the constraint is active and one step raises sigma_min
  const IkParams params;
  JointVector straight(7);
  straight << 0.0, 0.3, 0.0, -0.05, 0.0, -0.6, 0.0;
  const ManipulabilityValue before = manipulability_constraint(arm, straight, params.manipulability);
  CHECK(before.value > 0.0);
  SolverState state = SolverState::at_rest(arm, straight, 1.0 / 90.0);
  const StepResult r = solve_step(SolverKind::N, state, state.ee, {}, arm, params);
  const ManipulabilityValue after = manipulability_constraint(arm, r.q_next, params.manipulability);
  CHECK(after.sigma_min > before.sigma_min);
}

TEST_CASE("class_k: hand values") {
  CbfParams p;
  CHECK(class_k(0.0, p) == 0.0);
  p.gamma = 1.0;
  p.beta = 1.0;
  CHECK(class_k(1.0, p) == 2.0);
  p.gamma = 2.0;
  p.beta = 0.5;
  CHECK(class_k(-0.1, p) == doctest::Approx(-0.2005).epsilon(1e-12));
}

TEST_CASE("log_sum_exp: one term, equal terms, bounds on random sets") {
  const std::vector<double> one{0.37};
  CHECK(log_sum_exp(one, 100.0) == 0.37);
  const std::vector<double> two{-0.2, -0.2};
  CHECK(log_sum_exp(two, 100.0) == doctest::Approx(-0.2 + std::log(2.0) / 100.0).epsilon(1e-14));
  const std::vector<double> five{0.1, -0.3, 0.05, 0.099, -1.0};
  CHECK(std::abs(log_sum_exp(five, 200.0) - 0.1) <= std::log(5.0) / 200.0);

  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> count(1, 40);
  std::uniform_real_distribution<double> term(-2.0, 2.0), temp(1.0, 1000.0);
  int failures = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> xs(static_cast<std::size_t>(count(rng)));
    for (double& x : xs) x = term(rng);
    const double t = temp(rng);
    const double mx = *std::max_element(xs.begin(), xs.end());
    const double c = log_sum_exp(xs, t);
    if (!(mx <= c && c <= mx + std::log(static_cast<double>(xs.size())) / t)) ++failures;
  }
  CHECK(failures == 0);

  const std::vector<double> huge{900.0, 1000.0, -5000.0};
  CHECK(log_sum_exp(huge, 300.0) == doctest::Approx(1000.0));
}

TEST_CASE("cbf_constraint: one pair reduces to its linear term") {
  CbfLinearization lin;
  lin.q_prev = JointVector::Zero(3);
  lin.h = {0.02};
  Eigen::VectorXd g(3);
  g << 0.3, -0.1, 0.5;
  lin.grad_h = {g};
  lin.collider = {0};
  lin.obstacle = {0};
  lin.degenerate = {false};
  const CbfParams p;
  JointVector q(3);
  q << 0.01, 0.02, -0.03;
  const CbfValue v = cbf_constraint(lin, q, p);
  CHECK(v.value == -g.dot(q) - class_k(0.02, p));
  CHECK((v.grad + g).norm() == 0.0);
  CHECK(v.dominant == 0);

  // deeply violated barriers stay finite
  lin.h = {-1.0};
  CHECK(std::isfinite(cbf_constraint(lin, q, p).value));
}

TEST_CASE("penalty: hand values on a single collider") {
  const RobotModel one = one_link_robot();
  PenaltyParams p;
  p.epsilon = 0.05;
  CHECK(p.w_safe() == doctest::Approx(0.0625));
  p.delta = 1e-12;
  // collider axis is the z axis with radius 0.05; a point obstacle 0.3 away
  const std::vector<Capsule> obs{{Vec3(0.3, 0.0, 0.1), Vec3(0.3, 0.0, 0.1), 0.0}};
  CHECK(penalty_objective(one, JointVector::Zero(1), obs, p, 1.0).value ==
        doctest::Approx(1.0).epsilon(1e-9));

  p.delta = 1e-4;
  const std::vector<Capsule> touching{{Vec3(0.05, 0.0, 0.1), Vec3(0.05, 0.0, 0.1), 0.0}};
  CHECK(penalty_objective(one, JointVector::Zero(1), touching, p, 2.0).value ==
        doctest::Approx(2.0 * 0.0625 / 1e-4).epsilon(1e-9));
}

TEST_CASE("every analytic gradient matches central differences on 100 instances") {
  const auto results = check_gradients(bundled_arm());
  CHECK(results.size() == 8);
  for (const GradientCheckResult& r : results) {
    INFO(r.term, " max rel ", r.max_rel_error, " excluded ", r.excluded);
    CHECK(r.checked == 100);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.passed);
  }
}

TEST_CASE("gradient_relative_error: scale and floor") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 1.0, 2.0002;
  CHECK(gradient_relative_error(a, b) == doctest::Approx(1e-4).epsilon(1e-6));
  a << 1e-12, 0.0;
  b << 0.0, 0.0;
  CHECK(gradient_relative_error(a, b) == doctest::Approx(1e-6));
}
