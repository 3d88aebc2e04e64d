#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "safeik/capsule.hpp"
#include "safeik/robot_model.hpp"

namespace safeik {

struct ObjectiveWeights {
  double w_track_pos = 1.0;
  double w_track_ori = 0.5;
  // Smoothness weights multiply squared finite-difference derivatives in
  // SI units (rad/s, rad/s^2, rad/s^3, m/s).
  double w_vel = 1e-5;
  double w_acc = 1e-10;
  double w_jerk = 1e-15;
  double w_cart_vel = 1e-5;
  double w_selfcol = 1e-5;
  double w_col = 3e-6;

  void validate() const;
};

struct CbfParams {
  double epsilon = 0.03;  // m
  double gamma = 0.4;
  double beta = 40.0;  // 1/m^2
  double temperature = 300.0;

  void validate() const;
};

struct PenaltyParams {
  double epsilon = 0.03;  // m
  double delta = 1e-4;    // m^2

  double w_safe() const { return (5.0 * epsilon) * (5.0 * epsilon); }
  void validate() const;
};

struct ManipulabilityParams {
  double sigma_min_threshold = 0.02;
  double condition_number_cap = 500.0;
  double softmax_temperature = 0.01;

  void validate() const;
};

struct SelfCollisionParams {
  double delta = 1e-3;  // m^2
  int min_link_separation = 2;
};

/// Joint-space state carried between control ticks.
struct SolverState {
  JointVector q;
  std::array<JointVector, 3> history;  // q_{-1} (== q), q_{-2}, q_{-3}
  Pose ee;
  double dt = 1.0 / 90.0;
  std::vector<std::optional<Vec3>> last_normals;  // per collider-obstacle pair, for degenerate contacts

  static SolverState at_rest(const RobotModel& model, const JointVector& q, double dt);
  /// Shifts the history and records q as the newest configuration.
  void advance(const RobotModel& model, const JointVector& q_next);
};

struct TermValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// w_p |x_ee - x_t|^2 + w_o |log(q_t q_ee^-1)|^2.
TermValue tracking_objective(const RobotModel& model, const Kinematics& kin, const Jacobian& jac,
                             const Pose& target, const ObjectiveWeights& w);
TermValue tracking_objective(const RobotModel& model, const JointVector& q, const Pose& target,
                             const ObjectiveWeights& w);

/// Finite-difference velocity, acceleration and jerk against the history plus
/// the Cartesian end-effector velocity.
TermValue smoothness_objective(const SolverState& state, const JointVector& q_candidate,
                               const Kinematics& kin, const Jacobian& jac,
                               const ObjectiveWeights& w);
TermValue smoothness_objective(const RobotModel& model, const SolverState& state,
                               const JointVector& q_candidate, const ObjectiveWeights& w);

/// Collider pairs whose links are at least `min_link_separation` apart.
std::vector<std::pair<int, int>> self_collision_pairs(const RobotModel& model,
                                                      const SelfCollisionParams& params);

/// w_selfcol * sum over pairs of 1 / (phi^2 + delta).
TermValue self_collision_objective(const RobotModel& model, const Kinematics& kin,
                                   std::span<const Capsule> links,
                                   std::span<const std::pair<int, int>> pairs, double w_selfcol,
                                   const SelfCollisionParams& params);
TermValue self_collision_objective(const RobotModel& model, const JointVector& q,
                                   double w_selfcol, const SelfCollisionParams& params = {});

struct ManipulabilityValue {
  double value = 0.0;
  Eigen::VectorXd grad;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool finite_difference = false;
};

/// Temperature softmax of (threshold - sigma_min, sigma_max/sigma_min - cap);
/// feasible when <= 0.
ManipulabilityValue manipulability_constraint(const RobotModel& model, const JointVector& q,
                                              const ManipulabilityParams& params);

/// gamma h + beta h^3
double class_k(double h, const CbfParams& params);

/// Barrier values and gradients frozen at q_prev, one entry per
/// collider-obstacle pair in pairwise_distances order.
struct CbfLinearization {
  JointVector q_prev;
  std::vector<double> h;
  std::vector<Eigen::VectorXd> grad_h;
  std::vector<int> collider;
  std::vector<int> obstacle;
  std::vector<bool> degenerate;
};

CbfLinearization linearize_barriers(const RobotModel& model, const SolverState& state,
                                    std::span<const Capsule> obstacles, const CbfParams& params);

/// Temperature log-sum-exp of the terms, shifted by the largest one.
double log_sum_exp(std::span<const double> terms, double temperature);

struct CbfValue {
  double value = 0.0;
  Eigen::VectorXd grad;
  std::vector<double> terms;  // -grad_h^T dq - K(h) per pair
  int dominant = -1;          // pair with the largest term
};

CbfValue cbf_constraint(const CbfLinearization& lin, const JointVector& q_candidate,
                        const CbfParams& params);

/// w_col * sum over links and obstacles of w_safe / (phi^2 + delta).
TermValue penalty_objective(const RobotModel& model, const Kinematics& kin,
                            std::span<const Capsule> links, std::span<const Capsule> obstacles,
                            const PenaltyParams& params, double w_col);
TermValue penalty_objective(const RobotModel& model, const JointVector& q,
                            std::span<const Capsule> obstacles, const PenaltyParams& params,
                            double w_col);

}  // namespace safeik
