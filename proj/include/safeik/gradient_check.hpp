#pragma once

// Central finite-difference audit of every analytic gradient in the IK stack.

#include <cstdint>
#include <string>
#include <vector>

#include "safeik/robot_model.hpp"

namespace safeik {

struct GradientCheckOptions {
  int instances = 100;      // checked instances per term
  int max_draws = 2000;     // draws allowed per term, counting excluded ones
  double step = 1e-6;       // central-difference step, rad
  double tolerance = 1e-4;  // relative error bound
  std::uint64_t seed = 7;
};

struct GradientCheckResult {
  std::string term;
  int checked = 0;
  int excluded = 0;  // nonsmooth points: witness switches, degenerate contacts
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Relative error |g - g_fd|_inf / max(|g|_inf, |g_fd|_inf, floor). The
/// floor keeps near-zero gradients (e.g. a barrier dominated by a base-fixed
/// collider) from comparing finite-difference round-off against itself.
double gradient_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                               double floor = 1e-6);

/// Random configurations inside the joint limits, obstacles placed a few
/// centimetres from random links, random targets and histories. Terms:
/// fk_jacobian, distance, tracking, smoothness, self_collision, penalty, cbf,
/// manipulability.
std::vector<GradientCheckResult> check_gradients(const RobotModel& model,
                                                 const GradientCheckOptions& options = {});

}  // namespace safeik
