#pragma once

#include <Eigen/Core>

namespace safeik {

/// Strictly convex QP
///
///   minimize   1/2 d^T H d + g^T d
///   subject to A d + b <= 0,  lower <= d <= upper.
///
/// Infinite bounds are ignored.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;  // m x n, m may be 0
  Eigen::VectorXd b;
  Eigen::VectorXd lower;  // size n or empty (unbounded)
  Eigen::VectorXd upper;
};

enum class QpStatus { optimal, infeasible, not_convex, iteration_limit };

struct QpResult {
  Eigen::VectorXd d;
  Eigen::VectorXd multipliers;        // >= 0, one per row of A
  Eigen::VectorXd bound_multipliers;  // upper-bound minus lower-bound multiplier
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
};

/// Dual active-set method (Goldfarb-Idnani). Starts from the unconstrained
/// minimizer and adds the most violated constraint each major iteration while
/// keeping dual feasibility, so the first primal-feasible iterate is optimal.
QpResult solve_qp(const QpProblem& problem);

/// Max over stationarity, primal feasibility, and complementarity residuals
/// for a candidate (d, multipliers).
double qp_kkt_residual(const QpProblem& problem, const QpResult& result);

}  // namespace safeik
