#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace safeik {

/// Returns f(x) and writes its gradient into `grad` (already sized to n).
using ScalarFunction = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// minimize f(x) subject to c_k(x) <= 0 and lower <= x <= upper.
struct NlpProblem {
  int dim = 0;
  ScalarFunction objective;
  std::vector<ScalarFunction> inequalities;
  Eigen::VectorXd lower;  // empty or size dim; infinities allowed
  Eigen::VectorXd upper;
  /// Seed for the quasi-Newton Hessian. Identity when absent.
  std::optional<Eigen::MatrixXd> initial_hessian;

  void validate() const;
};

struct SolveOptions {
  int max_iterations = 30;
  double constraint_tolerance = 1e-6;
  double objective_tolerance = 1e-8;  // on the KKT residual
  double step_tolerance = 1e-12;      // infinity norm of the QP step
  std::optional<double> time_budget;  // seconds of wall time

  void validate() const;
};

enum class SolveStatus {
  converged,
  max_iter,
  time_budget,
  infeasible_qp,
  stalled,     // step or line search collapsed before the KKT tolerance was met
  non_finite,  // a callable returned NaN/inf
};

const char* to_string(SolveStatus status);

struct SolveResult {
  Eigen::VectorXd x_star;
  double f_star = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  double kkt_residual = 0.0;
  double max_constraint_violation = 0.0;  // recomputed at x_star
  int iterations = 0;
  Eigen::VectorXd multipliers;  // inequality duals from the last QP
  bool x0_clamped = false;
  int relaxed_steps = 0;         // iterations that needed the elastic QP
  int hessian_resets = 0;        // Cholesky failures of the quasi-Newton matrix
  std::string diagnostic;
};

/// SLSQP-style sequential quadratic programming: damped BFGS model of the
/// Lagrangian Hessian, linearized inequalities, box bounds kept exactly, an
/// elastic slack when the linearization is infeasible, and Armijo
/// backtracking on the L1 exact-penalty merit function.
SolveResult minimize(const NlpProblem& problem, const Eigen::VectorXd& x0,
                     const SolveOptions& options = {});

}  // namespace safeik
