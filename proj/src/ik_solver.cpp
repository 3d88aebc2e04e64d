#include "safeik/ik_solver.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <limits>

#include "safeik/geometry.hpp"

namespace safeik {

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::N: return "N";
    case SolverKind::P: return "P";
    case SolverKind::B: return "B";
  }
  return "?";
}

std::optional<SolverKind> parse_solver_kind(std::string_view text) {
  if (text == "N") return SolverKind::N;
  if (text == "P") return SolverKind::P;
  if (text == "B") return SolverKind::B;
  return std::nullopt;
}

void IkParams::validate() const {
  weights.validate();
  cbf.validate();
  penalty.validate();
  manipulability.validate();
  solve.validate();
  if (!(self_collision.delta > 0.0)) throw std::invalid_argument("self-collision delta must be positive");
}

namespace {

Eigen::MatrixXd model_hessian(const RobotModel& model, const SolverState& state,
                              const ObjectiveWeights& w) {
  const Jacobian jac = geometric_jacobian(model, state.q);
  const auto jv = jac.topRows<3>();
  const auto jw = jac.bottomRows<3>();
  const double dt = state.dt;
  const double smooth = 2.0 * (w.w_vel / (dt * dt) + w.w_acc / std::pow(dt, 4) +
                               w.w_jerk / std::pow(dt, 6));
  Eigen::MatrixXd h = 2.0 * (w.w_track_pos + w.w_cart_vel / (dt * dt)) * (jv.transpose() * jv) +
                      2.0 * w.w_track_ori * (jw.transpose() * jw);
  h.diagonal().array() += smooth;
  // keeps the seed positive definite at singular configurations
  h.diagonal().array() += 1e-6 * std::max(1.0, h.diagonal().maxCoeff());
  return h;
}

}  // namespace

StepResult solve_step(SolverKind kind, SolverState& state, const Pose& target,
                      std::span<const Capsule> obstacles, const RobotModel& model,
                      const IkParams& params) {
  if (state.q.size() != model.dof()) throw std::invalid_argument("state size mismatch");
  const auto started = std::chrono::steady_clock::now();
  const int n = model.dof();
  const auto pairs = self_collision_pairs(model, params.self_collision);
  const bool penalized = kind == SolverKind::P && !obstacles.empty();
  const bool barrier = kind == SolverKind::B && !obstacles.empty();

  NlpProblem nlp;
  nlp.dim = n;
  nlp.lower = model.lower_limits();
  nlp.upper = model.upper_limits();
  nlp.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Kinematics kin = forward_kinematics(model, x);
    const Jacobian jac = geometric_jacobian(model, kin);
    const auto links = link_capsules_world(model, kin);
    const TermValue tr = tracking_objective(model, kin, jac, target, params.weights);
    const TermValue sm = smoothness_objective(state, x, kin, jac, params.weights);
    const TermValue sc = self_collision_objective(model, kin, links, pairs,
                                                  params.weights.w_selfcol, params.self_collision);
    double f = tr.value + sm.value + sc.value;
    grad = tr.grad + sm.grad + sc.grad;
    if (penalized) {
      const TermValue pe =
          penalty_objective(model, kin, links, obstacles, params.penalty, params.weights.w_col);
      f += pe.value;
      grad += pe.grad;
    }
    return f;
  };
  nlp.inequalities.push_back([&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const ManipulabilityValue m = manipulability_constraint(model, x, params.manipulability);
    grad = m.grad;
    return m.value;
  });

  CbfLinearization lin;
  if (barrier) {
    lin = linearize_barriers(model, state, obstacles, params.cbf);
    nlp.inequalities.push_back([&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
      const CbfValue c = cbf_constraint(lin, x, params.cbf);
      grad = c.grad;
      return c.value;
    });
  }
  if (params.model_hessian) nlp.initial_hessian = model_hessian(model, state, params.weights);

  const SolveResult sol = minimize(nlp, state.q, params.solve);

  StepResult out;
  StepDiagnostics& d = out.diagnostics;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.kkt_residual = sol.kkt_residual;
  d.max_violation = sol.max_constraint_violation;
  d.objective = sol.f_star;
  d.accepted = sol.status != SolveStatus::non_finite && sol.status != SolveStatus::infeasible_qp &&
               sol.x_star.allFinite() &&
               sol.max_constraint_violation <= params.solve.constraint_tolerance;
  out.q_next = d.accepted ? sol.x_star : state.q;

  Eigen::VectorXd scratch(n);
  d.manipulability = nlp.inequalities[0](out.q_next, scratch);
  if (barrier) {
    const CbfValue c = cbf_constraint(lin, out.q_next, params.cbf);
    d.cbf_value = c.value;
    d.dominant_obstacle = lin.obstacle[c.dominant];
    d.cbf_margin = -c.terms[c.dominant];
    for (bool deg : lin.degenerate) d.degenerate_contacts += deg ? 1 : 0;
  }

  const auto links = link_capsules_world(model, out.q_next);
  if (!obstacles.empty() && !links.empty()) {
    const std::vector<DistanceWitness> pairs = pairwise_distances(links, obstacles);
    state.last_normals.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!pairs[i].degenerate) state.last_normals[i] = pairs[i].normal;
    }
    d.phi.assign(obstacles.size(), std::numeric_limits<double>::infinity());
    for (const DistanceWitness& w : pairs) d.phi[w.obstacle] = std::min(d.phi[w.obstacle], w.phi);
    d.phi_min = *std::min_element(d.phi.begin(), d.phi.end());
  }
  state.advance(model, out.q_next);
  d.step_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace safeik
