#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "safeik/ik_terms.hpp"
#include "safeik/sqp.hpp"

namespace safeik {

/// N: tracking, smoothness, self-collision, manipulability.
/// P: N plus the proximity penalty in the objective.
/// B: N plus the aggregated barrier inequality.
enum class SolverKind { N, P, B };

std::string_view to_string(SolverKind kind);
std::optional<SolverKind> parse_solver_kind(std::string_view text);

struct IkParams {
  ObjectiveWeights weights;
  CbfParams cbf;
  PenaltyParams penalty;
  ManipulabilityParams manipulability;
  SelfCollisionParams self_collision;
  SolveOptions solve;
  /// Seed the quasi-Newton matrix with the Gauss-Newton tracking Hessian plus
  /// the exact smoothness Hessian instead of the identity.
  bool model_hessian = true;

  void validate() const;
};

struct StepDiagnostics {
  SolveStatus status = SolveStatus::max_iter;
  bool accepted = false;  // false: q held at its previous value
  int iterations = 0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  double objective = 0.0;
  double manipulability = 0.0;          // c_m at q_next
  std::vector<double> phi;              // per obstacle at q_next, recomputed
  std::optional<double> phi_min;        // absent without obstacles
  std::optional<double> cbf_value;      // B only
  int dominant_obstacle = -1;           // B only
  std::optional<double> cbf_margin;     // grad_h^T dq + K(h) for the dominant pair
  int degenerate_contacts = 0;
  double step_ms = 0.0;                 // wall time of the solve
};

struct StepResult {
  JointVector q_next;
  StepDiagnostics diagnostics;
};

/// One control tick: warm-started from state.q, minimizes the kind's objective
/// under its constraints, then advances `state`. A step whose result violates
/// any constraint beyond the tolerance is rejected and q is held.
StepResult solve_step(SolverKind kind, SolverState& state, const Pose& target,
                      std::span<const Capsule> obstacles, const RobotModel& model,
                      const IkParams& params);

}  // namespace safeik
