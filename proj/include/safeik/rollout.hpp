#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "safeik/blending.hpp"
#include "safeik/ik_solver.hpp"
#include "safeik/run_config.hpp"
#include "safeik/scene.hpp"

namespace safeik {

struct RolloutOptions {
  SolverKind kind = SolverKind::B;
  IkParams params;
  double dt = 1.0 / 90.0;
  std::optional<double> duration;  // default: the reference duration
  std::optional<JointVector> home;
  // replay mode: scripted operator poses blended with the reference
  std::optional<ReferenceTrajectory> human;
  ArbitrationParams arbitration;
};

struct TickRecord {
  int tick = 0;
  double t = 0.0;
  JointVector q;
  Pose ee;
  Pose target;
  double alpha = 1.0;
  std::optional<double> phi_min;  // recomputed from q
  std::vector<double> phi;
  SolveStatus status = SolveStatus::converged;
  bool accepted = true;
  int iterations = 0;
  double step_ms = 0.0;
  std::optional<double> cbf_margin;  // B: dominant-obstacle linearized margin
};

struct RolloutLog {
  SolverKind kind = SolverKind::N;
  std::string scene;
  std::uint64_t seed = 0;
  double dt = 0.0;
  int planned_ticks = 0;
  JointVector q0;
  std::vector<TickRecord> ticks;
  bool panicked = false;  // the solver threw or produced a non-finite state
  std::string panic_message;
};

/// Converges the arm onto `target` from `seed_q` ignoring obstacles; used to
/// place the robot on the reference before the first tick.
JointVector initial_configuration(const RobotModel& model, const JointVector& seed_q,
                                  const Pose& target, const IkParams& params);

/// Minimum signed distance, sampled every dt, between the scene obstacles and
/// the colliders of the last link placed so that the end effector sits
/// exactly on the reference. Measures how far the raw reference intrudes.
double reference_clearance(const RobotModel& model, const Scenario& scenario, double dt);

/// One tick per dt until the duration: obstacles advance to t, the target is
/// read from the reference (or blended with the scripted operator), and
/// solve_step produces q. Clearances are recomputed from q.
RolloutLog run_rollout(const RobotModel& model, const Scenario& scenario,
                       const RolloutOptions& options);

struct MetricsReport {
  int ticks = 0;
  int collisions = 0;                   // contiguous phi_min < 0 episodes
  std::optional<double> min_clearance;  // m; absent without obstacles
  double violation_time_pct = 0.0;
  double pos_err_mean = 0.0;  // m
  double ori_err_mean = 0.0;  // degrees
  std::optional<double> task_jerk;   // m/s^3
  std::optional<double> joint_jerk;  // rad/s^3
  int held_steps = 0;
};

/// Clearances are recomputed from the logged q and the scene, never read
/// from the log's solver fields. Throws on an empty log.
MetricsReport compute_metrics(const RolloutLog& log, const RobotModel& model, const Scene& scene,
                              const ReferenceTrajectory& reference);

/// Metrics from a plain global-clearance sequence; the part of
/// compute_metrics that does not need geometry.
void clearance_metrics(const std::vector<double>& phi_min, MetricsReport& out);

struct RunSummary {
  SolverKind kind = SolverKind::N;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  bool panicked = false;
  std::string panic_message;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

MeanSd mean_sd(const std::vector<double>& values);

struct ComparisonRow {
  SolverKind kind = SolverKind::N;
  MeanSd collisions, min_clearance, violation_time_pct, pos_err_mean, ori_err_mean, task_jerk,
      joint_jerk;
};

struct Comparison {
  std::string scene;
  std::vector<RunSummary> runs;  // kind-major, seed order
  std::vector<ComparisonRow> rows;
};

/// Runs every kind on seeds first_seed .. first_seed + n_seeds - 1.
Comparison batch_compare(const RobotModel& model, const RunConfig& config,
                         const std::vector<SolverKind>& kinds, int n_seeds);

RolloutOptions rollout_options(const RunConfig& config, SolverKind kind);

// CSV writers. Column orders are fixed; see README.md.
void write_rollout_csv(std::ostream& out, const RolloutLog& log, bool include_timing = false);
void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& runs);
void write_comparison_table(std::ostream& out, const Comparison& comparison);

}  // namespace safeik
