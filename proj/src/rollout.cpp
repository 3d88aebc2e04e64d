#include "safeik/rollout.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "safeik/geometry.hpp"
#include "safeik/text_document.hpp"

namespace safeik {

JointVector initial_configuration(const RobotModel& model, const JointVector& seed_q,
                                  const Pose& target, const IkParams& params) {
  const auto pairs = self_collision_pairs(model, params.self_collision);
  NlpProblem nlp;
  nlp.dim = model.dof();
  nlp.lower = model.lower_limits();
  nlp.upper = model.upper_limits();
  // light pull towards the seed keeps the redundant arm in the seed's branch
  const double w_seed = 1e-4;
  nlp.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Kinematics kin = forward_kinematics(model, x);
    const Jacobian jac = geometric_jacobian(model, kin);
    const auto links = link_capsules_world(model, kin);
    const TermValue tr = tracking_objective(model, kin, jac, target, params.weights);
    const TermValue sc = self_collision_objective(model, kin, links, pairs, params.weights.w_selfcol,
                                                  params.self_collision);
    const Eigen::VectorXd d = x - seed_q;
    grad = tr.grad + sc.grad + 2.0 * w_seed * d;
    return tr.value + sc.value + w_seed * d.squaredNorm();
  };
  nlp.inequalities.push_back([&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const ManipulabilityValue m = manipulability_constraint(model, x, params.manipulability);
    grad = m.grad;
    return m.value;
  });
  SolveOptions opt;
  opt.max_iterations = 300;
  opt.objective_tolerance = 1e-12;
  const SolveResult r = minimize(nlp, seed_q, opt);
  if (!r.x_star.allFinite()) throw std::runtime_error("initial configuration solve failed");
  return r.x_star;
}

double reference_clearance(const RobotModel& model, const Scenario& scenario, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<Capsule> local;
  for (const LinkCollider& c : model.colliders) {
    if (c.link_index == model.dof() - 1) local.push_back({c.p0, c.p1, c.radius});
  }
  if (local.empty()) throw std::invalid_argument("the last link has no colliders");
  const Transform ee_inv = model.ee_offset.inverse();
  const double t0 = scenario.reference.samples().front().t;
  const int steps = static_cast<int>(std::llround(scenario.reference.duration() / dt));
  double lo = std::numeric_limits<double>::infinity();
  std::vector<Capsule> placed(local.size());
  for (int k = 0; k <= steps; ++k) {
    const double t = t0 + k * dt;
    const Transform link = scenario.reference.at(t) * ee_inv;
    for (std::size_t i = 0; i < local.size(); ++i) placed[i] = local[i].transformed(link);
    const auto obstacles = obstacle_poses_at(scenario.scene, t);
    if (const auto prox = min_robot_obstacle_distance(placed, obstacles)) {
      lo = std::min(lo, prox->global.phi);
    }
  }
  return lo;
}

namespace {

double alpha_for(const ArbitrationParams& a, const Pose& human, const Pose& reference) {
  if (a.mode == ArbitrationMode::fixed) return a.fixed_alpha;
  return arbitration_weight(human.position, reference.position, a);
}

}  // namespace

RolloutLog run_rollout(const RobotModel& model, const Scenario& scenario,
                       const RolloutOptions& options) {
  if (!(options.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (scenario.reference.empty()) throw std::invalid_argument("empty reference trajectory");
  options.params.validate();
  const double duration = options.duration.value_or(scenario.reference.duration());

  RolloutLog log;
  log.kind = options.kind;
  log.scene = scenario.scene.name;
  log.seed = scenario.scene.seed;
  log.dt = options.dt;
  log.planned_ticks = static_cast<int>(std::llround(duration / options.dt));

  auto target_at = [&](double t, double& alpha) {
    const Pose ref = scenario.reference.at(t);
    if (!options.human) {
      alpha = 1.0;
      return ref;
    }
    const Pose human = options.human->at(t);
    alpha = alpha_for(options.arbitration, human, ref);
    return blend_pose({human, ref}, alpha);
  };

  double alpha = 1.0;
  const JointVector home = options.home.value_or(default_home(model));
  log.q0 = initial_configuration(model, home, target_at(0.0, alpha), options.params);
  SolverState state = SolverState::at_rest(model, log.q0, options.dt);
  log.ticks.reserve(static_cast<std::size_t>(log.planned_ticks));

  for (int k = 0; k < log.planned_ticks; ++k) {
    const double t = (k + 1) * options.dt;
    const std::vector<Capsule> obstacles = obstacle_poses_at(scenario.scene, t);
    TickRecord rec;
    rec.tick = k;
    rec.t = t;
    rec.target = target_at(t, rec.alpha);
    StepResult step;
    try {
      step = solve_step(options.kind, state, rec.target, obstacles, model, options.params);
    } catch (const std::exception& e) {
      log.panicked = true;
      log.panic_message = "tick " + std::to_string(k) + ": " + e.what();
      break;
    }
    if (!step.q_next.allFinite()) {
      log.panicked = true;
      log.panic_message = "tick " + std::to_string(k) + ": non-finite joint state";
      break;
    }
    rec.q = step.q_next;
    const Kinematics kin = forward_kinematics(model, rec.q);
    rec.ee = kin.ee;
    const auto links = link_capsules_world(model, kin);
    if (const auto prox = min_robot_obstacle_distance(links, obstacles)) {
      rec.phi_min = prox->global.phi;
      for (const DistanceWitness& w : prox->per_obstacle) rec.phi.push_back(w.phi);
    }
    const StepDiagnostics& d = step.diagnostics;
    rec.status = d.status;
    rec.accepted = d.accepted;
    rec.iterations = d.iterations;
    rec.step_ms = d.step_ms;
    rec.cbf_margin = d.cbf_margin;
    log.ticks.push_back(std::move(rec));
  }
  return log;
}

void clearance_metrics(const std::vector<double>& phi_min, MetricsReport& out) {
  out.collisions = 0;
  out.min_clearance.reset();
  out.violation_time_pct = 0.0;
  if (phi_min.empty()) return;
  int violated = 0;
  bool inside = false;
  double lo = std::numeric_limits<double>::infinity();
  for (double phi : phi_min) {
    lo = std::min(lo, phi);
    const bool now = phi < 0.0;
    if (now) ++violated;
    if (now && !inside) ++out.collisions;
    inside = now;
  }
  out.min_clearance = lo;
  out.violation_time_pct = 100.0 * violated / static_cast<double>(phi_min.size());
}

MetricsReport compute_metrics(const RolloutLog& log, const RobotModel& model, const Scene& scene,
                              const ReferenceTrajectory& reference) {
  if (log.ticks.empty()) throw std::invalid_argument("empty rollout log");
  MetricsReport m;
  m.ticks = static_cast<int>(log.ticks.size());
  std::vector<double> phi_min;
  std::vector<Vec3> ee;
  ee.reserve(log.ticks.size());
  double pos = 0.0, ori = 0.0;
  for (const TickRecord& r : log.ticks) {
    const Kinematics kin = forward_kinematics(model, r.q);
    ee.push_back(kin.ee.position);
    if (!scene.obstacles.empty()) {
      const auto links = link_capsules_world(model, kin);
      const auto obstacles = obstacle_poses_at(scene, r.t);
      phi_min.push_back(min_robot_obstacle_distance(links, obstacles)->global.phi);
    }
    const Pose ref = reference.at(r.t);
    pos += (kin.ee.position - ref.position).norm();
    ori += angular_distance(kin.ee.orientation, ref.orientation);
    if (!r.accepted) ++m.held_steps;
  }
  clearance_metrics(phi_min, m);
  m.pos_err_mean = pos / m.ticks;
  m.ori_err_mean = ori / m.ticks * 180.0 / std::numbers::pi;
  if (m.ticks >= 4) {
    const double inv = 1.0 / std::pow(log.dt, 3);
    double tj = 0.0, jj = 0.0;
    for (int k = 3; k < m.ticks; ++k) {
      tj += (ee[k] - 3.0 * ee[k - 1] + 3.0 * ee[k - 2] - ee[k - 3]).norm() * inv;
      const auto& q = log.ticks;
      jj += (q[k].q - 3.0 * q[k - 1].q + 3.0 * q[k - 2].q - q[k - 3].q).norm() * inv;
    }
    m.task_jerk = tj / (m.ticks - 3);
    m.joint_jerk = jj / (m.ticks - 3);
  }
  return m;
}

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  double s = 0.0;
  for (double v : values) s += v;
  out.mean = s / out.count;
  if (out.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (out.count - 1));
  }
  return out;
}

RolloutOptions rollout_options(const RunConfig& config, SolverKind kind) {
  RolloutOptions o;
  o.kind = kind;
  o.params = config.params;
  o.dt = config.dt;
  o.duration = config.duration;
  o.home = config.home;
  if (!config.human_waypoints.empty()) o.human = ReferenceTrajectory(config.human_waypoints);
  o.arbitration = config.arbitration;
  return o;
}

Comparison batch_compare(const RobotModel& model, const RunConfig& config,
                         const std::vector<SolverKind>& kinds, int n_seeds) {
  if (n_seeds < 1) throw std::invalid_argument("need at least one seed");
  Comparison cmp;
  for (SolverKind kind : kinds) {
    const RolloutOptions opt = rollout_options(config, kind);
    ComparisonRow row;
    row.kind = kind;
    std::vector<double> col, clr, vio, pe, oe, tj, jj;
    for (int i = 0; i < n_seeds; ++i) {
      const std::uint64_t seed = config.first_seed + static_cast<std::uint64_t>(i);
      const Scenario sc = build_scenario(config, seed);
      if (cmp.scene.empty()) cmp.scene = sc.scene.name;
      const RolloutLog log = run_rollout(model, sc, opt);
      RunSummary run;
      run.kind = kind;
      run.seed = seed;
      run.panicked = log.panicked;
      run.panic_message = log.panic_message;
      if (!log.ticks.empty()) run.metrics = compute_metrics(log, model, sc.scene, sc.reference);
      const MetricsReport& m = run.metrics;
      col.push_back(m.collisions);
      if (m.min_clearance) clr.push_back(*m.min_clearance);
      vio.push_back(m.violation_time_pct);
      pe.push_back(m.pos_err_mean);
      oe.push_back(m.ori_err_mean);
      if (m.task_jerk) tj.push_back(*m.task_jerk);
      if (m.joint_jerk) jj.push_back(*m.joint_jerk);
      cmp.runs.push_back(std::move(run));
    }
    row.collisions = mean_sd(col);
    row.min_clearance = mean_sd(clr);
    row.violation_time_pct = mean_sd(vio);
    row.pos_err_mean = mean_sd(pe);
    row.ori_err_mean = mean_sd(oe);
    row.task_jerk = mean_sd(tj);
    row.joint_jerk = mean_sd(jj);
    cmp.rows.push_back(row);
  }
  return cmp;
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void pose_fields(std::ostream& out, const Pose& p) {
  out << format_double(p.position.x()) << ',' << format_double(p.position.y()) << ','
      << format_double(p.position.z()) << ',' << format_double(p.orientation.w()) << ','
      << format_double(p.orientation.x()) << ',' << format_double(p.orientation.y()) << ','
      << format_double(p.orientation.z());
}

}  // namespace

void write_rollout_csv(std::ostream& out, const RolloutLog& log, bool include_timing) {
  const int n = static_cast<int>(log.q0.size());
  const std::size_t n_obs = log.ticks.empty() ? 0 : log.ticks.front().phi.size();
  out << "tick,t";
  for (int i = 0; i < n; ++i) out << ",q" << i;
  out << ",ee_x,ee_y,ee_z,ee_qw,ee_qx,ee_qy,ee_qz";
  out << ",target_x,target_y,target_z,target_qw,target_qx,target_qy,target_qz";
  out << ",alpha,phi_min";
  for (std::size_t o = 0; o < n_obs; ++o) out << ",phi_" << o;
  out << ",status,accepted,iterations";
  if (include_timing) out << ",step_ms";
  out << '\n';
  for (const TickRecord& r : log.ticks) {
    out << r.tick << ',' << format_double(r.t);
    for (int i = 0; i < n; ++i) out << ',' << format_double(r.q[i]);
    out << ',';
    pose_fields(out, r.ee);
    out << ',';
    pose_fields(out, r.target);
    out << ',' << format_double(r.alpha) << ',' << opt_field(r.phi_min);
    for (double phi : r.phi) out << ',' << format_double(phi);
    out << ',' << to_string(r.status) << ',' << (r.accepted ? 1 : 0) << ',' << r.iterations;
    if (include_timing) out << ',' << format_double(r.step_ms);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& runs) {
  out << "solver,seed,ticks,collisions,min_clearance_m,violation_time_pct,pos_err_mean_m,"
         "ori_err_mean_deg,task_jerk,joint_jerk,held_steps,panic\n";
  for (const RunSummary& r : runs) {
    const MetricsReport& m = r.metrics;
    out << to_string(r.kind) << ',' << r.seed << ',' << m.ticks << ',' << m.collisions << ','
        << opt_field(m.min_clearance) << ',' << format_double(m.violation_time_pct) << ','
        << format_double(m.pos_err_mean) << ',' << format_double(m.ori_err_mean) << ','
        << opt_field(m.task_jerk) << ',' << opt_field(m.joint_jerk) << ',' << m.held_steps << ','
        << (r.panicked ? 1 : 0) << '\n';
  }
}

void write_comparison_table(std::ostream& out, const Comparison& cmp) {
  auto cell = [](const MeanSd& v, int precision) {
    if (v.count == 0) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v.mean << " +- " << v.sd;
    return s.str();
  };
  const int seeds = cmp.rows.empty() ? 0 : cmp.rows.front().violation_time_pct.count;
  out << "scene " << cmp.scene << ", " << seeds << " seed(s), mean +- sd\n";
  out << std::left << std::setw(7) << "solver" << std::setw(18) << "collisions" << std::setw(20)
      << "min_clear [m]" << std::setw(18) << "violation [%]" << std::setw(18) << "pos_err [m]"
      << std::setw(18) << "ori_err [deg]" << std::setw(22) << "task_jerk [m/s^3]"
      << "joint_jerk [rad/s^3]\n";
  for (const ComparisonRow& r : cmp.rows) {
    out << std::left << std::setw(7) << to_string(r.kind) << std::setw(18) << cell(r.collisions, 2)
        << std::setw(20) << cell(r.min_clearance, 4) << std::setw(18)
        << cell(r.violation_time_pct, 2) << std::setw(18) << cell(r.pos_err_mean, 4)
        << std::setw(18) << cell(r.ori_err_mean, 2) << std::setw(22) << cell(r.task_jerk, 3)
        << cell(r.joint_jerk, 3) << '\n';
  }
}

}  // namespace safeik
