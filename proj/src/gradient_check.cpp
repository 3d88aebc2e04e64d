#include "safeik/gradient_check.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/SVD>

#include "safeik/geometry.hpp"
#include "safeik/ik_terms.hpp"

namespace safeik {

double gradient_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                               double floor) {
  const double scale =
      std::max({analytic.lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>(), floor});
  return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 unit_vector(Rng& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

JointVector random_q(const RobotModel& model, Rng& rng) {
  JointVector q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    // stay clear of the limits so q +- step is still meaningful
    const double lo = model.joints[i].lower, hi = model.joints[i].upper;
    const double pad = 0.02 * (hi - lo);
    q[i] = uniform(rng, lo + pad, hi - pad);
  }
  return q;
}

JointVector jitter(Rng& rng, int n, double scale) {
  JointVector d(n);
  for (int i = 0; i < n; ++i) d[i] = uniform(rng, -scale, scale);
  return d;
}

Quat random_quat(Rng& rng) {
  std::normal_distribution<double> n;
  Quat q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

// Obstacles a few centimetres off random links.
std::vector<Capsule> obstacles_near(const RobotModel& model, const JointVector& q, Rng& rng,
                                    int count) {
  const auto links = link_capsules_world(model, q);
  std::vector<Capsule> out;
  for (int k = 0; k < count; ++k) {
    const Capsule& link =
        links[std::uniform_int_distribution<std::size_t>(0, links.size() - 1)(rng)];
    const Vec3 p = link.p0 + uniform(rng, 0.0, 1.0) * (link.p1 - link.p0);
    const double r = uniform(rng, 0.01, 0.04);
    const Vec3 c = p + unit_vector(rng) * (link.radius + r + uniform(rng, 0.005, 0.06));
    const Vec3 half = unit_vector(rng) * uniform(rng, 0.02, 0.1);
    out.push_back({c - half, c + half, r});
  }
  return out;
}

Eigen::VectorXd central_difference(const std::function<double(const JointVector&)>& f,
                                   const JointVector& q, double h) {
  Eigen::VectorXd g(q.size());
  for (int i = 0; i < q.size(); ++i) {
    JointVector qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    g[i] = (f(qp) - f(qm)) / (2.0 * h);
  }
  return g;
}

// Closest points are unique and the gradient formula applies unless the
// center segments touch or are nearly parallel.
bool smooth_witness(const Capsule& a, const Capsule& b, const DistanceWitness& w) {
  if (w.degenerate) return false;
  if ((w.segment_a - w.segment_b).norm() < 1e-6) return false;
  const Vec3 da = a.p1 - a.p0, db = b.p1 - b.p0;
  const double la = da.norm(), lb = db.norm();
  if (la > 0.0 && lb > 0.0 && da.cross(db).norm() < 1e-3 * la * lb) return false;
  return true;
}

struct Instance {
  bool smooth = true;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
};

using Generator = std::function<Instance(Rng&)>;

GradientCheckResult run_term(const std::string& name, const Generator& gen,
                             const GradientCheckOptions& opt, Rng& rng) {
  GradientCheckResult r;
  r.term = name;
  for (int draw = 0; draw < opt.max_draws && r.checked < opt.instances; ++draw) {
    const Instance inst = gen(rng);
    if (!inst.smooth) {
      ++r.excluded;
      continue;
    }
    const double e = gradient_relative_error(inst.analytic, inst.numeric);
    r.max_rel_error = std::max(r.max_rel_error, e);
    ++r.checked;
  }
  r.passed = r.checked == opt.instances && r.max_rel_error < opt.tolerance;
  return r;
}

}  // namespace

std::vector<GradientCheckResult> check_gradients(const RobotModel& model,
                                                 const GradientCheckOptions& opt) {
  Rng rng(opt.seed);
  const double h = opt.step;
  std::vector<GradientCheckResult> out;

  // Geometric Jacobian against differenced position and orientation, one
  // instance per random configuration, all six rows stacked.
  out.push_back(run_term(
      "fk_jacobian",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const Jacobian jac = geometric_jacobian(model, q);
        Instance inst;
        inst.analytic = Eigen::Map<const Eigen::VectorXd>(jac.data(), jac.size());
        Jacobian fd(6, model.dof());
        for (int i = 0; i < model.dof(); ++i) {
          JointVector qp = q, qm = q;
          qp[i] += h;
          qm[i] -= h;
          const Pose a = forward_kinematics(model, qp).ee, b = forward_kinematics(model, qm).ee;
          fd.col(i).head<3>() = (a.position - b.position) / (2.0 * h);
          fd.col(i).tail<3>() = orientation_error(a.orientation, b.orientation) / (2.0 * h);
        }
        inst.numeric = Eigen::Map<const Eigen::VectorXd>(fd.data(), fd.size());
        return inst;
      },
      opt, rng));

  // Gradient of the per-obstacle minimum distance; excluded when the closest
  // collider changes inside the difference stencil.
  out.push_back(run_term(
      "distance",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const std::vector<Capsule> obs = obstacles_near(model, q, g, 1);
        Instance inst;
        const auto closest = [&](const JointVector& x) {
          return min_robot_obstacle_distance(link_capsules_world(model, x), obs)->global;
        };
        const DistanceWitness w = closest(q);
        const auto links = link_capsules_world(model, q);
        inst.smooth = smooth_witness(links[w.collider], obs[0], w);
        for (int i = 0; i < q.size() && inst.smooth; ++i) {
          for (double s : {-h, h}) {
            JointVector x = q;
            x[i] += s;
            if (closest(x).collider != w.collider) inst.smooth = false;
          }
        }
        inst.analytic = distance_gradient(model, q, w).grad;
        inst.numeric = central_difference([&](const JointVector& x) { return closest(x).phi; }, q, h);
        return inst;
      },
      opt, rng));

  out.push_back(run_term(
      "tracking",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const Pose target{forward_kinematics(model, random_q(model, g)).ee.position, random_quat(g)};
        const ObjectiveWeights w;
        Instance inst;
        const Pose ee = forward_kinematics(model, q).ee;
        // the rotation log is not differentiable at a half turn
        inst.smooth = angular_distance(target.orientation, ee.orientation) < std::numbers::pi - 1e-2;
        inst.analytic = tracking_objective(model, q, target, w).grad;
        inst.numeric = central_difference(
            [&](const JointVector& x) { return tracking_objective(model, x, target, w).value; }, q, h);
        return inst;
      },
      opt, rng));

  out.push_back(run_term(
      "smoothness",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        SolverState state = SolverState::at_rest(model, q, 1.0 / 90.0);
        for (auto& past : state.history) past = q + jitter(g, q.size(), 0.05);
        state.q = state.history[0];
        state.ee = forward_kinematics(model, state.q).ee;
        ObjectiveWeights w;
        w.w_vel = 1e-2;
        w.w_acc = 1e-5;
        w.w_jerk = 1e-9;
        w.w_cart_vel = 1e-2;
        const JointVector cand = q + jitter(g, q.size(), 0.05);
        Instance inst;
        inst.analytic = smoothness_objective(model, state, cand, w).grad;
        inst.numeric = central_difference(
            [&](const JointVector& x) { return smoothness_objective(model, state, x, w).value; },
            cand, h);
        return inst;
      },
      opt, rng));

  out.push_back(run_term(
      "self_collision",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const SelfCollisionParams p;
        Instance inst;
        const auto links = link_capsules_world(model, q);
        for (const auto& [i, j] : self_collision_pairs(model, p)) {
          if (!smooth_witness(links[i], links[j], capsule_signed_distance(links[i], links[j]))) {
            inst.smooth = false;
          }
        }
        inst.analytic = self_collision_objective(model, q, 1.0, p).grad;
        inst.numeric = central_difference(
            [&](const JointVector& x) { return self_collision_objective(model, x, 1.0, p).value; },
            q, h);
        return inst;
      },
      opt, rng));

  out.push_back(run_term(
      "penalty",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const std::vector<Capsule> obs = obstacles_near(model, q, g, 3);
        const PenaltyParams p;
        Instance inst;
        const auto links = link_capsules_world(model, q);
        for (const DistanceWitness& w : pairwise_distances(links, obs)) {
          if (!smooth_witness(links[w.collider], obs[w.obstacle], w)) inst.smooth = false;
        }
        inst.analytic = penalty_objective(model, q, obs, p, 1.0).grad;
        inst.numeric = central_difference(
            [&](const JointVector& x) { return penalty_objective(model, x, obs, p, 1.0).value; },
            q, h);
        return inst;
      },
      opt, rng));

  // Aggregated barrier against the candidate with the linearization frozen at
  // q_prev, which is how the solver sees it.
  out.push_back(run_term(
      "cbf",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const std::vector<Capsule> obs = obstacles_near(model, q, g, 3);
        const CbfParams p;
        const SolverState state = SolverState::at_rest(model, q, 1.0 / 90.0);
        const CbfLinearization lin = linearize_barriers(model, state, obs, p);
        Instance inst;
        for (bool d : lin.degenerate) inst.smooth = inst.smooth && !d;
        const JointVector cand = q + jitter(g, q.size(), 0.02);
        inst.analytic = cbf_constraint(lin, cand, p).grad;
        inst.numeric = central_difference(
            [&](const JointVector& x) { return cbf_constraint(lin, x, p).value; }, cand, h);
        return inst;
      },
      opt, rng));

  out.push_back(run_term(
      "manipulability",
      [&](Rng& g) {
        const JointVector q = random_q(model, g);
        const ManipulabilityParams p;
        const ManipulabilityValue v = manipulability_constraint(model, q, p);
        Instance inst;
        // singular values must stay simple for the analytic derivative
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(geometric_jacobian(model, q));
        const auto& s = svd.singularValues();
        const int k = static_cast<int>(s.size()) - 1;
        inst.smooth = !v.finite_difference && s[0] - s[1] > 1e-6 * s[0] &&
                      s[k - 1] - s[k] > 1e-6 * s[0];
        inst.analytic = v.grad;
        inst.numeric = central_difference(
            [&](const JointVector& x) { return manipulability_constraint(model, x, p).value; }, q, h);
        return inst;
      },
      opt, rng));

  return out;
}

}  // namespace safeik
