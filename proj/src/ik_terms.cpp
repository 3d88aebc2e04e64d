#include "safeik/ik_terms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

#include "safeik/geometry.hpp"

namespace safeik {

void ObjectiveWeights::validate() const {
  for (double w : {w_track_pos, w_track_ori, w_vel, w_acc, w_jerk, w_cart_vel, w_selfcol, w_col}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and nonnegative");
  }
}

void CbfParams::validate() const {
  if (!(epsilon > 0.0 && gamma > 0.0 && beta > 0.0 && temperature > 0.0)) {
    throw std::invalid_argument("barrier parameters must be strictly positive");
  }
}

void PenaltyParams::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("penalty epsilon must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("penalty delta must be positive");
}

void ManipulabilityParams::validate() const {
  if (!(sigma_min_threshold > 0.0)) throw std::invalid_argument("sigma_min threshold must be positive");
  if (!(condition_number_cap > 1.0)) throw std::invalid_argument("condition number cap must exceed 1");
  if (!(softmax_temperature > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
}

SolverState SolverState::at_rest(const RobotModel& model, const JointVector& q, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (q.size() != model.dof()) throw std::invalid_argument("joint vector size mismatch");
  SolverState s;
  s.q = q;
  s.history = {q, q, q};
  s.ee = forward_kinematics(model, q).ee;
  s.dt = dt;
  return s;
}

void SolverState::advance(const RobotModel& model, const JointVector& q_next) {
  history[2] = history[1];
  history[1] = history[0];
  history[0] = q_next;
  q = q_next;
  ee = forward_kinematics(model, q_next).ee;
}

TermValue tracking_objective(const RobotModel& model, const Kinematics& kin, const Jacobian& jac,
                             const Pose& target, const ObjectiveWeights& w) {
  const Vec3 dx = kin.ee.position - target.position;
  const Vec3 e = orientation_error(target.orientation, kin.ee.orientation);
  TermValue t;
  t.value = w.w_track_pos * dx.squaredNorm() + w.w_track_ori * e.squaredNorm();
  // d|e|^2 = -2 e^T J_w dq exactly, because the axis of e is fixed under the
  // perturbation of the current orientation.
  t.grad = 2.0 * w.w_track_pos * (jac.topRows<3>().transpose() * dx) -
           2.0 * w.w_track_ori * (jac.bottomRows<3>().transpose() * e);
  (void)model;
  return t;
}

TermValue tracking_objective(const RobotModel& model, const JointVector& q, const Pose& target,
                             const ObjectiveWeights& w) {
  const Kinematics kin = forward_kinematics(model, q);
  return tracking_objective(model, kin, geometric_jacobian(model, kin), target, w);
}

TermValue smoothness_objective(const SolverState& state, const JointVector& q_candidate,
                               const Kinematics& kin, const Jacobian& jac,
                               const ObjectiveWeights& w) {
  const double dt = state.dt;
  const JointVector& h0 = state.history[0];
  const JointVector& h1 = state.history[1];
  const JointVector& h2 = state.history[2];
  const JointVector v = (q_candidate - h0) / dt;
  const JointVector a = (q_candidate - 2.0 * h0 + h1) / (dt * dt);
  const JointVector j = (q_candidate - 3.0 * h0 + 3.0 * h1 - h2) / (dt * dt * dt);
  const Vec3 xv = (kin.ee.position - state.ee.position) / dt;

  TermValue t;
  t.value = w.w_vel * v.squaredNorm() + w.w_acc * a.squaredNorm() + w.w_jerk * j.squaredNorm() +
            w.w_cart_vel * xv.squaredNorm();
  t.grad = (2.0 * w.w_vel / dt) * v + (2.0 * w.w_acc / (dt * dt)) * a +
           (2.0 * w.w_jerk / (dt * dt * dt)) * j +
           (2.0 * w.w_cart_vel / dt) * (jac.topRows<3>().transpose() * xv);
  return t;
}

TermValue smoothness_objective(const RobotModel& model, const SolverState& state,
                               const JointVector& q_candidate, const ObjectiveWeights& w) {
  const Kinematics kin = forward_kinematics(model, q_candidate);
  return smoothness_objective(state, q_candidate, kin, geometric_jacobian(model, kin), w);
}

std::vector<std::pair<int, int>> self_collision_pairs(const RobotModel& model,
                                                      const SelfCollisionParams& params) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(model.colliders.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(model.colliders[i].link_index - model.colliders[j].link_index) >=
          params.min_link_separation) {
        pairs.emplace_back(i, j);
      }
    }
  }
  return pairs;
}

TermValue self_collision_objective(const RobotModel& model, const Kinematics& kin,
                                   std::span<const Capsule> links,
                                   std::span<const std::pair<int, int>> pairs, double w_selfcol,
                                   const SelfCollisionParams& params) {
  TermValue t;
  t.grad = Eigen::VectorXd::Zero(model.dof());
  if (w_selfcol == 0.0) return t;
  for (const auto& [i, j] : pairs) {
    const DistanceWitness w = capsule_signed_distance(links[i], links[j]);
    const double denom = w.phi * w.phi + params.delta;
    t.value += w_selfcol / denom;
    if (w.degenerate) continue;
    const Eigen::VectorXd dphi =
        (point_jacobian(model, kin, model.colliders[i].link_index, w.segment_a) -
         point_jacobian(model, kin, model.colliders[j].link_index, w.segment_b))
            .transpose() *
        w.normal;
    t.grad -= (2.0 * w_selfcol * w.phi / (denom * denom)) * dphi;
  }
  return t;
}

TermValue self_collision_objective(const RobotModel& model, const JointVector& q,
                                   double w_selfcol, const SelfCollisionParams& params) {
  const Kinematics kin = forward_kinematics(model, q);
  const auto links = link_capsules_world(model, kin);
  const auto pairs = self_collision_pairs(model, params);
  return self_collision_objective(model, kin, links, pairs, w_selfcol, params);
}

namespace {

struct SoftmaxPair {
  double value;
  double weight_first;  // d value / d first
};

SoftmaxPair soft_max2(double a, double b, double tau) {
  const double m = std::max(a, b);
  const double ea = std::exp((a - m) / tau), eb = std::exp((b - m) / tau);
  return {m + tau * std::log(ea + eb), ea / (ea + eb)};
}

constexpr double kSingularFloor = 1e-12;

double manipulability_value(const Jacobian& jac, const ManipulabilityParams& p, double* smin,
                            double* smax) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& s = svd.singularValues();
  const double lo = s[s.size() - 1], hi = s[0];
  if (smin) *smin = lo;
  if (smax) *smax = hi;
  const double t1 = p.sigma_min_threshold - lo;
  const double t2 = hi / std::max(lo, kSingularFloor) - p.condition_number_cap;
  return soft_max2(t1, t2, p.softmax_temperature).value;
}

}  // namespace

ManipulabilityValue manipulability_constraint(const RobotModel& model, const JointVector& q,
                                              const ManipulabilityParams& params) {
  const Kinematics kin = forward_kinematics(model, q);
  const Jacobian jac = geometric_jacobian(model, kin);
  const int n = model.dof();
  ManipulabilityValue out;
  out.grad = Eigen::VectorXd::Zero(n);

  // Full U and V so the smallest singular value is available for 6 x n with n < 6.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const int k = static_cast<int>(s.size()) - 1;
  const double lo = s[k], hi = s[0];
  out.sigma_min = lo;
  out.sigma_max = hi;
  const double t1 = params.sigma_min_threshold - lo;
  const double t2 = hi / std::max(lo, kSingularFloor) - params.condition_number_cap;
  const SoftmaxPair sm = soft_max2(t1, t2, params.softmax_temperature);
  out.value = sm.value;

  if (lo < kSingularFloor) {
    out.finite_difference = true;
    const double h = 1e-6;
    for (int j = 0; j < n; ++j) {
      JointVector qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const double fp = manipulability_value(geometric_jacobian(model, qp), params, nullptr, nullptr);
      const double fm = manipulability_value(geometric_jacobian(model, qm), params, nullptr, nullptr);
      out.grad[j] = (fp - fm) / (2.0 * h);
    }
    return out;
  }

  const auto u_lo = svd.matrixU().col(k), u_hi = svd.matrixU().col(0);
  const auto v_lo = svd.matrixV().col(k), v_hi = svd.matrixV().col(0);
  for (int j = 0; j < n; ++j) {
    const Jacobian dj = jacobian_derivative(model, kin, j);
    const double dlo = u_lo.dot(dj * v_lo);
    const double dhi = u_hi.dot(dj * v_hi);
    const double dt1 = -dlo;
    const double dt2 = dhi / lo - hi * dlo / (lo * lo);
    out.grad[j] = sm.weight_first * dt1 + (1.0 - sm.weight_first) * dt2;
  }
  return out;
}

double class_k(double h, const CbfParams& params) {
  return params.gamma * h + params.beta * h * h * h;
}

CbfLinearization linearize_barriers(const RobotModel& model, const SolverState& state,
                                    std::span<const Capsule> obstacles, const CbfParams& params) {
  CbfLinearization lin;
  lin.q_prev = state.q;
  if (obstacles.empty()) return lin;
  const Kinematics kin = forward_kinematics(model, state.q);
  const auto links = link_capsules_world(model, kin);
  if (links.empty()) return lin;
  // One barrier per collider-obstacle pair: h_o is the minimum over the
  // colliders, and each pair condition implies the condition on that minimum.
  const std::vector<DistanceWitness> pairs = pairwise_distances(links, obstacles);
  const std::size_t count = pairs.size();
  lin.h.resize(count);
  lin.grad_h.resize(count);
  lin.collider.resize(count);
  lin.obstacle.resize(count);
  lin.degenerate.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const DistanceWitness& w = pairs[i];
    std::optional<Vec3> fallback;
    if (i < state.last_normals.size()) fallback = state.last_normals[i];
    const DistanceGradient g = distance_gradient(model, kin, w, fallback);
    lin.h[i] = w.phi - params.epsilon;
    lin.grad_h[i] = g.grad;
    lin.collider[i] = w.collider;
    lin.obstacle[i] = w.obstacle;
    lin.degenerate[i] = g.degenerate;
  }
  return lin;
}

double log_sum_exp(std::span<const double> terms, double temperature) {
  if (terms.empty()) throw std::invalid_argument("log_sum_exp of an empty set");
  const double m = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double x : terms) sum += std::exp(temperature * (x - m));
  return m + std::log(sum) / temperature;
}

CbfValue cbf_constraint(const CbfLinearization& lin, const JointVector& q_candidate,
                        const CbfParams& params) {
  if (lin.h.empty()) throw std::invalid_argument("barrier constraint without obstacles");
  const JointVector dq = q_candidate - lin.q_prev;
  const std::size_t m = lin.h.size();
  CbfValue out;
  out.terms.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.terms[i] = -lin.grad_h[i].dot(dq) - class_k(lin.h[i], params);
  }
  const auto top = std::max_element(out.terms.begin(), out.terms.end());
  out.dominant = static_cast<int>(top - out.terms.begin());
  out.value = log_sum_exp(out.terms, params.temperature);

  const double mx = *top;
  double sum = 0.0;
  std::vector<double> wts(m);
  for (std::size_t o = 0; o < m; ++o) {
    wts[o] = std::exp(params.temperature * (out.terms[o] - mx));
    sum += wts[o];
  }
  out.grad = Eigen::VectorXd::Zero(dq.size());
  for (std::size_t o = 0; o < m; ++o) out.grad -= (wts[o] / sum) * lin.grad_h[o];
  return out;
}

TermValue penalty_objective(const RobotModel& model, const Kinematics& kin,
                            std::span<const Capsule> links, std::span<const Capsule> obstacles,
                            const PenaltyParams& params, double w_col) {
  TermValue t;
  t.grad = Eigen::VectorXd::Zero(model.dof());
  if (obstacles.empty() || links.empty()) return t;
  const double w_safe = params.w_safe();
  for (const DistanceWitness& w : pairwise_distances(links, obstacles)) {
    const double denom = w.phi * w.phi + params.delta;
    t.value += w_col * w_safe / denom;
    if (w.degenerate) continue;
    const DistanceGradient g = distance_gradient(model, kin, w);
    t.grad -= (2.0 * w_col * w_safe * w.phi / (denom * denom)) * g.grad;
  }
  return t;
}

TermValue penalty_objective(const RobotModel& model, const JointVector& q,
                            std::span<const Capsule> obstacles, const PenaltyParams& params,
                            double w_col) {
  const Kinematics kin = forward_kinematics(model, q);
  const auto links = link_capsules_world(model, kin);
  return penalty_objective(model, kin, links, obstacles, params, w_col);
}

}  // namespace safeik
