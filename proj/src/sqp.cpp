#include "safeik/sqp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "safeik/qp.hpp"

namespace safeik {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 30;

struct Evaluation {
  double f = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd c;
  Eigen::MatrixXd jac;  // m x n
  bool finite = true;
};

Evaluation evaluate(const NlpProblem& p, const Eigen::VectorXd& x) {
  const int n = p.dim;
  const int m = static_cast<int>(p.inequalities.size());
  Evaluation e;
  e.grad = Eigen::VectorXd::Zero(n);
  e.f = p.objective(x, e.grad);
  e.c.resize(m);
  e.jac.resize(m, n);
  Eigen::VectorXd g(n);
  for (int k = 0; k < m; ++k) {
    g.setZero();
    e.c[k] = p.inequalities[k](x, g);
    e.jac.row(k) = g.transpose();
  }
  e.finite = std::isfinite(e.f) && e.grad.allFinite() && e.c.allFinite() && e.jac.allFinite();
  return e;
}

double violation(const Eigen::VectorXd& c) {
  return c.size() ? std::max(c.maxCoeff(), 0.0) : 0.0;
}

double positive_sum(const Eigen::VectorXd& c) { return c.cwiseMax(0.0).sum(); }

double kkt_residual(const Evaluation& e, const Eigen::VectorXd& mu, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd r = e.grad;
  if (mu.size()) r += e.jac.transpose() * mu;
  for (int i = 0; i < r.size(); ++i) {
    const bool at_lower = lo.size() && x[i] <= lo[i] + 1e-12 * (1.0 + std::abs(lo[i]));
    const bool at_upper = hi.size() && x[i] >= hi[i] - 1e-12 * (1.0 + std::abs(hi[i]));
    if ((at_lower && r[i] > 0.0) || (at_upper && r[i] < 0.0)) r[i] = 0.0;
  }
  double res = r.lpNorm<Eigen::Infinity>();
  for (int k = 0; k < mu.size(); ++k) res = std::max(res, std::abs(mu[k] * e.c[k]));
  return res;
}

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi) {
  Eigen::VectorXd y = x;
  if (lo.size()) y = y.cwiseMax(lo);
  if (hi.size()) y = y.cwiseMin(hi);
  return y;
}

}  // namespace

void NlpProblem::validate() const {
  if (dim < 1) throw std::invalid_argument("problem dimension must be at least 1");
  if (!objective) throw std::invalid_argument("objective callable missing");
  if (lower.size() && lower.size() != dim) throw std::invalid_argument("lower bound size mismatch");
  if (upper.size() && upper.size() != dim) throw std::invalid_argument("upper bound size mismatch");
  if (lower.size() && upper.size() && (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("lower bound exceeds upper bound");
  }
  if (initial_hessian &&
      (initial_hessian->rows() != dim || initial_hessian->cols() != dim)) {
    throw std::invalid_argument("initial Hessian size mismatch");
  }
}

void SolveOptions::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  if (!(constraint_tolerance > 0.0 && objective_tolerance > 0.0 && step_tolerance > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (time_budget && !(*time_budget > 0.0)) throw std::invalid_argument("time budget must be positive");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::time_budget: return "time_budget";
    case SolveStatus::infeasible_qp: return "infeasible_qp";
    case SolveStatus::stalled: return "stalled";
    case SolveStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

SolveResult minimize(const NlpProblem& p, const Eigen::VectorXd& x0, const SolveOptions& opts) {
  p.validate();
  opts.validate();
  if (x0.size() != p.dim) throw std::invalid_argument("x0 size mismatch");
  const auto started = std::chrono::steady_clock::now();
  const int n = p.dim;
  const int m = static_cast<int>(p.inequalities.size());
  const Eigen::VectorXd& lo = p.lower;
  const Eigen::VectorXd& hi = p.upper;

  SolveResult res;
  Eigen::VectorXd x = clamp_to(x0, lo, hi);
  res.x0_clamped = x != x0;
  res.multipliers = Eigen::VectorXd::Zero(m);

  Evaluation cur = evaluate(p, x);
  auto finish = [&](SolveStatus status) {
    res.x_star = x;
    res.f_star = cur.f;
    res.status = status;
    res.max_constraint_violation = violation(cur.c);
    return res;
  };
  if (!cur.finite) {
    res.diagnostic = "non-finite value at the initial point";
    return finish(SolveStatus::non_finite);
  }

  const Eigen::MatrixXd B0 =
      p.initial_hessian ? *p.initial_hessian : Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd B = B0;
  double rho = 0.0;
  bool reset_after_failed_search = false;

  QpProblem qp;
  qp.lower.resize(lo.size());
  qp.upper.resize(hi.size());

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (opts.time_budget) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      if (elapsed.count() > *opts.time_budget) return finish(SolveStatus::time_budget);
    }
    if (Eigen::LLT<Eigen::MatrixXd>(B).info() != Eigen::Success) {
      ++res.hessian_resets;
      B = B0;
    }
    res.iterations = iter + 1;

    qp.H = B;
    qp.g = cur.grad;
    qp.A = cur.jac;
    qp.b = cur.c;
    if (lo.size()) qp.lower = lo - x;
    if (hi.size()) qp.upper = hi - x;
    QpResult sub = solve_qp(qp);

    Eigen::VectorXd d;
    Eigen::VectorXd mu;
    if (sub.status == QpStatus::optimal) {
      d = sub.d;
      mu = sub.multipliers;
    } else {
      // Elastic relaxation: A d + b <= sigma, sigma >= 0, priced heavily.
      ++res.relaxed_steps;
      const double penalty = 1e4 * std::max({1.0, cur.grad.lpNorm<Eigen::Infinity>(), rho});
      QpProblem el;
      el.H = Eigen::MatrixXd::Zero(n + 1, n + 1);
      el.H.topLeftCorner(n, n) = B;
      el.H(n, n) = 1.0;
      el.g.resize(n + 1);
      el.g << cur.grad, penalty;
      el.A.resize(m, n + 1);
      el.A << cur.jac, -Eigen::VectorXd::Ones(m);
      el.b = cur.c;
      el.lower.resize(n + 1);
      el.upper.resize(n + 1);
      el.lower << (lo.size() ? Eigen::VectorXd(lo - x) : Eigen::VectorXd::Constant(n, -kInf)), 0.0;
      el.upper << (hi.size() ? Eigen::VectorXd(hi - x) : Eigen::VectorXd::Constant(n, kInf)), kInf;
      const QpResult relaxed = solve_qp(el);
      if (relaxed.status != QpStatus::optimal) {
        res.diagnostic = "QP subproblem infeasible after elastic relaxation";
        return finish(SolveStatus::infeasible_qp);
      }
      d = relaxed.d.head(n);
      mu = relaxed.multipliers;
    }
    res.multipliers = mu;

    res.kkt_residual = kkt_residual(cur, mu, x, lo, hi);
    const double viol = violation(cur.c);
    if (res.kkt_residual < opts.objective_tolerance && viol <= opts.constraint_tolerance) {
      return finish(SolveStatus::converged);
    }
    if (d.lpNorm<Eigen::Infinity>() <= opts.step_tolerance) {
      res.diagnostic = "step below tolerance";
      return finish(SolveStatus::stalled);
    }

    if (m > 0) rho = std::max(rho, 2.0 * mu.lpNorm<Eigen::Infinity>() + 1e-10);
    const double merit0 = cur.f + rho * positive_sum(cur.c);
    const Eigen::VectorXd lin = m > 0 ? Eigen::VectorXd(cur.c + cur.jac * d) : Eigen::VectorXd();
    const double slope =
        cur.grad.dot(d) + (m > 0 ? rho * (positive_sum(lin) - positive_sum(cur.c)) : 0.0);

    double step = 1.0;
    bool accepted = false;
    Evaluation trial;
    Eigen::VectorXd x_trial;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_trial = clamp_to(x + step * d, lo, hi);
      trial = evaluate(p, x_trial);
      if (trial.finite) {
        const double merit = trial.f + rho * positive_sum(trial.c);
        if (merit <= merit0 + kArmijo * step * std::min(slope, 0.0)) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!reset_after_failed_search) {
        reset_after_failed_search = true;
        B = B0;
        continue;
      }
      res.diagnostic = "line search failed";
      return finish(SolveStatus::stalled);
    }
    reset_after_failed_search = false;

    // Damped BFGS on the Lagrangian gradient with the newest multipliers.
    const Eigen::VectorXd s = x_trial - x;
    Eigen::VectorXd y = trial.grad - cur.grad;
    if (m > 0) y += (trial.jac - cur.jac).transpose() * mu;
    const Eigen::VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    if (sBs > 1e-300) {
      double sy = s.dot(y);
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
      }
      B += (y * y.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
      B = 0.5 * (B + B.transpose());
    }

    x = x_trial;
    cur = std::move(trial);
  }
  res.kkt_residual = kkt_residual(cur, res.multipliers, x, lo, hi);
  if (res.kkt_residual < opts.objective_tolerance && violation(cur.c) <= opts.constraint_tolerance) {
    return finish(SolveStatus::converged);
  }
  return finish(SolveStatus::max_iter);
}

}  // namespace safeik
