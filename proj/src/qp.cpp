#include "safeik/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace safeik {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowKind { general, lower, upper };

struct Row {
  RowKind kind;
  int index;
};

// Constraints in the form C.col(i)^T d + c0(i) >= 0.
struct ConstraintSet {
  Eigen::MatrixXd C;
  Eigen::VectorXd c0;
  std::vector<Row> rows;
};

ConstraintSet build_constraints(const QpProblem& p) {
  const int n = static_cast<int>(p.g.size());
  const int m = static_cast<int>(p.A.rows());
  std::vector<Row> rows;
  for (int k = 0; k < m; ++k) rows.push_back({RowKind::general, k});
  for (int i = 0; i < p.lower.size(); ++i) {
    if (std::isfinite(p.lower[i])) rows.push_back({RowKind::lower, i});
  }
  for (int i = 0; i < p.upper.size(); ++i) {
    if (std::isfinite(p.upper[i])) rows.push_back({RowKind::upper, i});
  }
  ConstraintSet cs;
  cs.C = Eigen::MatrixXd::Zero(n, static_cast<int>(rows.size()));
  cs.c0.resize(static_cast<int>(rows.size()));
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    const Row row = rows[r];
    switch (row.kind) {
      case RowKind::general:
        cs.C.col(r) = -p.A.row(row.index).transpose();
        cs.c0[r] = -p.b[row.index];
        break;
      case RowKind::lower:
        cs.C(row.index, r) = 1.0;
        cs.c0[r] = -p.lower[row.index];
        break;
      case RowKind::upper:
        cs.C(row.index, r) = -1.0;
        cs.c0[r] = p.upper[row.index];
        break;
    }
  }
  cs.rows = std::move(rows);
  return cs;
}

}  // namespace

QpResult solve_qp(const QpProblem& p) {
  const int n = static_cast<int>(p.g.size());
  const int m = static_cast<int>(p.A.rows());
  QpResult res;
  res.multipliers = Eigen::VectorXd::Zero(m);
  res.bound_multipliers = Eigen::VectorXd::Zero(n);

  const Eigen::LLT<Eigen::MatrixXd> llt(p.H);
  if (llt.info() != Eigen::Success) {
    res.d = Eigen::VectorXd::Zero(n);
    res.status = QpStatus::not_convex;
    return res;
  }
  const ConstraintSet cs = build_constraints(p);
  const int mc = static_cast<int>(cs.c0.size());
  Eigen::VectorXd col_norm(mc);
  for (int i = 0; i < mc; ++i) col_norm[i] = std::max(cs.C.col(i).norm(), 1e-300);

  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd Linv =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));

  Eigen::VectorXd d = llt.solve(-p.g);
  std::vector<int> active;
  std::vector<char> is_active(mc, 0);
  Eigen::VectorXd u;  // duals of active constraints
  Eigen::MatrixXd J = Linv.transpose();
  Eigen::MatrixXd R;

  auto rebuild = [&]() {
    const int q = static_cast<int>(active.size());
    if (q == 0) {
      J = Linv.transpose();
      R.resize(0, 0);
      return;
    }
    Eigen::MatrixXd N(n, q);
    for (int k = 0; k < q; ++k) N.col(k) = cs.C.col(active[k]);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Linv * N);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    R = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
    J = Linv.transpose() * Q;
  };

  auto drop = [&](int l) {
    is_active[active[l]] = 0;
    active.erase(active.begin() + l);
    Eigen::VectorXd nu(u.size() - 1);
    for (int k = 0, j = 0; k < u.size(); ++k) {
      if (k != l) nu[j++] = u[k];
    }
    u = nu;
    rebuild();
  };

  const int max_iterations = 10 * (n + mc) + 50;
  int iterations = 0;
  for (;;) {
    if (++iterations > max_iterations) {
      res.status = QpStatus::iteration_limit;
      break;
    }
    // most violated inactive constraint, measured in distance units
    int p_idx = -1;
    double worst = 0.0;
    for (int i = 0; i < mc; ++i) {
      if (is_active[i]) continue;
      const double s = cs.C.col(i).dot(d) + cs.c0[i];
      const double tol = 1e-12 * (1.0 + std::abs(cs.c0[i]));
      if (s < -tol && s / col_norm[i] < worst) {
        worst = s / col_norm[i];
        p_idx = i;
      }
    }
    if (p_idx < 0) {
      res.status = QpStatus::optimal;
      break;
    }

    const Eigen::VectorXd np = cs.C.col(p_idx);
    double u_plus = 0.0;
    bool infeasible = false;
    for (;;) {
      if (++iterations > max_iterations) break;
      const int q = static_cast<int>(active.size());
      const Eigen::VectorXd dv = J.transpose() * np;
      const Eigen::VectorXd z = J.rightCols(n - q) * dv.tail(n - q);
      Eigen::VectorXd r;
      if (q > 0) r = R.triangularView<Eigen::Upper>().solve(dv.head(q));

      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < q; ++k) {
        if (r[k] > 0.0 && u[k] / r[k] < t1) {
          t1 = u[k] / r[k];
          l = k;
        }
      }
      const double sp = np.dot(d) + cs.c0[p_idx];
      const bool independent = dv.tail(n - q).squaredNorm() > 1e-14 * dv.squaredNorm();
      if (sp >= 0.0) {
        // satisfied through rounding after partial steps; keep its dual
        if (u_plus > 0.0 && independent) {
          active.push_back(p_idx);
          is_active[p_idx] = 1;
          u.conservativeResize(u.size() + 1);
          u[u.size() - 1] = u_plus;
          rebuild();
        }
        break;
      }
      double t2 = kInf;
      if (independent) t2 = -sp / z.dot(np);

      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        infeasible = true;
        break;
      }
      if (!std::isfinite(t2)) {
        // dual-only step: shift weight away from a blocking active constraint
        if (q > 0) u -= t * r;
        u_plus += t;
        drop(l);
        continue;
      }
      d += t * z;
      if (q > 0) u -= t * r;
      u_plus += t;
      if (t2 <= t1) {
        active.push_back(p_idx);
        is_active[p_idx] = 1;
        u.conservativeResize(u.size() + 1);
        u[u.size() - 1] = u_plus;
        rebuild();
        break;
      }
      drop(l);
    }
    if (infeasible) {
      res.status = QpStatus::infeasible;
      break;
    }
  }

  res.d = d;
  res.iterations = iterations;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Row row = cs.rows[active[k]];
    const double val = std::max(u[static_cast<int>(k)], 0.0);
    switch (row.kind) {
      case RowKind::general: res.multipliers[row.index] = val; break;
      case RowKind::lower: res.bound_multipliers[row.index] -= val; break;
      case RowKind::upper: res.bound_multipliers[row.index] += val; break;
    }
  }
  return res;
}

double qp_kkt_residual(const QpProblem& p, const QpResult& r) {
  const int n = static_cast<int>(p.g.size());
  Eigen::VectorXd stat = p.H * r.d + p.g + r.bound_multipliers;
  double worst = 0.0;
  if (p.A.rows() > 0) {
    stat += p.A.transpose() * r.multipliers;
    const Eigen::VectorXd c = p.A * r.d + p.b;
    for (int k = 0; k < c.size(); ++k) {
      worst = std::max(worst, std::max(c[k], 0.0));
      worst = std::max(worst, std::abs(r.multipliers[k] * c[k]));
      worst = std::max(worst, std::max(-r.multipliers[k], 0.0));
    }
  }
  worst = std::max(worst, stat.lpNorm<Eigen::Infinity>());
  for (int i = 0; i < n; ++i) {
    const double lo = p.lower.size() ? p.lower[i] : -kInf;
    const double hi = p.upper.size() ? p.upper[i] : kInf;
    worst = std::max(worst, std::max(lo - r.d[i], 0.0));
    worst = std::max(worst, std::max(r.d[i] - hi, 0.0));
    const double nu = r.bound_multipliers[i];
    if (nu > 0.0) worst = std::max(worst, nu * std::abs(hi - r.d[i]));
    if (nu < 0.0) worst = std::max(worst, -nu * std::abs(r.d[i] - lo));
  }
  return worst;
}

}  // namespace safeik
