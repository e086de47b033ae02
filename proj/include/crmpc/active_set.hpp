#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "crmpc/qp.hpp"

namespace crmpc {

struct ActiveSetOptions {
  /// Record the dual objective after every primal or dual step.
  bool record_trace = false;
  /// A row counts as violated when b_i - g_i u < -tol * (1 + |b_i|).
  double feasibility_tol = 1e-12;
};

namespace detail {

// Working-set factorization of the Goldfarb-Idnani dual method: J = L^-T Q
// and upper triangular R with J' N = [R; 0] for the active normals N.
struct GoldfarbIdnaniFactor {
  Eigen::MatrixXd j;
  Eigen::MatrixXd r;
  int iq = 0;
  double r_norm = 1.0;

  // Appends the normal whose transformed coordinates are d = J' np.
  bool add(Eigen::VectorXd& d) {
    const auto n = j.rows();
    for (Eigen::Index col = n - 1; col >= iq + 1; --col) {
      double cc = d(col - 1);
      double ss = d(col);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(col) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(col - 1) = -h;
      } else {
        d(col - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < n; ++k) {
        const double t1 = j(k, col - 1);
        const double t2 = j(k, col);
        j(k, col - 1) = t1 * cc + t2 * ss;
        j(k, col) = xny * (t1 + j(k, col - 1)) - t2;
      }
    }
    ++iq;
    r.col(iq - 1).head(iq) = d.head(iq);
    if (std::abs(d(iq - 1)) <= std::numeric_limits<double>::epsilon() * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d(iq - 1)));
    return true;
  }

  // Removes working-set position pos; active/u hold iq entries plus the
  // candidate at index iq, which shifts down with the rest.
  void remove(int pos, std::vector<int>& active, Eigen::VectorXd& u) {
    const auto n = j.rows();
    for (int i = pos; i < iq - 1; ++i) {
      active[i] = active[i + 1];
      u(i) = u(i + 1);
      r.col(i) = r.col(i + 1);
    }
    active[iq - 1] = active[iq];
    u(iq - 1) = u(iq);
    u(iq) = 0.0;
    r.col(iq - 1).head(iq).setZero();
    --iq;
    for (int col = pos; col < iq; ++col) {
      double cc = r(col, col);
      double ss = r(col + 1, col);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      r(col + 1, col) = 0.0;
      if (cc < 0.0) {
        r(col, col) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        r(col, col) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = col + 1; k < iq; ++k) {
        const double t1 = r(col, k);
        const double t2 = r(col + 1, k);
        r(col, k) = t1 * cc + t2 * ss;
        r(col + 1, k) = xny * (t1 + r(col, k)) - t2;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double t1 = j(k, col);
        const double t2 = j(k, col + 1);
        j(k, col) = t1 * cc + t2 * ss;
        j(k, col + 1) = xny * (j(k, col) + t1) - t2;
      }
    }
  }
};

}  // namespace detail

/// Dual active-set method of Goldfarb and Idnani. Starts at the unconstrained
/// minimizer (dual feasible) and adds the most violated row at each major
/// iteration; ties go to the lowest row index.
inline QpResult solve_active_set(const QpInstance& inst, const ActiveSetOptions& opts = {}) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int n = inst.vars();
  const int q = inst.rows();
  if (q == 0) {
    QpResult res = detail::unconstrained_result(inst);
    if (opts.record_trace) res.objective_trace.push_back(res.value);
    return res;
  }
  const Eigen::MatrixXd& g = *inst.g;
  const Eigen::VectorXd& b = inst.b;

  QpResult res;
  res.lambda = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd x = solve_unconstrained(*inst.hessian, inst.f);
  double f_value = 0.5 * inst.f.dot(x);
  if (opts.record_trace) res.objective_trace.push_back(f_value);

  detail::GoldfarbIdnaniFactor fac;
  fac.j = inst.hessian->l_inv_t();
  fac.r = Eigen::MatrixXd::Zero(n, n);

  const int slots = std::min(n, q) + 1;
  std::vector<int> active(static_cast<std::size_t>(slots), -1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(slots);
  std::vector<char> in_active(static_cast<std::size_t>(q), 0);
  Eigen::VectorXd d(n), z(n), r(slots), np(n);
  Eigen::VectorXd tol(q);
  for (int i = 0; i < q; ++i) tol(i) = opts.feasibility_tol * (1.0 + std::abs(b(i)));

  const int max_iterations = 10 * (q + n);
  int iterations = 0;
  auto finish = [&](QpStatus status) {
    res.status = status;
    res.iterations = iterations;
    res.u_star = x;
    res.value = detail::qp_objective(inst, x);
    for (int k = 0; k < fac.iq; ++k) res.lambda(active[k]) = u(k);
    if (status == QpStatus::kOptimal) res.active_rows = detail::detect_active_rows(inst, x);
    return res;
  };

  for (;;) {
    // Step 1: pick the most violated row outside the working set.
    Eigen::VectorXd slack = b - g * x;
    int ip = -1;
    double worst = 0.0;
    for (int i = 0; i < q; ++i) {
      if (in_active[i] || slack(i) >= -tol(i)) continue;
      if (ip < 0 || slack(i) < worst) {
        worst = slack(i);
        ip = i;
      }
    }
    if (ip < 0) return finish(QpStatus::kOptimal);

    np = -g.row(ip).transpose();
    double s_ip = slack(ip);
    u(fac.iq) = 0.0;
    active[fac.iq] = ip;

    // Step 2: move toward feasibility of row ip.
    for (;;) {
      if (++iterations > max_iterations) return finish(QpStatus::kIterationLimit);
      const int iq = fac.iq;
      d.noalias() = fac.j.transpose() * np;
      z.noalias() = fac.j.rightCols(n - iq) * d.tail(n - iq);
      if (iq > 0)
        r.head(iq) = fac.r.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));

      // Largest dual step keeping the multipliers nonnegative.
      double t1 = kInf;
      int drop = -1;
      for (int k = 0; k < iq; ++k) {
        if (r(k) <= 0.0) continue;
        const double ratio = u(k) / r(k);
        if (ratio < t1 || (ratio == t1 && drop >= 0 && active[k] < active[drop])) {
          t1 = ratio;
          drop = k;
        }
      }
      // Full step restoring feasibility of row ip.
      const double znp = z.dot(np);
      const double t2 = z.squaredNorm() > std::numeric_limits<double>::epsilon() ? -s_ip / znp : kInf;
      const double t = std::min(t1, t2);

      if (t == kInf) return finish(QpStatus::kInfeasible);

      if (t2 == kInf) {
        u.head(iq) -= t * r.head(iq);
        u(iq) += t;
        in_active[active[drop]] = 0;
        fac.remove(drop, active, u);
        continue;
      }

      x += t * z;
      f_value += t * znp * (0.5 * t + u(iq));
      u.head(iq) -= t * r.head(iq);
      u(iq) += t;
      if (opts.record_trace) res.objective_trace.push_back(f_value);

      if (t == t2) {
        if (!fac.add(d)) return finish(QpStatus::kNumericalFailure);
        in_active[ip] = 1;
        break;
      }
      in_active[active[drop]] = 0;
      fac.remove(drop, active, u);
      s_ip = np.dot(x) + b(ip);
    }
  }
}

}  // namespace crmpc
