#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crmpc/errors.hpp"
#include "crmpc/model.hpp"

namespace crmpc {

/// max (or min) objective' z  s.t.  a z <= b, z free.
struct LpInstance {
  Eigen::VectorXd objective;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  bool maximize = true;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

inline std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "Optimal";
    case LpStatus::kInfeasible: return "Infeasible";
    case LpStatus::kUnbounded: return "Unbounded";
    case LpStatus::kNumericalFailure: return "NumericalFailure";
  }
  return "?";
}

struct LpResult {
  LpStatus status = LpStatus::kNumericalFailure;
  double value = 0.0;
  Eigen::VectorXd z;
  int iterations = 0;
};

struct LpOptions {
  /// Box |z_j| <= safeguard_bound appended to every LP; an optimum that
  /// leans on this box is reported as Unbounded.
  double safeguard_bound = 1e6;
  double tol = 1e-9;
  int max_iterations = 100000;
  int refactor_every = 64;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int bland_after = 20;
};

namespace detail {

struct SimplexOutcome {
  LpStatus status = LpStatus::kNumericalFailure;
  Eigen::VectorXd z;
  int iterations = 0;
};

// Primal simplex for max c'z s.t. a z <= b from a feasible z0. The working
// set holds n constraints; slot i starts as the artificial row z_i = z0_i,
// which may be released in either direction. Rows from box_start on are the
// safeguard box.
inline SimplexOutcome primal_simplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& c, Eigen::VectorXd z,
                                     Eigen::Index box_start, const LpOptions& opts) {
  const auto n = c.size();
  const auto rows = a.rows();
  SimplexOutcome out;
  // work[i] >= 0: real row; work[i] < 0: artificial row for coordinate -work[i]-1.
  std::vector<Eigen::Index> work(static_cast<std::size_t>(n));
  std::vector<char> in_work(static_cast<std::size_t>(rows), 0);
  for (Eigen::Index i = 0; i < n; ++i) work[static_cast<std::size_t>(i)] = -i - 1;

  Eigen::MatrixXd b_inv = Eigen::MatrixXd::Identity(n, n);
  auto normal = [&](Eigen::Index w) -> Eigen::VectorXd {
    if (w >= 0) return a.row(w).transpose();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(-w - 1) = 1.0;
    return e;
  };
  auto refactor = [&]() -> bool {
    Eigen::MatrixXd basis(n, n);
    for (Eigen::Index i = 0; i < n; ++i) basis.col(i) = normal(work[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (!lu.isInvertible()) return false;
    b_inv = lu.inverse();
    return true;
  };

  const double lambda_tol = opts.tol * std::max(1.0, c.cwiseAbs().maxCoeff());
  const Eigen::VectorXd row_norm = a.rowwise().norm().cwiseMax(1e-300);
  Eigen::VectorXd lambda(n), p(n), ap(rows), slack(rows), d(n);
  int degenerate_run = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it;
    lambda.noalias() = b_inv * c;

    // Released slot: steepest edge, or lowest index while degenerate.
    const bool bland = degenerate_run >= opts.bland_after;
    Eigen::Index leave = -1;
    double leave_score = 0.0;
    double sign = 0.0;
    Eigen::Index leave_key = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index w = work[static_cast<std::size_t>(i)];
      double gain = 0.0;
      double dir = -1.0;
      if (w < 0) {
        if (std::abs(lambda(i)) <= lambda_tol) continue;
        gain = std::abs(lambda(i));
        dir = lambda(i) < 0.0 ? -1.0 : 1.0;
      } else {
        if (lambda(i) >= -lambda_tol) continue;
        gain = -lambda(i);
      }
      // Artificial rows sort before real rows under Bland's rule.
      const Eigen::Index key = w < 0 ? -w - 1 - n : w;
      const double score = gain / b_inv.row(i).norm();
      const bool better = bland ? (leave < 0 || key < leave_key) : (leave < 0 || score > leave_score);
      if (better) {
        leave = i;
        leave_score = score;
        leave_key = key;
        sign = dir;
      }
    }
    if (leave < 0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index w = work[static_cast<std::size_t>(i)];
        if (w >= box_start && lambda(i) > lambda_tol) {
          out.status = LpStatus::kUnbounded;
          out.z = z;
          return out;
        }
      }
      out.status = LpStatus::kOptimal;
      out.z = z;
      return out;
    }

    // Edge direction: a_w' p = 0 for the other slots, a_leave' p = sign.
    p = sign * b_inv.row(leave).transpose();
    ap.noalias() = a * p;
    slack.noalias() = b - a * z;
    Eigen::Index enter = -1;
    double alpha = 0.0;
    const double p_norm = p.norm();
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (in_work[static_cast<std::size_t>(k)]) continue;
      if (ap(k) <= opts.tol * row_norm(k) * p_norm) continue;
      const double step = std::max(slack(k), 0.0) / ap(k);
      if (enter < 0 || step < alpha - 1e-15 * (1.0 + alpha)) {
        enter = k;
        alpha = step;
      }
    }
    if (enter < 0) {
      out.status = LpStatus::kUnbounded;
      out.z = z;
      return out;
    }
    degenerate_run = alpha * p_norm <= 1e-12 ? degenerate_run + 1 : 0;
    z += alpha * p;

    const Eigen::Index old = work[static_cast<std::size_t>(leave)];
    if (old >= 0) in_work[static_cast<std::size_t>(old)] = 0;
    work[static_cast<std::size_t>(leave)] = enter;
    in_work[static_cast<std::size_t>(enter)] = 1;
    d.noalias() = b_inv * a.row(enter).transpose();
    if ((it + 1) % opts.refactor_every == 0 || std::abs(d(leave)) < 1e-11) {
      if (!refactor()) return out;
    } else {
      const Eigen::RowVectorXd pivot_row = b_inv.row(leave) / d(leave);
      b_inv.noalias() -= d * pivot_row;
      b_inv.row(leave) = pivot_row;
    }
  }
  return out;
}

}  // namespace detail

/// Primal simplex on the inequality form. Every LP gets the safeguard box
/// |z_j| <= safeguard_bound; when the origin violates a row, a phase I
/// minimizes t subject to a z - t <= b first.
inline LpResult lp_solve(const LpInstance& inst, const LpOptions& opts = {}) {
  const auto n = inst.objective.size();
  const auto rows = inst.a.rows();
  detail::require_dims(inst.a.cols() == n || rows == 0, "lp_solve: a columns must match objective");
  detail::require_dims(inst.b.size() == rows, "lp_solve: b size must match a rows");
  const double big = opts.safeguard_bound;

  LpResult res;
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n);
  const double worst = rows ? (-inst.b).maxCoeff() : 0.0;
  if (worst > 0.0) {
    // Phase I over (z, t): a z - t <= b, -t <= 1, |z| <= big, t <= big.
    Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(rows + 2 + 2 * n, n + 1);
    Eigen::VectorXd b1(rows + 2 + 2 * n);
    a1.topLeftCorner(rows, n) = inst.a;
    a1.col(n).head(rows).setConstant(-1.0);
    b1.head(rows) = inst.b;
    a1(rows, n) = -1.0;
    b1(rows) = 1.0;
    a1(rows + 1, n) = 1.0;
    b1(rows + 1) = big;
    a1.block(rows + 2, 0, n, n).setIdentity();
    a1.block(rows + 2 + n, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);
    b1.tail(2 * n).setConstant(big);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + 1);
    c1(n) = -1.0;
    Eigen::VectorXd start = Eigen::VectorXd::Zero(n + 1);
    start(n) = worst + 1.0;
    const detail::SimplexOutcome ph1 = detail::primal_simplex(a1, b1, c1, start, rows + 1, opts);
    res.iterations = ph1.iterations;
    if (ph1.status != LpStatus::kOptimal) return res;
    if (ph1.z(n) > opts.tol * (1.0 + worst)) {
      res.status = LpStatus::kInfeasible;
      return res;
    }
    z0 = ph1.z.head(n);
  }

  Eigen::MatrixXd a2(rows + 2 * n, n);
  Eigen::VectorXd b2(rows + 2 * n);
  a2.topRows(rows) = inst.a;
  a2.middleRows(rows, n).setIdentity();
  a2.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  b2.head(rows) = inst.b;
  b2.tail(2 * n).setConstant(big);
  const Eigen::VectorXd c = inst.maximize ? inst.objective : Eigen::VectorXd(-inst.objective);
  const detail::SimplexOutcome ph2 = detail::primal_simplex(a2, b2, c, z0, rows, opts);
  res.iterations += ph2.iterations;
  res.status = ph2.status;
  if (ph2.status == LpStatus::kOptimal || ph2.status == LpStatus::kUnbounded) res.z = ph2.z;
  if (ph2.status == LpStatus::kOptimal) res.value = inst.objective.dot(ph2.z);
  return res;
}

/// Axis-aligned bounding box of a polyhedron, one LP per coordinate and
/// direction. Throws when the set is empty or unbounded.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box(const HalfspaceSet& set) {
  const int dim = set.dim();
  Eigen::VectorXd lo(dim), hi(dim);
  LpInstance lp{Eigen::VectorXd::Zero(dim), set.c, set.d, true};
  for (int i = 0; i < dim; ++i) {
    for (bool upper : {true, false}) {
      lp.objective.setZero();
      lp.objective(i) = 1.0;
      lp.maximize = upper;
      const LpResult r = lp_solve(lp);
      if (r.status != LpStatus::kOptimal)
        throw Error("bounding_box: coordinate " + std::to_string(i) + " LP " + to_string(r.status));
      (upper ? hi : lo)(i) = r.value;
    }
  }
  return {lo, hi};
}

}  // namespace crmpc
