#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "crmpc/condense.hpp"
#include "crmpc/solvers.hpp"

namespace crmpc {

/// Offline data for the online removal test.
struct CremPrecomp {
  /// -H^-1 F, so that U_uc = hinv_f x.
  Eigen::MatrixXd hinv_f;
  /// d_i = G^i H^-1 G^i', clamped at zero.
  Eigen::VectorXd d_vec;
  /// Y - F' H^-1 F, so that V_uc = 1/2 x' schur_y x.
  Eigen::MatrixXd schur_y;
  /// G hinv_f - E, so that G U_uc - w - E x = slack_map x - w.
  Eigen::MatrixXd slack_map;
};

inline CremPrecomp precompute(const CondensedQp& qp) {
  if (!qp.hessian) throw NotPositiveDefinite("precompute: missing Hessian factor");
  CremPrecomp pre;
  const auto& llt = qp.hessian->llt();
  pre.hinv_f = -llt.solve(qp.f_mat);
  pre.schur_y = detail::symmetrized(qp.y_mat + qp.f_mat.transpose() * pre.hinv_f);
  // d_i = |L^-1 G^i'|^2.
  const Eigen::MatrixXd half = llt.matrixL().solve(qp.g_mat.transpose());
  pre.d_vec = half.colwise().squaredNorm().transpose().cwiseMax(0.0);
  pre.slack_map = qp.g_mat * pre.hinv_f - qp.e_mat;
  return pre;
}

/// Per-trajectory state of the cost bound.
struct RemovalContext {
  /// Upper bound on V*(x(t)).
  double gamma = 0.0;
  double prev_cost = 0.0;
  double prev_stage = 0.0;
  bool first_step = true;
};

/// gamma = V*(x) - (x'Qx + u'Ru) for the step just completed at state x
/// with plant input u.
inline RemovalContext gamma_update(RemovalContext ctx, double new_cost, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& x, const Eigen::MatrixXd& q_mat,
                                   const Eigen::MatrixXd& r_mat) {
  ctx.prev_cost = new_cost;
  ctx.prev_stage = x.dot(q_mat * x) + u.dot(r_mat * u);
  ctx.gamma = ctx.prev_cost - ctx.prev_stage;
  ctx.first_step = false;
  return ctx;
}

struct RemovalResult {
  std::vector<int> removed;
  std::vector<int> kept;
  bool all_removed = false;
  /// Unconstrained optimizer and its cost at x.
  Eigen::VectorXd u_uc;
  double v_uc = 0.0;
};

struct CertifyOptions {
  /// Slack of a removed row must be below -margin_rel (1 + |w_i|).
  double margin_rel = 1e-9;
  /// Tolerance on gamma - V_uc, relative to 1 + |gamma|, for roundoff.
  double rho_tol = 1e-9;
  /// Check the removed rows at the reduced optimizer and fall back to the
  /// full QP when one is not strictly satisfied. Needed whenever gamma may
  /// underestimate V*(x), e.g. with P = 0 or a non-invariant terminal set.
  bool verify_removed = true;
};

/// Rows whose slack stays negative over the ellipsoid {U : V(x, U) <= gamma}.
inline RemovalResult certify_inactive(const Eigen::VectorXd& x, const RemovalContext& ctx,
                                      const CremPrecomp& pre, const CondensedQp& qp,
                                      const CertifyOptions& opts = {}) {
  RemovalResult res;
  const int q = qp.rows();
  res.u_uc = pre.hinv_f * x;
  res.v_uc = 0.5 * x.dot(pre.schur_y * x);
  const double tau = opts.rho_tol * (1.0 + std::abs(ctx.gamma));
  const double rho = ctx.gamma - res.v_uc;
  if (ctx.first_step || rho < -tau) {
    res.kept.resize(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) res.kept[static_cast<std::size_t>(i)] = i;
    return res;
  }
  const double two_rho = 2.0 * (std::max(rho, 0.0) + tau);
  const Eigen::VectorXd slack = pre.slack_map * x - qp.w_vec;
  res.removed.reserve(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    const double margin = slack(i) + std::sqrt(two_rho * pre.d_vec(i));
    if (margin < -opts.margin_rel * (1.0 + std::abs(qp.w_vec(i))))
      res.removed.push_back(i);
    else
      res.kept.push_back(i);
  }
  res.all_removed = res.kept.empty();
  return res;
}

struct StepStats {
  int kept_rows = 0;
  int removed_rows = 0;
  bool all_removed = false;
  std::int64_t certify_ns = 0;
  std::int64_t setup_ns = 0;
  std::int64_t solve_ns = 0;
  int iterations = 0;
  QpStatus status = QpStatus::kOptimal;
  /// The removed rows failed verification and the full QP was solved.
  bool fallback = false;

  std::int64_t total_ns() const { return certify_ns + setup_ns + solve_ns; }
};

struct StepOutput {
  /// Plant input u(t).
  Eigen::VectorXd u;
  /// Optimal decision vector.
  Eigen::VectorXd u_seq;
  /// V*(x), in stage-cost units.
  double cost = 0.0;
  StepStats stats;
  /// Row indices removed at this step (CR mode).
  std::vector<int> removed;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

inline void finish_step(StepOutput& out, const CondensedQp& qp, const Eigen::VectorXd& x,
                        const QpResult& res) {
  out.stats.status = res.status;
  out.stats.iterations = res.iterations;
  if (res.status == QpStatus::kInfeasible)
    throw InfeasibleState("mpc step: QP infeasible at the current state");
  out.u_seq = res.u_star;
  out.cost = res.value + 0.5 * x.dot(qp.y_mat * x);
  out.u = qp.first_input(x, out.u_seq);
}

}  // namespace detail

/// Solves the full QP at x. Assembly of f = F x and b = w + E x is timed
/// together with the solve.
inline StepOutput full_step(const Eigen::VectorXd& x, const CondensedQp& qp, SolverKind solver) {
  StepOutput out;
  const auto t0 = detail::Clock::now();
  QpInstance inst;
  inst.hessian = qp.hessian;
  inst.g = qp.g_shared;
  inst.f.noalias() = qp.f_mat * x;
  inst.b = qp.w_vec;
  inst.b.noalias() += qp.e_mat * x;
  const QpResult res = solve_qp(inst, solver);
  const auto t1 = detail::Clock::now();
  out.stats.solve_ns = detail::elapsed_ns(t0, t1);
  out.stats.kept_rows = qp.rows();
  detail::finish_step(out, qp, x, res);
  return out;
}

/// One control step with constraint removal: certify, then either return the
/// unconstrained optimizer or solve the QP over the kept rows. The
/// all-removed branch needs no check: every row then has negative slack at
/// the unconstrained optimizer. ctx is advanced with the achieved optimal
/// cost.
inline StepOutput mpc_step(const Eigen::VectorXd& x, RemovalContext& ctx, const CremPrecomp& pre,
                           const CondensedQp& qp, SolverKind solver,
                           const CertifyOptions& opts = {}) {
  detail::require_dims(x.size() == qp.n(), "mpc_step: state dimension");
  StepOutput out;
  if (ctx.first_step) {
    out = full_step(x, qp, solver);
  } else {
    const auto t0 = detail::Clock::now();
    RemovalResult rem = certify_inactive(x, ctx, pre, qp, opts);
    if (rem.all_removed) {
      out.u_seq = std::move(rem.u_uc);
      out.u = qp.first_input(x, out.u_seq);
      const auto t1 = detail::Clock::now();
      out.cost = rem.v_uc;
      out.stats.certify_ns = detail::elapsed_ns(t0, t1);
    } else {
      const auto t1 = detail::Clock::now();
      const auto k = static_cast<Eigen::Index>(rem.kept.size());
      auto g_sub = std::make_shared<Eigen::MatrixXd>(k, qp.vars());
      QpInstance inst;
      inst.hessian = qp.hessian;
      inst.b.resize(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        const int src = rem.kept[static_cast<std::size_t>(r)];
        g_sub->row(r) = qp.g_mat.row(src);
        inst.b(r) = qp.w_vec(src) + qp.e_mat.row(src).dot(x);
      }
      inst.g = std::move(g_sub);
      inst.f.noalias() = qp.f_mat * x;
      inst.kept_rows = rem.kept;
      const auto t2 = detail::Clock::now();
      QpResult res = solve_qp(inst, solver);
      if (opts.verify_removed && res.optimal()) {
        for (int i : rem.removed) {
          const double slack = qp.w_vec(i) + qp.e_mat.row(i).dot(x) - qp.g_mat.row(i).dot(res.u_star);
          if (slack <= opts.margin_rel * (1.0 + std::abs(qp.w_vec(i)))) {
            out.stats.fallback = true;
            break;
          }
        }
        if (out.stats.fallback) {
          inst.g = qp.g_shared;
          inst.b = qp.rhs(x);
          res = solve_qp(inst, solver);
          rem.removed.clear();
          rem.kept.clear();
        }
      }
      const auto t3 = detail::Clock::now();
      out.stats.certify_ns = detail::elapsed_ns(t0, t1);
      out.stats.setup_ns = detail::elapsed_ns(t1, t2);
      out.stats.solve_ns = detail::elapsed_ns(t2, t3);
      out.stats.kept_rows = out.stats.fallback ? qp.rows() : static_cast<int>(k);
      detail::finish_step(out, qp, x, res);
    }
    out.stats.removed_rows = static_cast<int>(rem.removed.size());
    out.stats.all_removed = rem.all_removed;
    out.removed = std::move(rem.removed);
  }
  if (out.stats.status == QpStatus::kOptimal)
    ctx = gamma_update(ctx, out.cost, out.u, x, qp.stage_q, qp.stage_r);
  return out;
}

}  // namespace crmpc
