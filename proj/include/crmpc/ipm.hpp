#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "crmpc/qp.hpp"

namespace crmpc {

struct IpmOptions {
  int max_iterations = 100;
  double mu_tol = 1e-9;
  double residual_tol = 1e-8;
  /// Fraction of the step to the boundary of s, lambda > 0.
  double step_fraction = 0.995;
  /// Refine the converged iterate on its identified active set.
  bool polish = true;
  /// On a factorization failure or the iteration limit, attempt the polish
  /// when the duality measure is below this.
  double rescue_mu = 1e-4;
};

namespace detail {

// Largest alpha in (0, 1] with v + alpha dv >= 0.
inline double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

// Re-solves the equality-constrained problem on the rows with lambda_i > s_i.
// Rows with negative multipliers are dropped and violated rows added, a few
// rounds at most; the result is kept only when primal and dual feasible.
inline bool polish(const QpInstance& inst, const Eigen::VectorXd& s, const Eigen::VectorXd& lambda,
                   Eigen::VectorXd& u, Eigen::VectorXd& lambda_out, int max_rounds = 8) {
  const Eigen::MatrixXd& g = *inst.g;
  const int n = inst.vars();
  std::vector<int> act;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (lambda(i) > s(i)) act.push_back(static_cast<int>(i));
  const Eigen::VectorXd u_free = solve_unconstrained(*inst.hessian, inst.f);

  for (int round = 0; round < max_rounds; ++round) {
    const auto k = static_cast<Eigen::Index>(act.size());
    if (k > n) return false;
    Eigen::VectorXd cand = u_free;
    Eigen::VectorXd mu;
    if (k > 0) {
      Eigen::MatrixXd g_a(k, n);
      Eigen::VectorXd b_a(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        g_a.row(r) = g.row(act[static_cast<std::size_t>(r)]);
        b_a(r) = inst.b(act[static_cast<std::size_t>(r)]);
      }
      const Eigen::MatrixXd hinv_gt = inst.hessian->llt().solve(g_a.transpose());
      Eigen::LLT<Eigen::MatrixXd> schur(g_a * hinv_gt);
      if (schur.info() != Eigen::Success) return false;
      mu = schur.solve(g_a * cand - b_a);
      if (!mu.allFinite()) return false;
      Eigen::Index worst = 0;
      if (mu.minCoeff(&worst) < -1e-10) {
        act.erase(act.begin() + worst);
        continue;
      }
      cand -= hinv_gt * mu;
    }
    const Eigen::VectorXd viol = g * cand - inst.b;
    int add = -1;
    double add_viol = 0.0;
    for (Eigen::Index i = 0; i < viol.size(); ++i) {
      const double v = viol(i) / (1.0 + std::abs(inst.b(i)));
      if (v > 1e-10 && v > add_viol) {
        add_viol = v;
        add = static_cast<int>(i);
      }
    }
    if (add >= 0) {
      act.insert(std::upper_bound(act.begin(), act.end(), add), add);
      continue;
    }
    u = cand;
    lambda_out = Eigen::VectorXd::Zero(inst.rows());
    for (Eigen::Index r = 0; r < k; ++r) lambda_out(act[static_cast<std::size_t>(r)]) = mu(r);
    return true;
  }
  return false;
}

}  // namespace detail

/// Mehrotra predictor-corrector primal-dual interior-point method on
/// g u + s = b, s >= 0, lambda >= 0. Each iteration factors the dense
/// normal matrix H + g' (Lambda / S) g once and reuses it for the predictor
/// and the corrector.
inline QpResult solve_ipm(const QpInstance& inst, const IpmOptions& opts = {}) {
  const int n = inst.vars();
  const int q = inst.rows();
  if (q == 0) return detail::unconstrained_result(inst);

  const Eigen::MatrixXd& h = inst.hessian->h();
  const Eigen::MatrixXd& g = *inst.g;
  const Eigen::VectorXd& b = inst.b;
  const Eigen::VectorXd& f = inst.f;
  const double b_scale = 1.0 + b.cwiseAbs().maxCoeff();
  const double f_scale = 1.0 + (f.size() ? f.cwiseAbs().maxCoeff() : 0.0);
  const double g_scale = std::max(1.0, g.cwiseAbs().maxCoeff());

  QpResult res;
  Eigen::VectorXd u = solve_unconstrained(*inst.hessian, f);
  Eigen::VectorXd s = (b - g * u).cwiseMax(1.0);
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(q);

  Eigen::MatrixXd normal(n, n);
  Eigen::MatrixXd scaled_g(q, n);
  Eigen::LLT<Eigen::MatrixXd> llt(n);
  Eigen::VectorXd r_d(n), r_p(q), r_c(q), w(q), rhs(n);
  Eigen::VectorXd du(n), dl(q), ds(q), du_aff(n), dl_aff(q), ds_aff(q);

  auto newton = [&](const Eigen::VectorXd& comp, Eigen::VectorXd& out_u, Eigen::VectorXd& out_l,
                    Eigen::VectorXd& out_s) {
    // comp is the complementarity target residual S Lambda e - sigma mu e (+ corrector).
    const Eigen::VectorXd comp_over_s = comp.cwiseQuotient(s);
    rhs = -r_d - g.transpose() * (w.cwiseProduct(r_p) - comp_over_s);
    out_u = llt.solve(rhs);
    out_l = w.cwiseProduct(g * out_u + r_p) - comp_over_s;
    out_s = -(comp + s.cwiseProduct(out_l)).cwiseQuotient(lambda);
  };

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    r_d.noalias() = h * u + f + g.transpose() * lambda;
    r_p.noalias() = g * u + s - b;
    const double mu = s.dot(lambda) / q;

    const double primal_res = r_p.cwiseAbs().maxCoeff();
    const double dual_res = r_d.cwiseAbs().maxCoeff();
    if (mu <= opts.mu_tol && primal_res <= opts.residual_tol * b_scale &&
        dual_res <= opts.residual_tol * f_scale) {
      res.status = QpStatus::kOptimal;
      break;
    }

    // Farkas certificate of primal infeasibility: lambda >= 0, g'lambda ~ 0,
    // b'lambda < 0, detected once the multipliers have blown up.
    const double l_norm = lambda.lpNorm<1>();
    if (l_norm > 1e6 * b_scale * f_scale) {
      const Eigen::VectorXd l_hat = lambda / l_norm;
      if (b.dot(l_hat) < -1e-8 * b_scale &&
          (g.transpose() * l_hat).cwiseAbs().maxCoeff() <= 1e-6 * g_scale) {
        res.status = QpStatus::kInfeasible;
        break;
      }
    }

    w = lambda.cwiseQuotient(s);
    scaled_g = w.cwiseSqrt().asDiagonal() * g;
    normal = h;
    normal.selfadjointView<Eigen::Lower>().rankUpdate(scaled_g.transpose());
    llt.compute(normal);
    if (llt.info() != Eigen::Success) {
      res.status = QpStatus::kNumericalFailure;
      break;
    }

    // Predictor (affine scaling) direction.
    r_c = s.cwiseProduct(lambda);
    newton(r_c, du_aff, dl_aff, ds_aff);
    const double alpha_aff =
        std::min(detail::max_step(s, ds_aff), detail::max_step(lambda, dl_aff));
    const double mu_aff = (s + alpha_aff * ds_aff).dot(lambda + alpha_aff * dl_aff) / q;
    const double sigma = std::pow(mu_aff / mu, 3);

    // Centering-corrector direction.
    r_c = s.cwiseProduct(lambda) + ds_aff.cwiseProduct(dl_aff) -
          Eigen::VectorXd::Constant(q, sigma * mu);
    newton(r_c, du, dl, ds);
    const double alpha_max = std::min(detail::max_step(s, ds), detail::max_step(lambda, dl));
    const double alpha = std::min(1.0, opts.step_fraction * alpha_max);

    if (!du.allFinite() || !ds.allFinite() || !dl.allFinite() || !std::isfinite(alpha)) {
      res.status = QpStatus::kNumericalFailure;
      break;
    }
    u += alpha * du;
    s += alpha * ds;
    lambda += alpha * dl;
  }
  if (it == opts.max_iterations) res.status = QpStatus::kIterationLimit;

  res.iterations = it;
  if (opts.polish) {
    // Near the solution the normal matrix can lose definiteness in floating
    // point; a polished point that passes the KKT checks is still optimal.
    const bool rescue = res.status != QpStatus::kOptimal && res.status != QpStatus::kInfeasible &&
                        s.dot(lambda) / q <= opts.rescue_mu;
    Eigen::VectorXd l_polished;
    if ((res.status == QpStatus::kOptimal || rescue) &&
        detail::polish(inst, s, lambda, u, l_polished)) {
      lambda = std::move(l_polished);
      res.status = QpStatus::kOptimal;
    }
  }
  res.u_star = u;
  res.lambda = lambda;
  res.value = detail::qp_objective(inst, u);
  if (res.status == QpStatus::kOptimal) {
    res.active_rows = detail::detect_active_rows(inst, u);
  }
  return res;
}

}  // namespace crmpc
