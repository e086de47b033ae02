#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "crmpc/errors.hpp"

namespace crmpc {

/// A positive definite Hessian with its Cholesky factor H = L L' and the
/// inverse transposed factor L^-T, computed once and shared by every QP
/// instance built over the same H.
class HessianFactor {
 public:
  explicit HessianFactor(Eigen::MatrixXd h) : h_(std::move(h)), llt_(h_) {
    if (h_.rows() != h_.cols()) throw DimensionMismatch("HessianFactor: H must be square");
    if (llt_.info() != Eigen::Success || !llt_.matrixLLT().allFinite())
      throw NotPositiveDefinite("HessianFactor: Cholesky factorization failed");
    const auto n = h_.rows();
    l_inv_t_ = llt_.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  }

  const Eigen::MatrixXd& h() const { return h_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }
  /// J = L^-T, so that J J' = H^-1.
  const Eigen::MatrixXd& l_inv_t() const { return l_inv_t_; }
  int size() const { return static_cast<int>(h_.rows()); }

 private:
  Eigen::MatrixXd h_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd l_inv_t_;
};

/// min 1/2 u'Hu + f'u  s.t.  g u <= b.
struct QpInstance {
  std::shared_ptr<const HessianFactor> hessian;
  Eigen::VectorXd f;
  std::shared_ptr<const Eigen::MatrixXd> g;
  Eigen::VectorXd b;
  /// Index of each row in the originating constraint set.
  std::vector<int> kept_rows;

  int vars() const { return hessian->size(); }
  int rows() const { return static_cast<int>(b.size()); }
};

inline QpInstance make_qp_instance(const Eigen::MatrixXd& h, const Eigen::VectorXd& f,
                                   const Eigen::MatrixXd& g, const Eigen::VectorXd& b) {
  detail::require_dims(f.size() == h.rows(), "qp: f size must match H");
  detail::require_dims(g.rows() == b.size(), "qp: g rows must match b");
  detail::require_dims(g.rows() == 0 || g.cols() == h.rows(), "qp: g cols must match H");
  QpInstance inst;
  inst.hessian = std::make_shared<HessianFactor>(h);
  inst.f = f;
  inst.g = std::make_shared<Eigen::MatrixXd>(g.rows() == 0 ? Eigen::MatrixXd(0, h.rows()) : g);
  inst.b = b;
  inst.kept_rows.resize(static_cast<std::size_t>(b.size()));
  for (std::size_t i = 0; i < inst.kept_rows.size(); ++i) inst.kept_rows[i] = static_cast<int>(i);
  return inst;
}

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit, kNumericalFailure };

inline std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "Optimal";
    case QpStatus::kInfeasible: return "Infeasible";
    case QpStatus::kIterationLimit: return "IterationLimit";
    case QpStatus::kNumericalFailure: return "NumericalFailure";
  }
  return "?";
}

enum class SolverKind { kActiveSet, kIpm };

inline std::string to_string(SolverKind s) {
  return s == SolverKind::kActiveSet ? "ActiveSet" : "Ipm";
}

struct QpResult {
  Eigen::VectorXd u_star;
  /// 1/2 u'Hu + f'u at u_star.
  double value = 0.0;
  QpStatus status = QpStatus::kNumericalFailure;
  int iterations = 0;
  /// Rows (positions in the instance) with g_i u = b_i within tolerance.
  std::vector<int> active_rows;
  /// One multiplier per instance row, zero for inactive rows.
  Eigen::VectorXd lambda;
  /// Dual objective after every iteration (active-set solver only, on request).
  std::vector<double> objective_trace;

  bool optimal() const { return status == QpStatus::kOptimal; }
};

/// u = -H^-1 f using the cached factor.
inline Eigen::VectorXd solve_unconstrained(const HessianFactor& h, const Eigen::VectorXd& f) {
  detail::require_dims(f.size() == h.size(), "solve_unconstrained: f size");
  return -h.llt().solve(f);
}

inline Eigen::VectorXd solve_unconstrained(const Eigen::MatrixXd& h, const Eigen::VectorXd& f) {
  return solve_unconstrained(HessianFactor(h), f);
}

namespace detail {

inline double qp_objective(const QpInstance& inst, const Eigen::VectorXd& u) {
  return 0.5 * u.dot(inst.hessian->h() * u) + inst.f.dot(u);
}

inline std::vector<int> detect_active_rows(const QpInstance& inst, const Eigen::VectorXd& u,
                                           double rel_tol = 1e-7) {
  std::vector<int> active;
  if (inst.rows() == 0) return active;
  const Eigen::VectorXd slack = inst.b - (*inst.g) * u;
  for (int i = 0; i < inst.rows(); ++i)
    if (std::abs(slack(i)) <= rel_tol * (1.0 + std::abs(inst.b(i)))) active.push_back(i);
  return active;
}

inline QpResult unconstrained_result(const QpInstance& inst) {
  QpResult res;
  res.u_star = solve_unconstrained(*inst.hessian, inst.f);
  res.value = qp_objective(inst, res.u_star);
  res.status = QpStatus::kOptimal;
  res.lambda = Eigen::VectorXd::Zero(inst.rows());
  return res;
}

}  // namespace detail

/// Residual norms of the optimality conditions.
struct KktResidual {
  /// max(g u - b, 0), infinity norm.
  double primal_infeasibility = 0.0;
  /// |H u + f + g' lambda|, infinity norm.
  double stationarity = 0.0;
  /// max_i |lambda_i (g_i u - b_i)|.
  double complementarity = 0.0;
  /// max(-lambda, 0), infinity norm.
  double dual_infeasibility = 0.0;
};

inline KktResidual kkt_residual(const QpInstance& inst, const QpResult& result) {
  KktResidual r;
  const Eigen::VectorXd& u = result.u_star;
  Eigen::VectorXd grad = inst.hessian->h() * u + inst.f;
  if (inst.rows() > 0) {
    const Eigen::VectorXd lambda =
        result.lambda.size() == inst.rows() ? result.lambda : Eigen::VectorXd::Zero(inst.rows());
    const Eigen::VectorXd viol = (*inst.g) * u - inst.b;
    grad += inst.g->transpose() * lambda;
    r.primal_infeasibility = std::max(0.0, viol.maxCoeff());
    r.complementarity = lambda.cwiseProduct(viol).cwiseAbs().maxCoeff();
    r.dual_infeasibility = std::max(0.0, (-lambda).maxCoeff());
  }
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

}  // namespace crmpc
