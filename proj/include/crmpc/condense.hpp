#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "crmpc/model.hpp"
#include "crmpc/qp.hpp"

namespace crmpc {

enum class RowKind { kState, kInput, kTerminal, kStep0State };

inline std::string to_string(RowKind k) {
  switch (k) {
    case RowKind::kState: return "state";
    case RowKind::kInput: return "input";
    case RowKind::kTerminal: return "terminal";
    case RowKind::kStep0State: return "step0-state";
  }
  return "?";
}

/// Provenance of one condensed constraint row.
struct RowTag {
  int step = 0;
  RowKind kind = RowKind::kState;
  /// Row of the originating HalfspaceSet.
  int set_row = 0;

  bool operator==(const RowTag&) const = default;
};

/// Dense parametric QP
///
///   min_U  V(x, U) = 1/2 x'Yx + U'Fx + 1/2 U'HU   s.t.  G U <= w + E x,
///
/// scaled so that V equals the stage-plus-terminal cost of the trajectory.
/// When k_gain is set the decision variables are c(k) with
/// u(k) = -K x(k) + c(k).
struct CondensedQp {
  Eigen::MatrixXd h_mat;
  Eigen::MatrixXd f_mat;
  Eigen::MatrixXd y_mat;
  Eigen::MatrixXd g_mat;
  Eigen::MatrixXd e_mat;
  Eigen::VectorXd w_vec;
  std::vector<RowTag> row_tags;
  std::optional<Eigen::MatrixXd> k_gain;

  /// Open-loop plant and stage weights, for simulation and cost bookkeeping.
  Eigen::MatrixXd plant_a;
  Eigen::MatrixXd plant_b;
  Eigen::MatrixXd stage_q;
  Eigen::MatrixXd stage_r;
  int horizon = 0;

  /// Cholesky factor of h_mat, shared by all QP instances.
  std::shared_ptr<const HessianFactor> hessian;
  /// g_mat behind a shared pointer so full QPs reference it without copying.
  std::shared_ptr<const Eigen::MatrixXd> g_shared;

  int n() const { return static_cast<int>(plant_a.rows()); }
  int m() const { return static_cast<int>(plant_b.cols()); }
  int vars() const { return static_cast<int>(h_mat.rows()); }
  int rows() const { return static_cast<int>(w_vec.size()); }

  double objective(const Eigen::VectorXd& x, const Eigen::VectorXd& u_seq) const {
    return 0.5 * x.dot(y_mat * x) + u_seq.dot(f_mat * x) + 0.5 * u_seq.dot(h_mat * u_seq);
  }

  /// First plant input encoded by the decision vector at state x.
  Eigen::VectorXd first_input(const Eigen::VectorXd& x, const Eigen::VectorXd& u_seq) const {
    Eigen::VectorXd u = u_seq.head(m());
    if (k_gain) u -= (*k_gain) * x;
    return u;
  }

  /// Right-hand side w + E x.
  Eigen::VectorXd rhs(const Eigen::VectorXd& x) const { return w_vec + e_mat * x; }

  /// Full QP at state x; references g_mat without copying.
  QpInstance instance(const Eigen::VectorXd& x) const {
    QpInstance inst;
    inst.hessian = hessian;
    inst.f = f_mat * x;
    inst.g = g_shared;
    inst.b = rhs(x);
    inst.kept_rows.resize(static_cast<std::size_t>(rows()));
    for (int i = 0; i < rows(); ++i) inst.kept_rows[static_cast<std::size_t>(i)] = i;
    return inst;
  }

  /// Refreshes the cached factor and shared row matrix after editing fields.
  void finalize() {
    h_mat = detail::symmetrized(h_mat);
    hessian = std::make_shared<HessianFactor>(h_mat);
    g_shared = std::make_shared<Eigen::MatrixXd>(g_mat);
  }

  /// Copy restricted to the given rows (ascending), sharing the factor.
  CondensedQp select_rows(const std::vector<int>& keep) const {
    CondensedQp out = *this;
    const auto k = static_cast<Eigen::Index>(keep.size());
    out.g_mat.resize(k, vars());
    out.e_mat.resize(k, n());
    out.w_vec.resize(k);
    out.row_tags.clear();
    for (Eigen::Index r = 0; r < k; ++r) {
      const int src = keep[static_cast<std::size_t>(r)];
      out.g_mat.row(r) = g_mat.row(src);
      out.e_mat.row(r) = e_mat.row(src);
      out.w_vec(r) = w_vec(src);
      out.row_tags.push_back(row_tags[static_cast<std::size_t>(src)]);
    }
    out.g_shared = std::make_shared<Eigen::MatrixXd>(out.g_mat);
    return out;
  }
};

/// Reparametrizes the inputs as u = -K x + c. The returned spec carries the
/// closed-loop matrix a - bK and the accumulated feedback gain.
inline MpcSpec prestabilize(const MpcSpec& spec, const Eigen::MatrixXd& k_gain) {
  detail::require_dims(k_gain.rows() == spec.m() && k_gain.cols() == spec.n(),
                       "prestabilize: gain must be m x n");
  MpcSpec out = spec;
  out.sys.a = spec.sys.a - spec.sys.b * k_gain;
  if (k_gain.size() && k_gain.cwiseAbs().maxCoeff() > 0.0 &&
      spectral_radius(out.sys.a) >= 1.0)
    throw UnstablePrestabilization("prestabilize: a - bK is not Schur stable");
  out.input_feedback = spec.input_feedback ? Eigen::MatrixXd(*spec.input_feedback + k_gain)
                                           : k_gain;
  out.prestabilize = false;
  return out;
}

namespace detail {

inline CondensedQp condense_parametrized(const MpcSpec& spec) {
  const int n = spec.n();
  const int m = spec.m();
  const int horizon = spec.horizon;
  const int nu = m * horizon;
  const Eigen::MatrixXd& a_cl = spec.sys.a;
  const Eigen::MatrixXd& b = spec.sys.b;
  const Eigen::MatrixXd k = spec.input_feedback.value_or(Eigen::MatrixXd::Zero(m, n));
  const Eigen::MatrixXd& q_mat = spec.q_mat;
  const Eigen::MatrixXd& r_mat = spec.r_mat;

  CondensedQp qp;
  qp.horizon = horizon;
  qp.plant_a = a_cl + b * k;
  qp.plant_b = b;
  qp.stage_q = q_mat;
  qp.stage_r = r_mat;
  if (spec.input_feedback) qp.k_gain = k;

  qp.h_mat = Eigen::MatrixXd::Zero(nu, nu);
  qp.f_mat = Eigen::MatrixXd::Zero(nu, n);
  qp.y_mat = Eigen::MatrixXd::Zero(n, n);

  // x(k) = phi x + gamma U; u(k) = -K phi x + (S_k - K gamma) U.
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(n, nu);

  const int state_rows = spec.state_set.rows();
  const int input_rows = spec.input_set.rows();
  const int terminal_rows = spec.terminal_set.rows();
  const int total = (horizon - 1) * state_rows + horizon * input_rows + terminal_rows +
                    (spec.include_step0_state_rows ? state_rows : 0);
  qp.g_mat = Eigen::MatrixXd::Zero(total, nu);
  qp.e_mat = Eigen::MatrixXd::Zero(total, n);
  qp.w_vec = Eigen::VectorXd::Zero(total);
  qp.row_tags.reserve(static_cast<std::size_t>(total));
  int row = 0;

  auto emit = [&](const HalfspaceSet& set, const Eigen::MatrixXd& g_block,
                  const Eigen::MatrixXd& e_block, int step, RowKind kind) {
    const int cnt = set.rows();
    qp.g_mat.middleRows(row, cnt) = set.c * g_block;
    qp.e_mat.middleRows(row, cnt) = -set.c * e_block;
    qp.w_vec.segment(row, cnt) = set.d;
    for (int i = 0; i < cnt; ++i) qp.row_tags.push_back({step, kind, i});
    row += cnt;
  };

  for (int step = 0; step < horizon; ++step) {
    Eigen::MatrixXd in_u = -k * gamma;
    in_u.middleCols(step * m, m) += Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd in_x = -k * phi;

    qp.h_mat.noalias() += 2.0 * (gamma.transpose() * q_mat * gamma + in_u.transpose() * r_mat * in_u);
    qp.f_mat.noalias() += 2.0 * (gamma.transpose() * q_mat * phi + in_u.transpose() * r_mat * in_x);
    qp.y_mat.noalias() += 2.0 * (phi.transpose() * q_mat * phi + in_x.transpose() * r_mat * in_x);

    if (step == 0) {
      if (spec.include_step0_state_rows)
        emit(spec.state_set, Eigen::MatrixXd::Zero(n, nu), phi, 0, RowKind::kStep0State);
    } else {
      emit(spec.state_set, gamma, phi, step, RowKind::kState);
    }
    emit(spec.input_set, in_u, in_x, step, RowKind::kInput);

    Eigen::MatrixXd next_gamma = a_cl * gamma;
    next_gamma.middleCols(step * m, m) += b;
    gamma = std::move(next_gamma);
    phi = a_cl * phi;
  }
  qp.h_mat.noalias() += 2.0 * gamma.transpose() * spec.p_mat * gamma;
  qp.f_mat.noalias() += 2.0 * gamma.transpose() * spec.p_mat * phi;
  qp.y_mat.noalias() += 2.0 * phi.transpose() * spec.p_mat * phi;
  emit(spec.terminal_set, gamma, phi, horizon, RowKind::kTerminal);

  qp.y_mat = symmetrized(qp.y_mat);
  qp.finalize();
  return qp;
}

}  // namespace detail

/// Condenses the MPC problem into the dense parametric QP. Rows are ordered
/// by time step (state rows before input rows within a step, step-0 state
/// rows first when requested) with the terminal block last. When
/// spec.prestabilize is set, the inputs are reparametrized with the LQR gain
/// of (a, b, q_mat, r_mat, p_mat) first.
inline CondensedQp condense(const MpcSpec& spec) {
  const int n = spec.n();
  const int m = spec.m();
  detail::require_dims(spec.sys.a.cols() == n && spec.sys.b.rows() == n, "condense: system dimensions");
  detail::require_dims(spec.horizon >= 1, "condense: horizon must be positive");
  detail::require_dims(spec.q_mat.rows() == n && spec.q_mat.cols() == n, "condense: q_mat dimensions");
  detail::require_dims(spec.r_mat.rows() == m && spec.r_mat.cols() == m, "condense: r_mat dimensions");
  detail::require_dims(spec.p_mat.rows() == n && spec.p_mat.cols() == n, "condense: p_mat dimensions");
  detail::require_dims(spec.state_set.dim() == n || spec.state_set.empty(), "condense: state_set dimension");
  detail::require_dims(spec.terminal_set.dim() == n || spec.terminal_set.empty(), "condense: terminal_set dimension");
  detail::require_dims(spec.input_set.dim() == m || spec.input_set.empty(), "condense: input_set dimension");
  detail::require_dims(spec.state_set.c.rows() == spec.state_set.d.size() &&
                           spec.input_set.c.rows() == spec.input_set.d.size() &&
                           spec.terminal_set.c.rows() == spec.terminal_set.d.size(),
                       "condense: halfspace row counts");

  if (spec.prestabilize && !spec.input_feedback) {
    const Eigen::MatrixXd k = lqr_gain(spec.sys.a, spec.sys.b, spec.q_mat, spec.r_mat, spec.p_mat);
    return detail::condense_parametrized(prestabilize(spec, k));
  }
  return detail::condense_parametrized(spec);
}

/// lambda_max(H) / lambda_min(H) from a symmetric eigendecomposition.
inline double condition_number(const Eigen::MatrixXd& h_mat) {
  detail::require_dims(h_mat.rows() == h_mat.cols(), "condition_number: H must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetrized(h_mat), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw NotPositiveDefinite("condition_number: H is not positive definite");
  return hi / lo;
}

}  // namespace crmpc
