#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "crmpc/errors.hpp"

namespace crmpc {

/// Discrete-time LTI system x(t+1) = a x(t) + b u(t).
struct LtiSystem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;

  int n() const { return static_cast<int>(a.rows()); }
  int m() const { return static_cast<int>(b.cols()); }
};

/// Polyhedron {z : c z <= d}.
struct HalfspaceSet {
  Eigen::MatrixXd c;
  Eigen::VectorXd d;

  int rows() const { return static_cast<int>(c.rows()); }
  int dim() const { return static_cast<int>(c.cols()); }
  bool empty() const { return c.rows() == 0; }

  /// Box lo <= z <= hi, upper-bound rows first.
  static HalfspaceSet box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    detail::require_dims(lo.size() == hi.size(), "box: bound sizes differ");
    const auto k = lo.size();
    HalfspaceSet s;
    s.c.resize(2 * k, k);
    s.c << Eigen::MatrixXd::Identity(k, k), -Eigen::MatrixXd::Identity(k, k);
    s.d.resize(2 * k);
    s.d << hi, -lo;
    return s;
  }

  static HalfspaceSet symmetric_box(int dim, double bound) {
    return box(Eigen::VectorXd::Constant(dim, -bound),
               Eigen::VectorXd::Constant(dim, bound));
  }

  bool contains(const Eigen::VectorXd& z, double tol = 0.0) const {
    if (empty()) return true;
    return ((c * z - d).array() <= tol).all();
  }
};

/// Linear-quadratic MPC problem over horizon N.
///
/// Stage cost x'Qx + u'Ru, terminal cost x(N)'Px(N), x(k) in state_set for
/// k = 1..N-1 (and k = 0 when include_step0_state_rows), x(N) in
/// terminal_set, u(k) in input_set.
struct MpcSpec {
  std::string name;
  LtiSystem sys;
  int horizon = 1;
  Eigen::MatrixXd q_mat;
  Eigen::MatrixXd r_mat;
  Eigen::MatrixXd p_mat;
  HalfspaceSet state_set;
  HalfspaceSet input_set;
  HalfspaceSet terminal_set;
  /// Request the LQR input reparametrization u = -Kx + c at condensing time.
  bool prestabilize = false;
  bool include_step0_state_rows = false;
  /// Offline elimination of redundant constraint rows after condensing.
  bool remove_redundant_rows = false;
  /// When false the origin may lie on the boundary of state_set.
  bool strict_state_interior = true;
  /// p_mat was produced by the Riccati solver (kept for serialization).
  bool terminal_from_dare = false;
  /// Coordinates entering the convergence test; empty means all of them.
  std::vector<int> regulated_states;
  /// Gain of an already applied reparametrization u = -Kx + c. When set,
  /// sys.a holds the closed-loop matrix a - bK.
  std::optional<Eigen::MatrixXd> input_feedback;

  int n() const { return sys.n(); }
  int m() const { return sys.m(); }
};

namespace detail {

inline bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

inline bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).norm() <= rel_tol * std::max(1.0, m.norm());
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace detail

inline double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// PBH test: every eigenvalue with |lambda| >= 1 must be controllable.
inline bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            double tol = 1e-9) {
  const auto n = a.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - tol) continue;
    Eigen::MatrixXcd pbh(n, n + b.cols());
    pbh << a.cast<std::complex<double>>() -
               lambda * Eigen::MatrixXcd::Identity(n, n),
        b.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= tol * std::max(1.0, sv(0))) return false;
  }
  return true;
}

/// Frobenius norm of P - (Q + A'PA - A'PB(R + B'PB)^-1 B'PA).
inline double dare_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& q_mat,
                            const Eigen::MatrixXd& r_mat,
                            const Eigen::MatrixXd& p_mat) {
  const Eigen::MatrixXd bt_p = b.transpose() * p_mat;
  const Eigen::MatrixXd s = r_mat + bt_p * b;
  const Eigen::MatrixXd rhs = q_mat + a.transpose() * p_mat * a -
                              (bt_p * a).transpose() * s.ldlt().solve(bt_p * a);
  return (p_mat - rhs).norm();
}

/// Solves the discrete-time algebraic Riccati equation by fixed-point
/// iteration from P = Q.
inline Eigen::MatrixXd dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& q_mat,
                            const Eigen::MatrixXd& r_mat,
                            int max_iterations = 100000) {
  const auto n = a.rows();
  const auto m = b.cols();
  detail::require_dims(a.cols() == n, "dare: a must be square");
  detail::require_dims(b.rows() == n, "dare: b rows must match a");
  detail::require_dims(q_mat.rows() == n && q_mat.cols() == n,
                       "dare: q_mat must be n x n");
  detail::require_dims(r_mat.rows() == m && r_mat.cols() == m,
                       "dare: r_mat must be m x m");
  if (Eigen::LLT<Eigen::MatrixXd>(r_mat).info() != Eigen::Success)
    throw NotPositiveDefinite("dare: r_mat is not positive definite");

  Eigen::MatrixXd p = q_mat;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd bt_p = b.transpose() * p;
    const Eigen::MatrixXd s = r_mat + bt_p * b;
    const Eigen::MatrixXd bt_pa = bt_p * a;
    Eigen::MatrixXd next = q_mat + a.transpose() * p * a -
                           bt_pa.transpose() * s.llt().solve(bt_pa);
    next = detail::symmetrized(next);
    const double step = (next - p).stableNorm();
    p = std::move(next);
    const double p_norm = p.stableNorm();
    if (!std::isfinite(p_norm) || !std::isfinite(step)) break;
    if (step <= 1e-12 * std::max(1.0, p_norm)) {
      if (dare_residual(a, b, q_mat, r_mat, p) <= 1e-9 * (1.0 + p_norm))
        return p;
    }
  }
  throw NonConvergence("dare: fixed-point iteration did not converge");
}

/// LQR gain K = (R + B'PB)^-1 B'PA; throws if a - bK is not Schur stable.
inline Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& q_mat,
                                const Eigen::MatrixXd& r_mat,
                                const Eigen::MatrixXd& p_mat) {
  detail::require_dims(a.rows() == a.cols() && b.rows() == a.rows(),
                       "lqr_gain: a/b dimensions");
  detail::require_dims(q_mat.rows() == a.rows() && p_mat.rows() == a.rows(),
                       "lqr_gain: q/p dimensions");
  detail::require_dims(r_mat.rows() == b.cols(), "lqr_gain: r dimensions");
  const Eigen::MatrixXd bt_p = b.transpose() * p_mat;
  Eigen::MatrixXd k = (r_mat + bt_p * b).llt().solve(bt_p * a);
  if (spectral_radius(a - b * k) >= 1.0 - 1e-9)
    throw UnstablePrestabilization("lqr_gain: closed loop is not stable");
  return k;
}

/// Returns one message per violated invariant; empty when the problem is well formed.
inline std::vector<std::string> validate_spec(const MpcSpec& spec) {
  std::vector<std::string> out;
  const auto n = spec.sys.a.rows();
  const auto m = spec.sys.b.cols();

  if (n < 1 || spec.sys.a.cols() != n) out.emplace_back("sys.a must be square n x n with n >= 1");
  if (spec.sys.b.rows() != n || m < 1) out.emplace_back("sys.b must be n x m with m >= 1");
  if (!spec.sys.a.allFinite() || !spec.sys.b.allFinite())
    out.emplace_back("sys contains non-finite entries");
  if (spec.horizon < 1) out.emplace_back("horizon must be positive");
  if (!out.empty()) return out;

  if (spec.q_mat.rows() != n || spec.q_mat.cols() != n ||
      !detail::is_symmetric(spec.q_mat) ||
      detail::min_eigenvalue(detail::symmetrized(spec.q_mat)) < -1e-10)
    out.emplace_back("q_mat not symmetric positive semidefinite");
  if (spec.r_mat.rows() != m || spec.r_mat.cols() != m ||
      !detail::is_symmetric(spec.r_mat) ||
      detail::min_eigenvalue(detail::symmetrized(spec.r_mat)) <= 0.0)
    out.emplace_back("r_mat not positive definite");
  if (spec.p_mat.rows() != n || spec.p_mat.cols() != n ||
      !detail::is_symmetric(spec.p_mat, 1e-9) ||
      detail::min_eigenvalue(detail::symmetrized(spec.p_mat)) < -1e-10)
    out.emplace_back("p_mat not symmetric positive semidefinite");

  auto check_set = [&](const HalfspaceSet& set, Eigen::Index dim,
                       const std::string& label, bool strict) {
    if (set.c.cols() != dim || set.c.rows() != set.d.size()) {
      out.push_back(label + " dimension mismatch");
      return;
    }
    if (set.rows() == 0) return;
    const bool ok = strict ? (set.d.array() > 0.0).all()
                           : (set.d.array() >= 0.0).all();
    if (!ok) out.push_back(label + " interior violation");
  };
  check_set(spec.state_set, n, "state_set", spec.strict_state_interior);
  check_set(spec.input_set, m, "input_set", true);
  check_set(spec.terminal_set, n, "terminal_set", false);

  if (spec.input_feedback) {
    const auto& k = *spec.input_feedback;
    if (k.rows() != m || k.cols() != n)
      out.emplace_back("input_feedback must be m x n");
  }
  for (int idx : spec.regulated_states)
    if (idx < 0 || idx >= n) out.emplace_back("regulated_states index out of range");

  if (spec.prestabilize && !spec.input_feedback &&
      !is_stabilizable(spec.sys.a, spec.sys.b))
    out.emplace_back("(a, b) not stabilizable");
  return out;
}

}  // namespace crmpc
