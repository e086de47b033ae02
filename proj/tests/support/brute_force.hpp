#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace crmpc::testing {

struct BruteForceResult {
  Eigen::VectorXd u;
  double value = 0.0;
};

// Enumerates every working set of at most n rows, solves the equality
// constrained problem and keeps the best primal feasible candidate.
inline std::optional<BruteForceResult> brute_force_qp(const Eigen::MatrixXd& h,
                                                      const Eigen::VectorXd& f,
                                                      const Eigen::MatrixXd& g,
                                                      const Eigen::VectorXd& b,
                                                      double feas_tol = 1e-9) {
  const int n = static_cast<int>(h.rows());
  const int q = static_cast<int>(g.rows());
  std::optional<BruteForceResult> best;
  for (unsigned mask = 0; mask < (1u << q); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < q; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    const int k = static_cast<int>(rows.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = h;
    rhs.head(n) = -f;
    for (int j = 0; j < k; ++j) {
      kkt.block(0, n + j, n, 1) = g.row(rows[j]).transpose();
      kkt.block(n + j, 0, 1, n) = g.row(rows[j]);
      rhs(n + j) = b(rows[j]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd u = sol.head(n);
    if (((g * u - b).array() > feas_tol * (1.0 + b.cwiseAbs().array())).any()) continue;
    const double value = 0.5 * u.dot(h * u) + f.dot(u);
    if (!best || value < best->value) best = BruteForceResult{u, value};
  }
  return best;
}

// Random strictly convex QP generator: H = M M' + 0.1 I.
template <class Rng>
Eigen::MatrixXd random_spd(int n, Rng& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, n);
  for (auto& v : m.reshaped()) v = nd(rng);
  return m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

template <class Rng>
Eigen::MatrixXd random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (auto& v : m.reshaped()) v = nd(rng);
  return m;
}

}  // namespace crmpc::testing
