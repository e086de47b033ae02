#include <random>

#include <gtest/gtest.h>

#include "crmpc/solvers.hpp"
#include "support/brute_force.hpp"

namespace crmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::brute_force_qp;

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }
VectorXd vec1(double v) { return VectorXd::Constant(1, v); }

class BothSolvers : public ::testing::TestWithParam<SolverKind> {};

TEST_P(BothSolvers, ScalarActiveBound) {
  const QpInstance inst = make_qp_instance(scalar(1), vec1(-1), scalar(1), vec1(0.5));
  const QpResult res = solve_qp(inst, GetParam());
  ASSERT_TRUE(res.optimal());
  EXPECT_NEAR(res.u_star(0), 0.5, 1e-7);
  EXPECT_EQ(res.active_rows, std::vector<int>{0});
  EXPECT_NEAR(res.lambda(0), 0.5, 1e-6);
}

TEST_P(BothSolvers, ScalarInactiveBound) {
  const QpInstance inst = make_qp_instance(scalar(1), vec1(0), scalar(1), vec1(1));
  const QpResult res = solve_qp(inst, GetParam());
  ASSERT_TRUE(res.optimal());
  EXPECT_NEAR(res.u_star(0), 0.0, 1e-8);
  EXPECT_TRUE(res.active_rows.empty());
}

TEST_P(BothSolvers, TwoVariableCorner) {
  MatrixXd g(3, 2);
  g << 1, 0, 0, 1, 1, 1;
  const QpInstance inst = make_qp_instance(MatrixXd::Identity(2, 2), Eigen::Vector2d(-3, -3), g,
                                           Eigen::Vector3d(1, 1, 1.5));
  const QpResult res = solve_qp(inst, GetParam());
  ASSERT_TRUE(res.optimal());
  EXPECT_NEAR(res.u_star(0), 0.75, 1e-8);
  EXPECT_NEAR(res.u_star(1), 0.75, 1e-8);
  EXPECT_EQ(res.active_rows, std::vector<int>{2});
}

TEST_P(BothSolvers, DetectsInfeasibility) {
  MatrixXd g(2, 1);
  g << 1, -1;
  const QpInstance inst = make_qp_instance(scalar(1), vec1(0), g, Eigen::Vector2d(-1, -1));
  EXPECT_EQ(solve_qp(inst, GetParam()).status, QpStatus::kInfeasible);
}

TEST_P(BothSolvers, NoRowsGivesUnconstrainedOptimum) {
  const QpInstance inst = make_qp_instance(scalar(2), vec1(-2), MatrixXd(0, 1), VectorXd(0));
  const QpResult res = solve_qp(inst, GetParam());
  ASSERT_TRUE(res.optimal());
  EXPECT_DOUBLE_EQ(res.u_star(0), 1.0);
}

TEST_P(BothSolvers, MatchesBruteForceOnTinyProblems) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 3), rows(1, 6);
  std::uniform_real_distribution<double> ub(-0.5, 2.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng);
    const int q = rows(rng);
    const MatrixXd h = testing::random_spd(n, rng);
    const VectorXd f = testing::random_matrix(n, 1, rng);
    const MatrixXd g = testing::random_matrix(q, n, rng);
    VectorXd b(q);
    for (auto& v : b) v = ub(rng);
    const auto ref = brute_force_qp(h, f, g, b);
    const QpResult res = solve_qp(make_qp_instance(h, f, g, b), GetParam());
    if (!ref) {
      EXPECT_EQ(res.status, QpStatus::kInfeasible) << "trial " << trial;
      continue;
    }
    ++solved;
    ASSERT_TRUE(res.optimal()) << "trial " << trial << " " << to_string(res.status);
    EXPECT_LE((res.u_star - ref->u).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
  }
  EXPECT_GT(solved, 100);
}

TEST_P(BothSolvers, KktResidualsSmall) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd h = testing::random_spd(8, rng);
    const VectorXd f = testing::random_matrix(8, 1, rng);
    const MatrixXd g = testing::random_matrix(20, 8, rng);
    const VectorXd b = VectorXd::Constant(20, 0.5);
    const QpInstance inst = make_qp_instance(h, f, g, b);
    const QpResult res = solve_qp(inst, GetParam());
    ASSERT_TRUE(res.optimal());
    const KktResidual r = kkt_residual(inst, res);
    EXPECT_LE(r.primal_infeasibility, 1e-8);
    EXPECT_LE(r.stationarity, 1e-7);
    EXPECT_LE(r.complementarity, 1e-7);
    EXPECT_LE(r.dual_infeasibility, 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Qp, BothSolvers,
                         ::testing::Values(SolverKind::kActiveSet, SolverKind::kIpm),
                         [](const auto& info) { return to_string(info.param); });

TEST(ActiveSet, DualObjectiveNondecreasing) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd h = testing::random_spd(6, rng);
    const VectorXd f = testing::random_matrix(6, 1, rng);
    const MatrixXd g = testing::random_matrix(15, 6, rng);
    const VectorXd b = VectorXd::Constant(15, 0.2);
    const QpResult res = solve_active_set(make_qp_instance(h, f, g, b), {.record_trace = true});
    ASSERT_TRUE(res.optimal());
    for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
      EXPECT_GE(res.objective_trace[k], res.objective_trace[k - 1] - 1e-10);
    EXPECT_NEAR(res.objective_trace.back(), res.value, 1e-8 * (1.0 + std::abs(res.value)));
  }
}

TEST(Solvers, AgreeOnMediumProblems) {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> dim(5, 30);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = dim(rng);
    const int q = 4 * n;
    const MatrixXd h = testing::random_spd(n, rng);
    const VectorXd f = 3.0 * testing::random_matrix(n, 1, rng);
    const MatrixXd g = testing::random_matrix(q, n, rng);
    const VectorXd b = VectorXd::Constant(q, 1.0);
    const QpInstance inst = make_qp_instance(h, f, g, b);
    const QpResult as = solve_active_set(inst);
    const QpResult ip = solve_ipm(inst);
    ASSERT_TRUE(as.optimal());
    ASSERT_TRUE(ip.optimal());
    EXPECT_LE((as.u_star - ip.u_star).cwiseAbs().maxCoeff(),
              1e-6 * (1.0 + as.u_star.cwiseAbs().maxCoeff()))
        << "trial " << trial;
  }
}

TEST(Qp, RejectsIndefiniteHessian) {
  EXPECT_THROW(make_qp_instance(scalar(-1), vec1(0), scalar(1), vec1(1)), NotPositiveDefinite);
}

TEST(Qp, RejectsMismatchedRows) {
  EXPECT_THROW(make_qp_instance(scalar(1), vec1(0), scalar(1), VectorXd(2)), DimensionMismatch);
}

}  // namespace
}  // namespace crmpc
