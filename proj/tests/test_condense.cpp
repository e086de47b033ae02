#include <random>

#include <gtest/gtest.h>

#include "crmpc/condense.hpp"
#include "crmpc/examples.hpp"

namespace crmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

MpcSpec scalar_spec() {
  MpcSpec spec;
  spec.sys = {scalar(1), scalar(1)};
  spec.horizon = 1;
  spec.q_mat = spec.r_mat = spec.p_mat = scalar(1);
  spec.state_set = spec.terminal_set = HalfspaceSet::symmetric_box(1, 5.0);
  spec.input_set = HalfspaceSet::symmetric_box(1, 1.0);
  return spec;
}

// Stage-plus-terminal cost of the trajectory driven by the plant inputs.
double rollout_cost(const MpcSpec& spec, const CondensedQp& qp, VectorXd x, const VectorXd& u_seq,
                    std::vector<VectorXd>* states = nullptr, std::vector<VectorXd>* inputs = nullptr) {
  const int m = spec.m();
  double cost = 0.0;
  for (int k = 0; k < spec.horizon; ++k) {
    VectorXd u = u_seq.segment(k * m, m);
    if (qp.k_gain) u -= (*qp.k_gain) * x;
    if (states) states->push_back(x);
    if (inputs) inputs->push_back(u);
    cost += x.dot(spec.q_mat * x) + u.dot(spec.r_mat * u);
    x = qp.plant_a * x + qp.plant_b * u;
  }
  if (states) states->push_back(x);
  return cost + x.dot(spec.p_mat * x);
}

TEST(Condense, ScalarHandCondensing) {
  // x^2 + u^2 + (x + u)^2 = 1/2 (4) x^2 + 2 u x + 1/2 (4) u^2.
  const CondensedQp qp = condense(scalar_spec());
  EXPECT_DOUBLE_EQ(qp.h_mat(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(qp.f_mat(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(qp.y_mat(0, 0), 4.0);
  ASSERT_EQ(qp.rows(), 4);
  EXPECT_EQ(qp.row_tags[0].kind, RowKind::kInput);
  EXPECT_EQ(qp.row_tags[2].kind, RowKind::kTerminal);
  EXPECT_EQ(qp.row_tags[2].step, 1);
}

TEST(Condense, RowCountsMatchTable) {
  struct Row { ExampleId id; int q, vars; };
  for (const Row& r : {Row{ExampleId::kMimo30, 780, 90}, Row{ExampleId::kMimo75, 1950, 225},
                       Row{ExampleId::kAcc25, 258, 25}, Row{ExampleId::kInpe50, 500, 50},
                       Row{ExampleId::kComa40, 1200, 120}}) {
    const CondensedQp qp = condense(build_example(r.id));
    EXPECT_EQ(qp.rows(), r.q) << to_string(r.id);
    EXPECT_EQ(qp.vars(), r.vars) << to_string(r.id);
    EXPECT_EQ(qp.g_mat.rows(), qp.e_mat.rows());
    EXPECT_EQ(static_cast<int>(qp.row_tags.size()), qp.rows());
  }
}

TEST(Condense, RowOrderingByStep) {
  const CondensedQp qp = condense(build_example(ExampleId::kAcc25));
  EXPECT_EQ(qp.row_tags.front().kind, RowKind::kStep0State);
  EXPECT_TRUE(qp.g_mat.topRows(8).isZero());
  EXPECT_EQ(qp.row_tags[8].kind, RowKind::kInput);
  EXPECT_EQ(qp.row_tags[10].kind, RowKind::kState);
  EXPECT_EQ(qp.row_tags[10].step, 1);
  EXPECT_EQ(qp.row_tags.back().kind, RowKind::kTerminal);
  for (std::size_t i = 1; i < qp.row_tags.size(); ++i)
    EXPECT_LE(qp.row_tags[i - 1].step, qp.row_tags[i].step);
}

TEST(Condense, HessianSymmetricAndOriginFeasible) {
  for (ExampleId id : kAllExamples) {
    if (id == ExampleId::kMimoRed30) continue;
    const MpcSpec spec = build_example(id);
    const CondensedQp qp = condense(spec);
    EXPECT_LE((qp.h_mat - qp.h_mat.transpose()).norm(), 1e-10 * qp.h_mat.norm());
    if (spec.strict_state_interior)
      EXPECT_GT(qp.w_vec.minCoeff(), 0.0) << to_string(id);
    else
      EXPECT_GE(qp.w_vec.minCoeff(), 0.0) << to_string(id);
  }
}

TEST(Condense, ConditionNumbers) {
  EXPECT_NEAR(condition_number(condense(build_example(ExampleId::kMimo30)).h_mat), 2.51, 0.05);
  EXPECT_NEAR(condition_number(condense(build_example(ExampleId::kInpe50)).h_mat), 1.00, 0.05);
  EXPECT_NEAR(condition_number(condense(build_example(ExampleId::kComa40)).h_mat), 1.47, 0.05);
  EXPECT_NEAR(condition_number(condense(build_example(ExampleId::kAcc25)).h_mat), 4930.85,
              0.10 * 4930.85);
}

TEST(Condense, ConditionNumberBasics) {
  EXPECT_DOUBLE_EQ(condition_number(MatrixXd::Identity(5, 5)), 1.0);
  EXPECT_NEAR(condition_number(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix()), 4.0, 1e-12);
  EXPECT_THROW(condition_number(Eigen::Vector2d(1, -1).asDiagonal().toDenseMatrix()),
               NotPositiveDefinite);
}

TEST(Condense, PrestabilizedLinearTermVanishes) {
  const CondensedQp qp = condense(build_example(ExampleId::kMimo30));
  ASSERT_TRUE(qp.k_gain.has_value());
  EXPECT_LT(qp.f_mat.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Condense, CostEquivalenceOnRandomSamples) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (ExampleId id : kAllExamples) {
    if (id == ExampleId::kMimoRed30) continue;
    const MpcSpec spec = build_example(id);
    const CondensedQp qp = condense(spec);
    for (int s = 0; s < 100; ++s) {
      VectorXd x(spec.n()), u(qp.vars());
      for (auto& v : x) v = nd(rng);
      for (auto& v : u) v = 0.3 * nd(rng);
      const double ref = rollout_cost(spec, qp, x, u);
      EXPECT_NEAR(qp.objective(x, u), ref, 1e-8 * std::max(1.0, std::abs(ref))) << to_string(id);
    }
  }
}

TEST(Condense, ConstraintEquivalenceOnRandomSamples) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (ExampleId id : {ExampleId::kMimo30, ExampleId::kAcc25, ExampleId::kInpe50}) {
    const MpcSpec spec = build_example(id);
    const CondensedQp qp = condense(spec);
    for (int s = 0; s < 100; ++s) {
      VectorXd x(spec.n()), u(qp.vars());
      for (auto& v : x) v = 2.0 * nd(rng);
      for (auto& v : u) v = 0.2 * nd(rng);
      std::vector<VectorXd> states, inputs;
      rollout_cost(spec, qp, x, u, &states, &inputs);
      bool stage_ok = true;
      for (int k = 0; k < spec.horizon; ++k) {
        if (k > 0 || spec.include_step0_state_rows)
          stage_ok &= spec.state_set.contains(states[static_cast<std::size_t>(k)], 1e-10);
        stage_ok &= spec.input_set.contains(inputs[static_cast<std::size_t>(k)], 1e-10);
      }
      stage_ok &= spec.terminal_set.contains(states.back(), 1e-10);
      const bool qp_ok = ((qp.g_mat * u - qp.rhs(x)).array() <= 1e-10).all();
      EXPECT_EQ(stage_ok, qp_ok) << to_string(id);
    }
  }
}

TEST(Prestabilize, ZeroGainLeavesDynamics) {
  const MpcSpec spec = scalar_spec();
  const MpcSpec out = prestabilize(spec, MatrixXd::Zero(1, 1));
  EXPECT_EQ(out.sys.a, spec.sys.a);
}

TEST(Prestabilize, ScalarClosedLoop) {
  const MpcSpec out = prestabilize(scalar_spec(), scalar(0.618034));
  EXPECT_NEAR(out.sys.a(0, 0), 0.381966, 1e-12);
  ASSERT_TRUE(out.input_feedback.has_value());
}

TEST(Prestabilize, RejectsDestabilizingGain) {
  EXPECT_THROW(prestabilize(scalar_spec(), scalar(-1.0)), UnstablePrestabilization);
}

TEST(Prestabilize, SameOptimalInputs) {
  // Same problem with and without reparametrization: equal optimal cost.
  MpcSpec spec = build_example(ExampleId::kInpe50);
  spec.horizon = 5;
  const CondensedQp pre = condense(spec);
  spec.prestabilize = false;
  const CondensedQp raw = condense(spec);
  VectorXd x(4);
  x << 0.1, -0.05, 0.2, 0.0;
  const VectorXd u_pre = solve_unconstrained(*pre.hessian, pre.f_mat * x);
  const VectorXd u_raw = solve_unconstrained(*raw.hessian, raw.f_mat * x);
  EXPECT_NEAR(pre.objective(x, u_pre), raw.objective(x, u_raw), 1e-9);
  EXPECT_NEAR((pre.first_input(x, u_pre) - raw.first_input(x, u_raw)).norm(), 0.0, 1e-9);
}

TEST(Condense, RejectsMismatchedWeights) {
  MpcSpec spec = scalar_spec();
  spec.q_mat = MatrixXd::Identity(2, 2);
  EXPECT_THROW(condense(spec), DimensionMismatch);
}

}  // namespace
}  // namespace crmpc
