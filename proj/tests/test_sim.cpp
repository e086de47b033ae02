#include <gtest/gtest.h>

#include "crmpc/examples.hpp"
#include "crmpc/sim.hpp"
#include "crmpc/solvers.hpp"

namespace crmpc {
namespace {

using Eigen::VectorXd;

struct Fixture {
  MpcSpec spec;
  CondensedQp qp;
  CremPrecomp pre;

  explicit Fixture(ExampleId id)
      : spec(build_example(id)), qp(condense(spec)), pre(precompute(qp)) {}
};

const Fixture& mimo30() {
  static const Fixture f(ExampleId::kMimo30);
  return f;
}

TEST(SampleX0, FeasibleAndDeterministic) {
  const Fixture& f = mimo30();
  const auto xs = sample_x0(f.spec, f.qp, 42, 100);
  ASSERT_EQ(xs.size(), 100u);
  for (const VectorXd& x : xs) {
    EXPECT_TRUE(f.spec.state_set.contains(x));
    // Re-check with the other solver family.
    EXPECT_TRUE(solve_ipm(f.qp.instance(x)).optimal());
  }
  const auto again = sample_x0(f.spec, f.qp, 42, 100);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xs[i], again[i]);
  EXPECT_NE(sample_x0(f.spec, f.qp, 43, 1).front(), xs.front());
}

TEST(SampleX0, StallRaises) {
  const Fixture& f = mimo30();
  SampleOptions opts;
  opts.stall_draws = 5;
  opts.min_acceptance = 2.0;
  EXPECT_THROW(sample_x0(f.spec, f.qp, 1, 100, opts), SamplingStalled);
  EXPECT_THROW(sample_x0(f.spec, f.qp, 1, 0), DimensionMismatch);
}

TEST(Rollout, OriginConvergesImmediately) {
  const Fixture& f = mimo30();
  for (Mode mode : {Mode::kFull, Mode::kCr}) {
    const Trajectory t = rollout(f.qp, f.pre, VectorXd::Zero(10), mode, SolverKind::kActiveSet);
    EXPECT_EQ(t.terminated, Termination::kConverged);
    EXPECT_TRUE(t.steps.empty());
  }
}

TEST(Rollout, StatesFollowModel) {
  const Fixture& f = mimo30();
  const VectorXd x0 = sample_x0(f.spec, f.qp, 42, 1).front();
  const Trajectory t = rollout(f.qp, f.pre, x0, Mode::kCr, SolverKind::kActiveSet);
  ASSERT_EQ(t.terminated, Termination::kConverged);
  EXPECT_LE(t.x_final.norm(), 1e-3);
  for (std::size_t k = 0; k + 1 < t.steps.size(); ++k) {
    const VectorXd next = f.qp.plant_a * t.steps[k].x + f.qp.plant_b * t.steps[k].u;
    EXPECT_EQ(next, t.steps[k + 1].x);
  }
}

TEST(Rollout, StepCapFlagged) {
  const Fixture& f = mimo30();
  RolloutOptions o;
  o.step_cap = 3;
  const VectorXd x0 = sample_x0(f.spec, f.qp, 42, 1).front();
  const Trajectory t = rollout(f.qp, f.pre, x0, Mode::kFull, SolverKind::kActiveSet, o);
  EXPECT_EQ(t.terminated, Termination::kStepCap);
  EXPECT_EQ(t.steps.size(), 3u);
}

TEST(Rollout, FullAndCrAgree) {
  const Fixture& f = mimo30();
  RolloutOptions o;
  o.oracle = true;
  o.keep_removed = true;
  int removed = 0;
  for (const VectorXd& x0 : sample_x0(f.spec, f.qp, 42, 10)) {
    for (SolverKind s : {SolverKind::kActiveSet, SolverKind::kIpm}) {
      const Trajectory full = rollout(f.qp, f.pre, x0, Mode::kFull, s);
      const Trajectory cr = rollout(f.qp, f.pre, x0, Mode::kCr, s, o);
      ASSERT_EQ(full.steps.size(), cr.steps.size());
      for (std::size_t k = 0; k < cr.steps.size(); ++k) {
        EXPECT_LE((full.steps[k].x - cr.steps[k].x).cwiseAbs().maxCoeff(), 1e-5);
        removed += static_cast<int>(cr.steps[k].removed.size());
      }
      EXPECT_EQ(cr.removal_violations, 0);
      EXPECT_LE(cr.max_input_deviation, 1e-6);
    }
  }
  EXPECT_GT(removed, 0);
}

TEST(Rollout, RegulatedNormIgnoresOtherStates) {
  EXPECT_DOUBLE_EQ(regulated_norm(Eigen::Vector3d(3, 100, 4), {0, 2}), 5.0);
  EXPECT_DOUBLE_EQ(regulated_norm(Eigen::Vector2d(3, 4), {}), 5.0);
}

TEST(Rollout, CostDescendsOnInvertedPendulum) {
  const Fixture f(ExampleId::kInpe50);
  for (const VectorXd& x0 : sample_x0(f.spec, f.qp, 42, 5)) {
    const Trajectory t = rollout(f.qp, f.pre, x0, Mode::kCr, SolverKind::kActiveSet);
    ASSERT_EQ(t.terminated, Termination::kConverged);
    EXPECT_LE(max_descent_excess(t, f.qp), 1e-6);
  }
}

}  // namespace
}  // namespace crmpc
