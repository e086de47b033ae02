#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crmpc/crem.hpp"
#include "crmpc/lp.hpp"

namespace crmpc {

enum class Mode { kFull, kCr };

inline std::string to_string(Mode m) { return m == Mode::kFull ? "Full" : "CR"; }

enum class Termination { kConverged, kStepCap, kInfeasible, kSolverFailure };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "Converged";
    case Termination::kStepCap: return "StepCap";
    case Termination::kInfeasible: return "Infeasible";
    case Termination::kSolverFailure: return "SolverFailure";
  }
  return "?";
}

struct SampleOptions {
  std::int64_t stall_draws = 1'000'000;
  double min_acceptance = 1e-3;
};

/// Uniform draws from the bounding box of the state set, accepted when the
/// full QP at the draw is feasible.
inline std::vector<Eigen::VectorXd> sample_x0(const MpcSpec& spec, const CondensedQp& qp,
                                              std::uint64_t seed, int count,
                                              const SampleOptions& opts = {}) {
  detail::require_dims(count >= 1, "sample_x0: count must be positive");
  const auto [lo, hi] = bounding_box(spec.state_set);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  std::int64_t draws = 0;
  Eigen::VectorXd x(spec.n());
  while (static_cast<int>(out.size()) < count) {
    for (int i = 0; i < spec.n(); ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    ++draws;
    if (spec.state_set.contains(x) && solve_active_set(qp.instance(x)).optimal()) out.push_back(x);
    if (draws == opts.stall_draws &&
        static_cast<double>(out.size()) < opts.min_acceptance * static_cast<double>(draws))
      throw SamplingStalled("sample_x0: acceptance rate below " +
                            std::to_string(opts.min_acceptance) + " after " +
                            std::to_string(draws) + " draws");
  }
  return out;
}

struct RolloutOptions {
  int step_cap = 1000;
  double converge_tol = 1e-3;
  /// Coordinates in the convergence norm; empty means all.
  std::vector<int> regulated_states;
  /// CR mode: also solve the full QP (untimed) and compare.
  bool oracle = false;
  bool keep_removed = false;
  CertifyOptions certify;
};

struct TrajStep {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double cost = 0.0;
  StepStats stats;
  std::vector<int> removed;
};

struct Trajectory {
  Eigen::VectorXd x0;
  std::vector<TrajStep> steps;
  Termination terminated = Termination::kStepCap;
  Eigen::VectorXd x_final;
  /// Oracle results (CR mode with oracle enabled).
  double max_input_deviation = 0.0;
  double max_sequence_deviation = 0.0;
  int removal_violations = 0;
  /// Steps where CR produced an input but the full QP was infeasible.
  int oracle_infeasible = 0;
};

inline double regulated_norm(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  if (idx.empty()) return x.norm();
  double s = 0.0;
  for (int i : idx) s += x(i) * x(i);
  return std::sqrt(s);
}

/// Closed-loop simulation from x0 until the regulated state norm drops to
/// converge_tol, the step cap is hit, or a QP fails.
inline Trajectory rollout(const CondensedQp& qp, const CremPrecomp& pre, const Eigen::VectorXd& x0,
                          Mode mode, SolverKind solver, const RolloutOptions& opts = {}) {
  Trajectory traj;
  traj.x0 = x0;
  Eigen::VectorXd x = x0;
  RemovalContext ctx;
  for (int step = 0;; ++step) {
    if (regulated_norm(x, opts.regulated_states) <= opts.converge_tol) {
      traj.terminated = Termination::kConverged;
      break;
    }
    if (step >= opts.step_cap) {
      traj.terminated = Termination::kStepCap;
      break;
    }
    StepOutput out;
    try {
      out = mode == Mode::kFull ? full_step(x, qp, solver)
                                : mpc_step(x, ctx, pre, qp, solver, opts.certify);
    } catch (const InfeasibleState&) {
      traj.terminated = Termination::kInfeasible;
      break;
    }
    TrajStep rec;
    rec.x = x;
    rec.u = out.u;
    rec.cost = out.cost;
    rec.stats = out.stats;
    if (out.stats.status != QpStatus::kOptimal) {
      traj.steps.push_back(std::move(rec));
      traj.terminated = Termination::kSolverFailure;
      break;
    }
    if (opts.oracle && mode == Mode::kCr) {
      StepOutput ref;
      try {
        ref = full_step(x, qp, solver);
      } catch (const InfeasibleState&) {
        // The reduced QP was solvable although the full QP is not.
        ++traj.oracle_infeasible;
        traj.removal_violations += static_cast<int>(out.removed.size());
        if (opts.keep_removed) rec.removed = std::move(out.removed);
        traj.steps.push_back(std::move(rec));
        traj.terminated = Termination::kInfeasible;
        break;
      }
      traj.max_input_deviation =
          std::max(traj.max_input_deviation, (ref.u - out.u).cwiseAbs().maxCoeff());
      traj.max_sequence_deviation =
          std::max(traj.max_sequence_deviation, (ref.u_seq - out.u_seq).cwiseAbs().maxCoeff() /
                                                    (1.0 + ref.u_seq.cwiseAbs().maxCoeff()));
      if (!out.removed.empty()) {
        const Eigen::VectorXd slack = qp.rhs(x) - qp.g_mat * ref.u_seq;
        for (int i : out.removed)
          if (!(slack(i) > 0.5 * opts.certify.margin_rel * (1.0 + std::abs(qp.w_vec(i)))))
            ++traj.removal_violations;
      }
    }
    if (opts.keep_removed) rec.removed = std::move(out.removed);
    traj.steps.push_back(std::move(rec));
    x = qp.plant_a * x + qp.plant_b * out.u;
  }
  traj.x_final = x;
  return traj;
}

/// Largest V*(x(t+1)) - V*(x(t)) + l(x(t), u(t)) along the trajectory.
inline double max_descent_excess(const Trajectory& traj, const CondensedQp& qp) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    const TrajStep& s = traj.steps[t];
    const double stage = s.x.dot(qp.stage_q * s.x) + s.u.dot(qp.stage_r * s.u);
    worst = std::max(worst, traj.steps[t + 1].cost - s.cost + stage);
  }
  return worst;
}

}  // namespace crmpc
