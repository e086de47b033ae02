// Command-line front end: bench, inspect, reduce, verify, export.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crmpc/crmpc.hpp"

namespace {

using namespace crmpc;

struct TableTarget {
  int q;
  int mn;
  std::optional<double> kappa;
};

TableTarget target_of(ExampleId id) {
  switch (id) {
    case ExampleId::kMimo30: return {780, 90, 2.51};
    case ExampleId::kMimo75: return {1950, 225, std::nullopt};
    case ExampleId::kMimoRed30: return {556, 90, std::nullopt};
    case ExampleId::kAcc25: return {258, 25, 4930.85};
    case ExampleId::kInpe50: return {500, 50, 1.00};
    case ExampleId::kComa40: return {1200, 120, 1.47};
  }
  return {0, 0, std::nullopt};
}

const CLI::Validator kExampleName(
    [](std::string& s) -> std::string {
      return parse_example(s) ? "" : "unknown example '" + s + "'";
    },
    "EXAMPLE");

ExampleId example_of(const std::string& s) { return *parse_example(s); }

std::vector<SolverKind> solvers_of(const std::string& s) {
  if (s == "ActiveSet" || s == "activeset") return {SolverKind::kActiveSet};
  if (s == "Ipm" || s == "ipm") return {SolverKind::kIpm};
  return {SolverKind::kActiveSet, SolverKind::kIpm};
}

std::vector<Mode> modes_of(const std::string& s) {
  if (s == "Full" || s == "full") return {Mode::kFull};
  if (s == "CR" || s == "cr") return {Mode::kCr};
  return {Mode::kFull, Mode::kCr};
}

int cmd_inspect(const std::string& name) {
  const ExampleId id = example_of(name);
  const MpcSpec spec = build_example(id);
  const CondensedQp qp = condense_with_reduction(spec);
  const TableTarget t = target_of(id);
  std::cout << to_string(id) << ": n=" << spec.n() << " m=" << spec.m() << " N=" << spec.horizon
            << " mN=" << qp.vars() << " q=" << qp.rows() << " (target q=" << t.q << ")\n";
  std::cout << "kappa(H)=" << std::setprecision(6) << condition_number(qp.h_mat);
  if (t.kappa) std::cout << " (target " << *t.kappa << ")";
  std::cout << "\nprestabilized=" << (qp.k_gain ? "yes" : "no") << "\n";
  return 0;
}

int cmd_reduce(const std::string& name, const std::string& report_path) {
  const ExampleId id = example_of(name);
  MpcSpec spec = build_example(id);
  spec.remove_redundant_rows = false;
  const CondensedQp qp = condense(spec);
  const RedundancyResult red = remove_redundant(qp);
  std::cout << red.report.rows_before << " -> " << red.report.rows_after << "\n";
  if (!red.report.warnings.empty())
    std::cerr << red.report.warnings.size() << " rows kept after LP failures\n";
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    if (!f) throw IoFailure("cannot write " + report_path);
    write_report(f, qp, red.report);
  }
  return 0;
}

int cmd_verify(const std::vector<std::string>& names, const std::string& solver, int count,
               std::uint64_t seed) {
  int bad = 0;
  for (const std::string& name : names) {
    const ExampleId id = example_of(name);
    const MpcSpec spec = build_example(id);
    const CondensedQp qp = condense_with_reduction(spec);
    const CremPrecomp pre = precompute(qp);
    const auto x0s = sample_x0(spec, qp, seed, count);
    RolloutOptions o;
    o.regulated_states = spec.regulated_states;
    o.oracle = true;
    for (SolverKind s : solvers_of(solver)) {
      int violations = 0, qps = 0, fallbacks = 0;
      double dev = 0.0;
      for (const auto& x0 : x0s) {
        const Trajectory t = rollout(qp, pre, x0, Mode::kCr, s, o);
        violations += t.removal_violations;
        dev = std::max(dev, t.max_input_deviation);
        qps += static_cast<int>(t.steps.size());
        for (const TrajStep& st : t.steps) fallbacks += st.stats.fallback ? 1 : 0;
      }
      const bool ok = violations == 0 && dev <= 1e-6;
      bad += ok ? 0 : 1;
      std::cout << (ok ? "PASS " : "FAIL ") << to_string(id) << "/" << to_string(s) << ": " << qps
                << " QPs, removal violations=" << violations << ", max input deviation=" << dev
                << ", fallbacks=" << fallbacks << "\n";
    }
  }
  return bad == 0 ? 0 : 1;
}

int cmd_bench(CampaignConfig cfg, const std::string& out_dir) {
  cfg.log = [](const std::string& s) { std::cerr << s << "\n"; };
  const CampaignResult res = run_campaign(cfg);
  const OutputFiles files = emit_outputs(res.records, out_dir, res.warnings);
  for (const CaseDiagnostics& d : res.diagnostics)
    if (d.mode == "CR" && (d.step_count_mismatches > 0 || d.max_state_gap > 1e-5))
      std::cerr << "warning: " << d.example << "/" << d.solver
                << " CR trajectories differ from Full (gap " << d.max_state_gap << ")\n";
  std::ifstream summary(files.summary);
  std::cout << summary.rdbuf();
  std::cout << "wrote " << files.cdf_csv.size() << " CDF files and " << files.plots.size()
            << " plots to " << out_dir << "\n";
  return 0;
}

int cmd_export(const std::string& name, bool condensed, const std::string& path) {
  const MpcSpec spec = build_example(example_of(name));
  const Json j = condensed ? to_json(condense_with_reduction(spec)) : to_json(spec);
  if (path.empty() || path == "-") {
    std::cout << j.dump(1) << "\n";
    return 0;
  }
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot write " + path);
  f << j.dump(1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear MPC with online constraint removal"};
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "Timing campaign, Full vs CR");
  std::vector<std::string> bench_examples;
  std::string bench_solver = "all", bench_mode = "both";
  CampaignConfig cfg;
  const char* env_out = std::getenv("CRMPC_OUT_DIR");
  std::string out_dir = env_out && *env_out ? env_out : "bench_out";
  bench->add_option("--example", bench_examples, "Examples (default: all six)")->check(kExampleName);
  bench->add_option("--solver", bench_solver, "ActiveSet, Ipm or all")
      ->check(CLI::IsMember({"ActiveSet", "activeset", "Ipm", "ipm", "all"}));
  bench->add_option("--mode", bench_mode, "Full, CR or both")
      ->check(CLI::IsMember({"Full", "full", "CR", "cr", "both"}));
  bench->add_option("--x0-count", cfg.x0_count, "Initial states per example")->check(CLI::PositiveNumber);
  bench->add_option("--seed", cfg.seed, "Sampling seed");
  bench->add_option("--out", out_dir, "Output directory (default: $CRMPC_OUT_DIR or bench_out)");
  bench->add_flag("--full-scale", cfg.full_scale, "Use the full-scale initial-state counts");
  bench->add_flag("--oracle", cfg.oracle, "Also check every CR step against the full QP");
  bench->add_option("--warmup", cfg.warmup, "Untimed QPs before each case")->check(CLI::NonNegativeNumber);
  bench->add_option("--step-cap", cfg.step_cap, "Steps per trajectory")->check(CLI::PositiveNumber);

  auto* inspect = app.add_subcommand("inspect", "Print dimensions, q and conditioning");
  std::string inspect_name;
  inspect->add_option("example", inspect_name)->required()->check(kExampleName);

  auto* reduce = app.add_subcommand("reduce", "Remove redundant constraint rows");
  std::string reduce_name, report_path;
  reduce->add_option("example", reduce_name)->required()->check(kExampleName);
  reduce->add_option("--report", report_path, "Write the removed rows to this file");

  auto* verify = app.add_subcommand("verify", "Check CR steps against full solves");
  std::vector<std::string> verify_examples;
  std::string verify_solver = "all";
  int verify_count = 100;
  std::uint64_t verify_seed = 42;
  verify->add_option("--example", verify_examples, "Examples (default: all six)")->check(kExampleName);
  verify->add_option("--solver", verify_solver)->check(CLI::IsMember({"ActiveSet", "activeset", "Ipm", "ipm", "all"}));
  verify->add_option("--x0-count", verify_count)->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed);

  auto* exp = app.add_subcommand("export", "Write an example as JSON");
  std::string export_name, export_path;
  bool export_condensed = false;
  exp->add_option("example", export_name)->required()->check(kExampleName);
  exp->add_option("--out", export_path, "Output file (default: stdout)");
  exp->add_flag("--condensed", export_condensed, "Export the condensed QP instead of the problem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto all_names = [] {
    std::vector<std::string> v;
    for (ExampleId id : kAllExamples) v.push_back(to_string(id));
    return v;
  };

  try {
    if (*bench) {
      if (!bench_examples.empty()) {
        cfg.examples.clear();
        for (const auto& n : bench_examples) cfg.examples.push_back(example_of(n));
      }
      cfg.solvers = solvers_of(bench_solver);
      cfg.modes = modes_of(bench_mode);
      return cmd_bench(cfg, out_dir);
    }
    if (*inspect) return cmd_inspect(inspect_name);
    if (*reduce) return cmd_reduce(reduce_name, report_path);
    if (*verify)
      return cmd_verify(verify_examples.empty() ? all_names() : verify_examples, verify_solver,
                        verify_count, verify_seed);
    if (*exp) return cmd_export(export_name, export_condensed, export_path);
  } catch (const crmpc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
