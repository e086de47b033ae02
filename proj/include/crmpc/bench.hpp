#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "crmpc/examples.hpp"
#include "crmpc/redundancy.hpp"
#include "crmpc/sim.hpp"

namespace crmpc {

/// One timed control step.
struct QpRecord {
  std::string example;
  std::string solver;
  std::string mode;
  int traj = 0;
  int step = 0;
  int kept_rows = 0;
  bool all_removed = false;
  std::int64_t certify_ns = 0;
  std::int64_t setup_ns = 0;
  std::int64_t solve_ns = 0;
  std::int64_t total_ns = 0;
  int iters = 0;
  std::string status;
};

inline constexpr const char* kRecordsHeader =
    "example,solver,mode,traj,step,kept_rows,all_removed,certify_ns,setup_ns,solve_ns,total_ns,iters,"
    "status";

/// Initial-state counts for full-scale campaigns.
inline int full_scale_count(ExampleId id) {
  switch (id) {
    case ExampleId::kMimo30: return 4935;
    case ExampleId::kMimo75: return 5046;
    case ExampleId::kMimoRed30: return 4708;
    case ExampleId::kAcc25: return 6159;
    case ExampleId::kInpe50: return 6764;
    case ExampleId::kComa40: return 8028;
  }
  return 0;
}

struct CampaignConfig {
  std::vector<ExampleId> examples{kAllExamples.begin(), kAllExamples.end()};
  std::vector<SolverKind> solvers{SolverKind::kActiveSet, SolverKind::kIpm};
  std::vector<Mode> modes{Mode::kFull, Mode::kCr};
  std::uint64_t seed = 42;
  int x0_count = 100;
  /// Use full_scale_count instead of x0_count.
  bool full_scale = false;
  /// Untimed QPs before each timed case.
  int warmup = 100;
  int step_cap = 1000;
  /// Compare every CR step against an untimed full solve.
  bool oracle = false;
  std::function<void(const std::string&)> log;
};

/// Correctness bookkeeping for one (example, solver, mode) case.
struct CaseDiagnostics {
  std::string example;
  std::string solver;
  std::string mode;
  int trajectories = 0;
  std::map<std::string, int> terminations;
  int qps = 0;
  int fallbacks = 0;
  int removal_violations = 0;
  int oracle_infeasible = 0;
  double max_input_deviation = 0.0;
  /// Max over converged trajectories of V*(x+) - V*(x) + l(x, u).
  double max_descent_excess = -std::numeric_limits<double>::infinity();
  /// CR only: largest per-step state gap to the Full run from the same x0.
  double max_state_gap = 0.0;
  int step_count_mismatches = 0;
};

struct CampaignResult {
  std::vector<QpRecord> records;
  std::vector<CaseDiagnostics> diagnostics;
  std::vector<std::string> warnings;
};

namespace detail {

inline void run_warmup(const CondensedQp& qp, const CremPrecomp& pre,
                       const std::vector<Eigen::VectorXd>& x0s, Mode mode, SolverKind solver,
                       RolloutOptions opts, int budget) {
  for (std::size_t i = 0; budget > 0 && !x0s.empty(); ++i) {
    opts.step_cap = budget;
    const Trajectory t = rollout(qp, pre, x0s[i % x0s.size()], mode, solver, opts);
    budget -= std::max<int>(1, static_cast<int>(t.steps.size()));
  }
}

}  // namespace detail

/// Runs every (example, solver, mode) case over one shared x0 set per
/// example. Strictly sequential.
inline CampaignResult run_campaign(const CampaignConfig& cfg) {
  CampaignResult out;
  auto log = [&](const std::string& s) {
    if (cfg.log) cfg.log(s);
  };
  for (ExampleId id : cfg.examples) {
    const MpcSpec spec = build_example(id);
    const CondensedQp qp = condense_with_reduction(spec);
    const CremPrecomp pre = precompute(qp);
    const int count = cfg.full_scale ? full_scale_count(id) : cfg.x0_count;
    const std::vector<Eigen::VectorXd> x0s = sample_x0(spec, qp, cfg.seed, count);
    const std::string ex = to_string(id);
    log(ex + ": q=" + std::to_string(qp.rows()) + ", " + std::to_string(count) + " x0");

    RolloutOptions ropts;
    ropts.step_cap = cfg.step_cap;
    ropts.regulated_states = spec.regulated_states;

    for (SolverKind solver : cfg.solvers) {
      std::vector<std::vector<Eigen::VectorXd>> full_states;
      for (Mode mode : cfg.modes) {
        CaseDiagnostics diag;
        diag.example = ex;
        diag.solver = to_string(solver);
        diag.mode = to_string(mode);
        RolloutOptions o = ropts;
        o.oracle = cfg.oracle && mode == Mode::kCr;
        detail::run_warmup(qp, pre, x0s, mode, solver, ropts, cfg.warmup);
        for (std::size_t k = 0; k < x0s.size(); ++k) {
          const Trajectory t = rollout(qp, pre, x0s[k], mode, solver, o);
          ++diag.trajectories;
          ++diag.terminations[to_string(t.terminated)];
          diag.removal_violations += t.removal_violations;
          diag.oracle_infeasible += t.oracle_infeasible;
          diag.max_input_deviation = std::max(diag.max_input_deviation, t.max_input_deviation);
          if (t.terminated == Termination::kConverged && t.steps.size() > 1)
            diag.max_descent_excess = std::max(diag.max_descent_excess, max_descent_excess(t, qp));

          if (mode == Mode::kFull) {
            full_states.emplace_back();
            for (const TrajStep& s : t.steps) full_states.back().push_back(s.x);
          } else if (k < full_states.size()) {
            const auto& ref = full_states[k];
            if (ref.size() != t.steps.size()) ++diag.step_count_mismatches;
            for (std::size_t s = 0; s < std::min(ref.size(), t.steps.size()); ++s)
              diag.max_state_gap =
                  std::max(diag.max_state_gap, (ref[s] - t.steps[s].x).cwiseAbs().maxCoeff());
          }

          if (t.terminated == Termination::kStepCap) {
            out.warnings.push_back(ex + "/" + diag.solver + "/" + diag.mode + " traj " +
                                   std::to_string(k) + ": step cap hit, excluded from timing");
            continue;
          }
          for (std::size_t s = 0; s < t.steps.size(); ++s) {
            const StepStats& st = t.steps[s].stats;
            diag.fallbacks += st.fallback ? 1 : 0;
            ++diag.qps;
            out.records.push_back({ex, diag.solver, diag.mode, static_cast<int>(k),
                                   static_cast<int>(s), st.kept_rows, st.all_removed,
                                   st.certify_ns, st.setup_ns, st.solve_ns, st.total_ns(),
                                   st.iterations, to_string(st.status)});
          }
        }
        log(ex + "/" + diag.solver + "/" + diag.mode + ": " + std::to_string(diag.qps) + " QPs");
        out.diagnostics.push_back(std::move(diag));
      }
    }
  }
  return out;
}

/// Empirical CDF of total step times.
struct CdfSeries {
  /// Sorted ascending.
  std::vector<std::int64_t> times;

  std::size_t size() const { return times.size(); }

  /// Fraction of records with time <= t.
  double operator()(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t,
                                     [](double v, std::int64_t s) { return v < static_cast<double>(s); });
    return static_cast<double>(it - times.begin()) / static_cast<double>(times.size());
  }

  /// Time at which the CDF reaches h, interpolating linearly between the
  /// points (t_i, (i+1)/n).
  double time_at(double h) const {
    const double n = static_cast<double>(times.size());
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(h * n - 1e-12) - 1.0));
    const std::size_t i = std::min(idx, times.size() - 1);
    const double hi = static_cast<double>(i + 1) / n;
    if (i == 0 || hi <= h) return static_cast<double>(times[i]);
    const double lo = static_cast<double>(i) / n;
    const double t0 = static_cast<double>(times[i - 1]);
    const double t1 = static_cast<double>(times[i]);
    return t0 + (t1 - t0) * (h - lo) / (hi - lo);
  }

  bool operator==(const CdfSeries&) const = default;
};

inline CdfSeries compute_cdf(std::vector<std::int64_t> times) {
  if (times.empty()) throw EmptySelection("compute_cdf: no records selected");
  std::sort(times.begin(), times.end());
  return {std::move(times)};
}

inline CdfSeries compute_cdf(const std::vector<QpRecord>& records, const std::string& example,
                             const std::string& solver, const std::string& mode) {
  std::vector<std::int64_t> t;
  for (const QpRecord& r : records)
    if (r.example == example && r.solver == solver && r.mode == mode) t.push_back(r.total_ns);
  if (t.empty())
    throw EmptySelection("compute_cdf: no records for " + example + "/" + solver + "/" + mode);
  return compute_cdf(std::move(t));
}

/// True when cr(t) >= full(t) at every record time of either series.
inline bool left_dominates(const CdfSeries& cr, const CdfSeries& full) {
  for (const auto* s : {&cr, &full})
    for (std::int64_t t : s->times)
      if (cr(static_cast<double>(t)) < full(static_cast<double>(t))) return false;
  return true;
}

/// Per (example, solver) comparison of the two modes.
struct CaseSummary {
  std::string example;
  std::string solver;
  std::size_t records_full = 0;
  std::size_t records_cr = 0;
  double mean_full_ns = 0.0;
  double mean_cr_ns = 0.0;
  /// mean CR - mean Full.
  double mean_diff_ns = 0.0;
  /// 100 (mean CR - mean Full) / mean Full.
  double mean_diff_pct = 0.0;
  /// Share of CR records faster than the fastest Full record.
  double frac_faster_pct = 0.0;
  double t70_full_ns = 0.0;
  double t70_cr_ns = 0.0;
  /// Share of CR records with every row removed.
  double detected_pct = 0.0;
  bool cr_left_dominant = false;
};

inline constexpr const char* kSummaryHeader =
    "example,solver,records_full,records_cr,mean_full_ns,mean_cr_ns,mean_diff_ns,mean_diff_pct,"
    "frac_faster_pct,t70_full_ns,t70_cr_ns,detected_pct,cr_left_dominant";

inline std::vector<CaseSummary> summarize(const std::vector<QpRecord>& records) {
  if (records.empty()) throw EmptySelection("summarize: no records");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const QpRecord& r : records) {
    const std::pair<std::string, std::string> key{r.example, r.solver};
    if (std::find(pairs.begin(), pairs.end(), key) == pairs.end()) pairs.push_back(key);
  }
  std::vector<CaseSummary> out;
  for (const auto& [ex, solver] : pairs) {
    const CdfSeries full = compute_cdf(records, ex, solver, to_string(Mode::kFull));
    const CdfSeries cr = compute_cdf(records, ex, solver, to_string(Mode::kCr));
    CaseSummary s;
    s.example = ex;
    s.solver = solver;
    s.records_full = full.size();
    s.records_cr = cr.size();
    auto mean = [](const CdfSeries& c) {
      long double sum = 0;
      for (std::int64_t t : c.times) sum += t;
      return static_cast<double>(sum / c.times.size());
    };
    s.mean_full_ns = mean(full);
    s.mean_cr_ns = mean(cr);
    s.mean_diff_ns = s.mean_cr_ns - s.mean_full_ns;
    s.mean_diff_pct = s.mean_full_ns > 0.0 ? 100.0 * s.mean_diff_ns / s.mean_full_ns : 0.0;
    const std::int64_t fastest = full.times.front();
    const auto faster = std::lower_bound(cr.times.begin(), cr.times.end(), fastest) - cr.times.begin();
    s.frac_faster_pct = 100.0 * static_cast<double>(faster) / static_cast<double>(cr.size());
    s.t70_full_ns = full.time_at(0.7);
    s.t70_cr_ns = cr.time_at(0.7);
    std::size_t detected = 0;
    for (const QpRecord& r : records)
      if (r.example == ex && r.solver == solver && r.mode == "CR" && r.all_removed) ++detected;
    s.detected_pct = 100.0 * static_cast<double>(detected) / static_cast<double>(cr.size());
    s.cr_left_dominant = left_dominates(cr, full);
    out.push_back(s);
  }
  return out;
}

// ---- CSV and SVG output ----------------------------------------------------

inline void write_records_csv(std::ostream& os, const std::vector<QpRecord>& records) {
  os << kRecordsHeader << "\n";
  for (const QpRecord& r : records)
    os << r.example << ',' << r.solver << ',' << r.mode << ',' << r.traj << ',' << r.step << ','
       << r.kept_rows << ',' << (r.all_removed ? 1 : 0) << ',' << r.certify_ns << ','
       << r.setup_ns << ',' << r.solve_ns << ',' << r.total_ns << ',' << r.iters << ','
       << r.status << "\n";
}

/// One row per record: its time and the CDF rank (i+1)/n.
inline void write_cdf_csv(std::ostream& os, const CdfSeries& cdf) {
  os << "time_ns,h_cdf\n" << std::setprecision(17);
  const double n = static_cast<double>(cdf.size());
  for (std::size_t i = 0; i < cdf.size(); ++i)
    os << cdf.times[i] << ',' << static_cast<double>(i + 1) / n << "\n";
}

inline CdfSeries read_cdf_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "time_ns,h_cdf")
    throw IoFailure("read_cdf_csv: missing header");
  std::vector<std::int64_t> times;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    times.push_back(std::stoll(line.substr(0, line.find(','))));
  }
  return compute_cdf(std::move(times));
}

inline void write_summary_csv(std::ostream& os, const std::vector<CaseSummary>& rows) {
  os << kSummaryHeader << "\n" << std::setprecision(10);
  for (const CaseSummary& s : rows)
    os << s.example << ',' << s.solver << ',' << s.records_full << ',' << s.records_cr << ','
       << s.mean_full_ns << ',' << s.mean_cr_ns << ',' << s.mean_diff_ns << ',' << s.mean_diff_pct
       << ',' << s.frac_faster_pct << ',' << s.t70_full_ns << ',' << s.t70_cr_ns << ','
       << s.detected_pct << ',' << (s.cr_left_dominant ? 1 : 0) << "\n";
}

/// Both CDFs on one axis, Full blue and CR red. The time axis runs to the
/// larger 0.995 quantile.
inline void write_cdf_svg(std::ostream& os, const std::string& title, const CdfSeries& full,
                          const CdfSeries& cr) {
  constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 60;
  constexpr int samples = 600;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const double t_max = std::max({full.time_at(0.995), cr.time_at(0.995), 1.0}) * 1.05;
  auto px = [&](double t) { return left + pw * t / t_max; };
  auto py = [&](double h) { return top + ph * (1.0 - h); };

  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double h = k / 5.0;
    os << "<line x1=\"" << left - 4 << "\" y1=\"" << py(h) << "\" x2=\"" << left << "\" y2=\""
       << py(h) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << left - 8 << "\" y=\"" << py(h) + 4 << "\" text-anchor=\"end\">" << h
       << "</text>\n";
    const double t = t_max * k / 5.0;
    os << "<line x1=\"" << px(t) << "\" y1=\"" << top + ph << "\" x2=\"" << px(t) << "\" y2=\""
       << top + ph + 4 << "\" stroke=\"black\"/>";
    os << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << t / 1000.0 << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
     << "\" text-anchor=\"middle\">t_MPC [us]</text>\n";
  os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << top + ph / 2 << ")\">h_cdf</text>\n";
  auto curve = [&](const CdfSeries& c, const char* color) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    double prev = 0.0;
    for (int k = 0; k <= samples; ++k) {
      const double t = t_max * k / samples;
      const double h = c(t);
      if (k > 0 && h != prev) os << px(t) << ',' << py(prev) << ' ';
      os << px(t) << ',' << py(h) << ' ';
      prev = h;
    }
    os << "\"/>\n";
  };
  curve(full, "blue");
  curve(cr, "red");
  os << "<line x1=\"" << left + pw - 120 << "\" y1=\"" << top + ph - 40 << "\" x2=\"" << left + pw - 95
     << "\" y2=\"" << top + ph - 40 << "\" stroke=\"blue\" stroke-width=\"2\"/>";
  os << "<text x=\"" << left + pw - 90 << "\" y=\"" << top + ph - 36 << "\">full-MPC</text>\n";
  os << "<line x1=\"" << left + pw - 120 << "\" y1=\"" << top + ph - 20 << "\" x2=\"" << left + pw - 95
     << "\" y2=\"" << top + ph - 20 << "\" stroke=\"red\" stroke-width=\"2\"/>";
  os << "<text x=\"" << left + pw - 90 << "\" y=\"" << top + ph - 16 << "\">CR-MPC</text>\n";
  os << "</svg>\n";
}

/// Paths of the files written by emit_outputs.
struct OutputFiles {
  std::filesystem::path records;
  std::filesystem::path summary;
  std::vector<std::filesystem::path> cdf_csv;
  std::vector<std::filesystem::path> plots;
  std::filesystem::path warnings;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw IoFailure("cannot write " + p.string());
  return f;
}

}  // namespace detail

/// Writes records.csv, summary.csv, cdf_<example>_<solver>_<mode>.csv per
/// case and cdf_<example>_<solver>.svg per pair with both modes. Problems
/// (empty selections, campaign warnings) go to warnings.txt.
inline OutputFiles emit_outputs(const std::vector<QpRecord>& records,
                                const std::filesystem::path& out_dir,
                                std::vector<std::string> warnings = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoFailure("cannot create output directory " + out_dir.string());

  OutputFiles files;
  files.records = out_dir / "records.csv";
  {
    auto f = detail::open_out(files.records);
    write_records_csv(f, records);
  }

  std::vector<std::tuple<std::string, std::string>> pairs;
  for (const QpRecord& r : records)
    if (std::find(pairs.begin(), pairs.end(), std::tuple{r.example, r.solver}) == pairs.end())
      pairs.emplace_back(r.example, r.solver);
  if (records.empty()) warnings.push_back("no records selected; no plots written");

  std::vector<QpRecord> complete;
  for (const auto& [ex, solver] : pairs) {
    std::map<std::string, CdfSeries> cdfs;
    for (Mode mode : {Mode::kFull, Mode::kCr}) {
      try {
        CdfSeries c = compute_cdf(records, ex, solver, to_string(mode));
        const fs::path p = out_dir / ("cdf_" + ex + "_" + solver + "_" + to_string(mode) + ".csv");
        auto f = detail::open_out(p);
        write_cdf_csv(f, c);
        files.cdf_csv.push_back(p);
        cdfs.emplace(to_string(mode), std::move(c));
      } catch (const EmptySelection& e) {
        warnings.push_back(e.what());
      }
    }
    if (cdfs.size() != 2) {
      warnings.push_back(ex + "/" + solver + ": one mode missing; no plot or summary row");
      continue;
    }
    const fs::path p = out_dir / ("cdf_" + ex + "_" + solver + ".svg");
    auto f = detail::open_out(p);
    write_cdf_svg(f, ex + " / " + solver, cdfs.at("Full"), cdfs.at("CR"));
    files.plots.push_back(p);
    for (const QpRecord& r : records)
      if (r.example == ex && r.solver == solver) complete.push_back(r);
  }

  files.summary = out_dir / "summary.csv";
  {
    auto f = detail::open_out(files.summary);
    if (complete.empty())
      f << kSummaryHeader << "\n";
    else
      write_summary_csv(f, summarize(complete));
  }
  if (!warnings.empty()) {
    files.warnings = out_dir / "warnings.txt";
    auto f = detail::open_out(files.warnings);
    for (const std::string& w : warnings) f << w << "\n";
  }
  return files;
}

}  // namespace crmpc
