#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "crmpc/bench.hpp"

namespace crmpc {
namespace {

namespace fs = std::filesystem;

QpRecord rec(const std::string& ex, const std::string& solver, const std::string& mode,
             std::int64_t t, bool all_removed = false) {
  QpRecord r;
  r.example = ex;
  r.solver = solver;
  r.mode = mode;
  r.total_ns = r.solve_ns = t;
  r.all_removed = all_removed;
  r.status = "Optimal";
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crmpc_test_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t count_ext(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ext && e.path().filename().string().rfind("cdf_", 0) == 0) ++n;
  return n;
}

TEST(Cdf, ThreeTimes) {
  const CdfSeries c = compute_cdf({3, 1, 2});
  EXPECT_DOUBLE_EQ(c(2.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c(0.5), 0.0);
  EXPECT_DOUBLE_EQ(c(3.0), 1.0);
  EXPECT_DOUBLE_EQ(c.time_at(0.7), 2.1);
}

TEST(Cdf, EqualTimesStepOnce) {
  const CdfSeries c = compute_cdf({5, 5, 5, 5});
  EXPECT_DOUBLE_EQ(c(4.999), 0.0);
  EXPECT_DOUBLE_EQ(c(5.0), 1.0);
  EXPECT_DOUBLE_EQ(c.time_at(0.7), 5.0);
}

TEST(Cdf, InterpolatesBetweenSteps) {
  EXPECT_DOUBLE_EQ(compute_cdf({10, 20}).time_at(0.7), 14.0);
}

TEST(Cdf, EmptyRaises) {
  EXPECT_THROW(compute_cdf(std::vector<std::int64_t>{}), EmptySelection);
  EXPECT_THROW(compute_cdf({rec("A", "Ipm", "Full", 1)}, "A", "Ipm", "CR"), EmptySelection);
}

TEST(Summary, HalfTimes) {
  std::vector<QpRecord> r;
  for (std::int64_t t : {100, 200, 300}) r.push_back(rec("A", "Ipm", "Full", t));
  for (std::int64_t t : {50, 100, 150}) r.push_back(rec("A", "Ipm", "CR", t, t == 50));
  const auto s = summarize(r);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].mean_diff_pct, -50.0);
  EXPECT_DOUBLE_EQ(s[0].mean_diff_ns, -100.0);
  EXPECT_NEAR(s[0].frac_faster_pct, 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(s[0].detected_pct, 100.0 / 3.0, 1e-12);
  EXPECT_TRUE(s[0].cr_left_dominant);
}

TEST(Summary, AllBelowFastestFull) {
  std::vector<QpRecord> r;
  for (std::int64_t t : {100, 200}) r.push_back(rec("A", "ActiveSet", "Full", t));
  for (std::int64_t t : {10, 20, 99}) r.push_back(rec("A", "ActiveSet", "CR", t));
  EXPECT_DOUBLE_EQ(summarize(r)[0].frac_faster_pct, 100.0);
}

TEST(Summary, MissingModeRaises) {
  EXPECT_THROW(summarize({rec("A", "Ipm", "Full", 1)}), EmptySelection);
  EXPECT_THROW(summarize({}), EmptySelection);
}

TEST(Summary, LeftDominanceDetectsCrossing) {
  EXPECT_FALSE(left_dominates(compute_cdf({1, 10}), compute_cdf({5, 6})));
  EXPECT_TRUE(left_dominates(compute_cdf({1, 4}), compute_cdf({5, 6})));
}

TEST(Outputs, FileCountContract) {
  std::vector<QpRecord> r;
  for (const char* ex : {"A", "B"})
    for (const char* mode : {"Full", "CR"})
      for (std::int64_t t : {10, 20, 30}) r.push_back(rec(ex, "Ipm", mode, mode[0] == 'F' ? 2 * t : t));
  const fs::path dir = fresh_dir("count");
  const OutputFiles files = emit_outputs(r, dir);
  EXPECT_EQ(files.plots.size(), 2u);
  EXPECT_EQ(count_ext(dir, ".svg"), 2u);
  EXPECT_EQ(count_ext(dir, ".csv"), 4u);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "records.csv"));
  EXPECT_FALSE(fs::exists(dir / "warnings.txt"));
  std::ifstream svg(dir / "cdf_A_Ipm.svg");
  const std::string text((std::istreambuf_iterator<char>(svg)), {});
  EXPECT_NE(text.find("stroke=\"blue\""), std::string::npos);
  EXPECT_NE(text.find("stroke=\"red\""), std::string::npos);
  std::ifstream summary(dir / "summary.csv");
  std::string header, line;
  std::getline(summary, header);
  EXPECT_EQ(header, kSummaryHeader);
  int rows = 0;
  while (std::getline(summary, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Outputs, EmptySelectionWritesWarningOnly) {
  const fs::path dir = fresh_dir("empty");
  const OutputFiles files = emit_outputs({}, dir);
  EXPECT_TRUE(files.plots.empty());
  EXPECT_TRUE(fs::exists(dir / "warnings.txt"));
  EXPECT_EQ(count_ext(dir, ".svg"), 0u);
}

TEST(Outputs, CdfCsvRoundTrip) {
  const CdfSeries c = compute_cdf({7, 3, 3, 1000000007, 12});
  std::stringstream ss;
  write_cdf_csv(ss, c);
  EXPECT_EQ(ss.str().substr(0, 14), "time_ns,h_cdf\n");
  EXPECT_EQ(read_cdf_csv(ss), c);
}

TEST(Outputs, RecordsHeader) {
  std::ostringstream os;
  write_records_csv(os, {rec("A", "Ipm", "CR", 5, true)});
  EXPECT_EQ(os.str(),
            "example,solver,mode,traj,step,kept_rows,all_removed,certify_ns,setup_ns,solve_ns,"
            "total_ns,iters,status\nA,Ipm,CR,0,0,0,1,0,0,5,5,0,Optimal\n");
}

TEST(Outputs, UnwritableDirectoryRaises) {
  const fs::path file = fresh_dir("blocker");
  std::ofstream(file) << "x";
  EXPECT_THROW(emit_outputs({}, file / "sub"), IoFailure);
  fs::remove(file);
}

TEST(Campaign, PairingAndTimingAccounting) {
  CampaignConfig cfg;
  cfg.examples = {ExampleId::kInpe50, ExampleId::kMimo30};
  cfg.x0_count = 3;
  cfg.warmup = 5;
  const CampaignResult res = run_campaign(cfg);
  std::map<std::tuple<std::string, std::string, std::string>, std::multiset<std::pair<int, int>>> keys;
  for (const QpRecord& r : res.records) {
    keys[{r.example, r.solver, r.mode}].insert({r.traj, r.step});
    if (r.mode == "Full") {
      EXPECT_EQ(r.certify_ns, 0);
      EXPECT_EQ(r.setup_ns, 0);
      EXPECT_EQ(r.total_ns, r.solve_ns);
    } else {
      EXPECT_EQ(r.total_ns, r.certify_ns + r.setup_ns + r.solve_ns);
      if (r.all_removed) {
        EXPECT_EQ(r.solve_ns, 0);
      }
    }
    EXPECT_GT(r.total_ns, 0);
    EXPECT_EQ(r.status, "Optimal");
  }
  EXPECT_EQ(keys.size(), 8u);
  for (const auto& [k, v] : keys)
    if (std::get<2>(k) == "CR") {
      EXPECT_EQ(v, (keys[{std::get<0>(k), std::get<1>(k), "Full"}]));
    }
  EXPECT_EQ(res.diagnostics.size(), 8u);
  for (const CaseDiagnostics& d : res.diagnostics) {
    EXPECT_EQ(d.trajectories, 3);
    EXPECT_LE(d.max_state_gap, 1e-5);
  }
}

TEST(Campaign, FullScaleCounts) {
  EXPECT_EQ(full_scale_count(ExampleId::kMimo30), 4935);
  EXPECT_EQ(full_scale_count(ExampleId::kComa40), 8028);
}

}  // namespace
}  // namespace crmpc
