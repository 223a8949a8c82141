#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lis/harness.hpp"

namespace lis::harness {
namespace {

namespace fs = std::filesystem;

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.name = "tiny";
  c.route.correct_points = 24;
  c.route.anomalous_points = 22;
  c.lis_rows = 8;
  c.lis_cols = 8;
  c.averaging = 4;
  c.snr_db = {10, 0};
  c.replicates = 1;
  c.threads = 1;
  c.master_seed = 7;
  c.lof.k_candidates = {1, 2, 3};
  c.lof.feature_size = 8;
  c.glrt.n_mc = 10000;
  c.dae.target_rows = 16;
  c.dae.target_cols = 16;
  c.dae.image_size = 8;
  c.dae.net.epochs = 3;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lis_harness_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  return p;
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

TEST(HarnessConfig, JsonRoundTrip) {
  ExperimentConfig c = tiny();
  c.route.kind = RouteKind::kNormal;
  c.arms = {Arm::kGlrt, Arm::kRaw};
  c.changing_environment = true;
  c.lof.metric = lof::Metric::kManhattan;
  const std::string text = config_to_json_text(c);
  const ExperimentConfig back = config_from_json_text(text);
  EXPECT_EQ(config_to_json_text(back), text);
  EXPECT_EQ(back.route.kind, RouteKind::kNormal);
  EXPECT_EQ(back.arms, c.arms);
  EXPECT_EQ(back.dae.net.epochs, 3u);
}

TEST(HarnessConfig, DefaultsFromEmptyObject) {
  const ExperimentConfig c = config_from_json_text("{}");
  EXPECT_EQ(c.route.correct_points, 185u);
  EXPECT_EQ(c.route.anomalous_points, 182u);
  EXPECT_EQ(c.samples_per_point, 10);
  EXPECT_EQ(c.averaging, 100);
  EXPECT_EQ(c.replicates, 5);
  EXPECT_DOUBLE_EQ(c.split_train, 0.8);
}

TEST(HarnessConfig, RejectsInconsistentSettings) {
  EXPECT_THROW(config_from_json_text(R"({"bogus": 1})"), std::invalid_argument);
  EXPECT_THROW(config_from_json_text(R"({"route": {"delta": 1}})"), std::invalid_argument);
  EXPECT_THROW(config_from_json_text(R"({"arms": ["median"]})"), std::invalid_argument);
  ExperimentConfig c = tiny();
  c.split_test = 0.2;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = tiny();
  c.snr_db.clear();
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = tiny();
  c.route.delta_d = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = tiny();
  c.snr_db = {20};  // above the DAE target SNR
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.arms = {Arm::kRaw};
  EXPECT_NO_THROW(validate(c));
}

TEST(HarnessSplit, DisjointCoveringAndSized) {
  const Split s = split_correct(185, 10, 0.8, 0.1, 3);
  EXPECT_EQ(s.train.size(), 1480u);
  EXPECT_EQ(s.valid.size(), 185u);
  EXPECT_EQ(s.test.size(), 185u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto* part : {&s.train, &s.valid, &s.test}) {
    for (const SampleRef& r : *part) {
      EXPECT_LT(r.point, 185u);
      EXPECT_LT(r.sample, 10u);
      EXPECT_TRUE(seen.insert({r.point, r.sample}).second);
    }
  }
  EXPECT_EQ(seen.size(), 1850u);
  const Split again = split_correct(185, 10, 0.8, 0.1, 3);
  EXPECT_EQ(again.test, s.test);
  EXPECT_NE(split_correct(185, 10, 0.8, 0.1, 4).test, s.test);
}

TEST(HarnessSeeds, CellsDiffer) {
  EXPECT_EQ(cell_seed(1, 0, 0.0), cell_seed(1, 0, 0.0));
  EXPECT_NE(cell_seed(1, 0, 0.0), cell_seed(1, 1, 0.0));
  EXPECT_NE(cell_seed(1, 0, 0.0), cell_seed(1, 0, 5.0));
  EXPECT_NE(cell_seed(1, 0, 0.0), cell_seed(2, 0, 0.0));
}

TEST(HarnessData, TrainingUsesOnlyCorrectTrainSamples) {
  const ExperimentConfig c = tiny();
  const Environment env = prepare(c);
  const std::uint64_t seed = cell_seed(c.master_seed, 0, 0.0);
  const LofData data = lof_data(env, Arm::kRaw, 0, 0.0);

  // Rebuild the training features from the train split alone.
  const Split split = cell_split(env, seed);
  ASSERT_EQ(data.train.size(), split.train.size());
  ASSERT_EQ(data.valid.size(), split.valid.size());
  const double sigma2 = env.sigma2_for(0.0);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    EXPECT_LT(split.train[i].point, c.route.correct_points);
    const PowerFrame frame = arm_frame(env, Arm::kRaw, seed, sigma2, split.train[i], false);
    const auto expected = to_features(to_image(frame, 8, 8), FeatureMode::kResized, 8, 8).values;
    const auto got = data.train[i];
    ASSERT_TRUE(std::equal(got.begin(), got.end(), expected.begin(), expected.end())) << i;
  }

  // Test set: the correct test split plus every anomalous sample.
  ASSERT_EQ(data.test.size(), split.test.size() + 22u * 10u);
  std::size_t anomalous = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const SampleRef r = data.test_refs[i];
    EXPECT_EQ(data.test_anomalous[i], r.point >= c.route.correct_points);
    anomalous += data.test_anomalous[i];
    if (!data.test_anomalous[i]) {
      EXPECT_TRUE(std::find(split.train.begin(), split.train.end(), r) == split.train.end());
      EXPECT_TRUE(std::find(split.valid.begin(), split.valid.end(), r) == split.valid.end());
    }
  }
  EXPECT_EQ(anomalous, 220u);

  // DAE pairs come from the correct train split only.
  EXPECT_EQ(dae_pairs(env, seed, 0.0, split).size(), split.train.size());
}

TEST(HarnessData, ArmsDifferInAveraging) {
  const ExperimentConfig c = tiny();
  const Environment env = prepare(c);
  const double sigma2 = env.sigma2_for(0.0);
  const PowerFrame raw = arm_frame(env, Arm::kRaw, 5, sigma2, {3, 1}, false);
  const PowerFrame avg = arm_frame(env, Arm::kAveraging, 5, sigma2, {3, 1}, false);
  EXPECT_EQ(raw.w, arm_frame(env, Arm::kGlrt, 5, sigma2, {3, 1}, false).w);
  // Averaging shrinks the spread around the mean power g + sigma^2.
  double raw_dev = 0, avg_dev = 0;
  const auto g = env.channels[3].power();
  for (std::size_t m = 0; m < g.size(); ++m) {
    raw_dev += std::abs(raw.w[m] - g[m] - sigma2);
    avg_dev += std::abs(avg.w[m] - g[m] - sigma2);
  }
  EXPECT_LT(avg_dev, raw_dev);
}

TEST(HarnessSweep, SingleGlrtCellGivesOneRow) {
  ExperimentConfig c = tiny();
  c.snr_db = {10};
  c.arms = {Arm::kGlrt};
  const fs::path out = scratch("single.csv");
  EXPECT_EQ(run_sweep(c, out), 1u);
  const auto rows = read_results(out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[0].unit, "point");
  EXPECT_EQ(rows[0].confusion.total(), 46u);
  const auto pf1 = metrics::f1(rows[0].confusion).pf1;
  if (pf1) {
    EXPECT_GE(*pf1, 0.0);
    EXPECT_LE(*pf1, 1.0);
  }
  const std::string text = slurp(out);
  EXPECT_EQ(text.substr(0, text.find('\n')), results_header());
}

TEST(HarnessSweep, DeterministicAcrossRunsAndThreads) {
  ExperimentConfig c = tiny();
  const fs::path a = scratch("det_a.csv");
  const fs::path b = scratch("det_b.csv");
  EXPECT_EQ(run_sweep(c, a), 8u);
  c.threads = 3;
  EXPECT_EQ(run_sweep(c, b), 8u);
  EXPECT_EQ(slurp(a), slurp(b));
  for (const CellResult& r : read_results(a)) {
    EXPECT_EQ(r.status, "ok") << r.key.id();
    EXPECT_EQ(r.unit, r.key.arm == Arm::kGlrt ? "point" : "sample");
    EXPECT_EQ(r.confusion.total(), r.key.arm == Arm::kGlrt ? 46u : 24u + 220u);
  }
}

TEST(HarnessSweep, ResumeSkipsCompletedRows) {
  ExperimentConfig c = tiny();
  c.arms = {Arm::kRaw, Arm::kGlrt};
  const fs::path out = scratch("resume.csv");
  EXPECT_EQ(run_sweep(c, out), 4u);
  const std::string full = slurp(out);
  EXPECT_EQ(run_sweep(c, out), 0u);
  EXPECT_EQ(slurp(out), full);

  // Drop one row and truncate another, as an interrupted run would leave them.
  std::istringstream lines(full);
  std::string line, edited;
  int i = 0;
  while (std::getline(lines, line)) {
    if (i == 2) {
      ++i;
      continue;
    }
    edited += (i == 4 ? line.substr(0, line.size() / 2) : line) + '\n';
    ++i;
  }
  {
    std::ofstream f(out, std::ios::trunc);
    f << edited;
  }
  EXPECT_EQ(run_sweep(c, out), 2u);
  EXPECT_EQ(slurp(out), full);

  // A different master seed recomputes everything.
  c.master_seed = 8;
  EXPECT_EQ(run_sweep(c, out), 4u);
  EXPECT_EQ(line_count(slurp(out)), 5u);
}

TEST(HarnessSweep, FailedCellsAreFlaggedAndSweepContinues) {
  ExperimentConfig c = tiny();
  c.snr_db = {10};
  c.arms = {Arm::kRaw, Arm::kGlrt};
  c.lof.k_candidates = {100000};  // more neighbors than training samples
  const fs::path out = scratch("errors.csv");
  EXPECT_EQ(run_sweep(c, out), 2u);
  const auto rows = read_results(out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status.rfind("error: ", 0), 0u) << rows[0].status;
  EXPECT_EQ(rows[0].confusion.total(), 0u);
  EXPECT_EQ(rows[1].status, "ok");
  // Error rows are retried on resume.
  EXPECT_EQ(run_sweep(c, out), 1u);
}

TEST(HarnessRows, FormatParseRoundTrip) {
  CellResult r;
  r.key = {"desk", 3, -5.0, Arm::kDae};
  r.master_seed = 42;
  r.unit = "sample";
  r.confusion = {8, 2, 6, 4};
  r.chosen_k = 3;
  const std::string line = format_row(r);
  EXPECT_EQ(line, "desk,42,3,-5,lof,dae,sample,3,8,2,6,4,0.800000,0.600000,0.666667,0.750000,0.727273,0.666667,ok");
  const CellResult back = parse_row(line);
  EXPECT_EQ(format_row(back), line);
  EXPECT_EQ(back.key.id(), r.key.id());

  r.key.arm = Arm::kGlrt;
  r.confusion = {0, 0, 5, 5};
  const std::string glrt = format_row(r);
  EXPECT_NE(glrt.find(",glrt,raw,"), std::string::npos);
  EXPECT_NE(glrt.find(",NA,"), std::string::npos);
  EXPECT_EQ(parse_row(glrt).key.arm, Arm::kGlrt);
  EXPECT_THROW(parse_row("desk,1,2"), std::invalid_argument);
}

TEST(HarnessReport, SummaryAggregatesReplicates) {
  auto row = [](int rep, double snr, Arm arm, metrics::Confusion c, std::string status = "ok") {
    CellResult r;
    r.key = {"desk", rep, snr, arm};
    r.master_seed = 1;
    r.unit = arm == Arm::kGlrt ? "point" : "sample";
    r.confusion = c;
    r.status = std::move(status);
    return r;
  };
  const std::vector<CellResult> results{
      row(0, 0, Arm::kRaw, {10, 0, 10, 0}),   // PF1 = 1
      row(1, 0, Arm::kRaw, {0, 0, 10, 10}),   // PF1 undefined, counted as 0
      row(2, 0, Arm::kRaw, {}, "error: boom"),
      row(0, 10, Arm::kRaw, {5, 5, 5, 5}),    // PF1 = 0.5
      row(0, 10, Arm::kGlrt, {1, 0, 1, 0}),
  };
  const auto s = summarize(results);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].preprocessing, "raw");
  EXPECT_EQ(s[0].snr_db, 10.0);  // decreasing SNR within an arm
  EXPECT_DOUBLE_EQ(s[0].pf1_mean, 0.5);
  EXPECT_EQ(s[1].snr_db, 0.0);
  EXPECT_EQ(s[1].runs, 2u);
  EXPECT_EQ(s[1].undefined, 1u);
  EXPECT_DOUBLE_EQ(s[1].pf1_mean, 0.5);
  EXPECT_DOUBLE_EQ(s[1].pf1_min, 0.0);
  EXPECT_DOUBLE_EQ(s[1].pf1_max, 1.0);
  EXPECT_EQ(s[2].detector, "glrt");

  std::ostringstream csv, table;
  write_summary(csv, s);
  EXPECT_EQ(line_count(csv.str()), 4u);
  EXPECT_NE(csv.str().find("desk,lof,raw,0,2,1,0.500000,0.000000,1.000000"), std::string::npos);
  print_tables(table, s);
  EXPECT_NE(table.str().find("lof/raw"), std::string::npos);
  EXPECT_NE(table.str().find("glrt/raw"), std::string::npos);
}

}  // namespace
}  // namespace lis::harness
