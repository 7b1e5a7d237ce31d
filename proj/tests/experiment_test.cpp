#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "noisylab/experiment.hpp"
#include "noisylab/metrics.hpp"
#include "support/mixtures.hpp"

using namespace noisylab;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("noisylab_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

RunConfig tiny(const fs::path& out) {
  RunConfig c;
  c.samples = 400;
  c.dim = 4;
  c.classes = 3;
  c.hidden = {16};
  c.seed = 1;
  c.out = out.string();
  return c;
}

}  // namespace

TEST(Experiment, CeFiveEpochsWritesFiveRows) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path() / "run");
  c.epochs = 5;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(c, out, err), exit_ok) << err.str();
  const auto rows = csv_rows(tmp.path() / "run" / "metrics.csv");
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][0], std::to_string(i));
  EXPECT_TRUE(fs::exists(tmp.path() / "run" / "config.txt"));
  EXPECT_EQ(parse_config(slurp(tmp.path() / "run" / "config.txt")), c);
}

TEST(Experiment, SummaryMatchesMetricsCsv) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path() / "run");
  c.variant = Variant::m_dyr_h;
  c.noise = 0.8;
  c.epochs = 6;
  c.warmup = 2;
  ASSERT_NO_THROW(execute_run(c, c.out));

  const auto rows = csv_rows(tmp.path() / "run" / "metrics.csv");
  ASSERT_EQ(rows.size(), 7u);
  const auto& header = rows[0];
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  std::ifstream in(tmp.path() / "run" / "summary.json");
  const auto j = nlohmann::json::parse(in);
  for (const char* key : {"variant", "noise_rate", "criterion", "seed", "epochs", "best_accuracy", "best_epoch",
                          "last_accuracy", "diverged", "auc_trajectory"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["variant"], "M-DYR-H");
  EXPECT_EQ(j["epochs"], 6);

  double best = -1.0;
  int best_epoch = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double acc = std::stod(rows[i][col("val_acc")]);
    if (acc > best) {
      best = acc;
      best_epoch = std::stoi(rows[i][0]);
    }
  }
  EXPECT_NEAR(j["best_accuracy"].get<double>(), best, 1e-6);
  EXPECT_EQ(j["best_epoch"].get<int>(), best_epoch);
  EXPECT_NEAR(j["last_accuracy"].get<double>(), std::stod(rows.back()[col("val_acc")]), 1e-6);

  ASSERT_EQ(j["auc_trajectory"].size(), 6u);
  for (std::size_t e = 0; e < 6; ++e) {
    const auto& cell = rows[e + 1][col("auc")];
    if (j["auc_trajectory"][e].is_null()) {
      EXPECT_TRUE(cell.empty() || cell == "NA") << cell;
    } else {
      EXPECT_NEAR(j["auc_trajectory"][e].get<double>(), std::stod(cell), 1e-6);
    }
  }
  EXPECT_FALSE(j["auc_trajectory"][5].is_null());
}

TEST(Experiment, RerunIsByteIdentical) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path() / "a");
  c.variant = Variant::md_dyr_sh;
  c.noise = 0.5;
  c.epochs = 5;
  c.warmup = 2;
  c.loss_trace = true;
  execute_run(c, tmp.path() / "a");
  execute_run(c, tmp.path() / "b");
  for (const char* f : {"metrics.csv", "summary.json", "loss_trace.csv"}) {
    EXPECT_EQ(slurp(tmp.path() / "a" / f), slurp(tmp.path() / "b" / f)) << f;
  }
}

TEST(Experiment, MatrixMakesOneDirectoryPerCell) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path());
  c.epochs = 2;
  c.variants = {Variant::ce, Variant::m};
  c.noise_rates = {0.0, 0.4};
  c.workers = 2;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_matrix(c, out, err), exit_ok) << err.str();

  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(tmp.path()))
    if (e.is_directory()) ++dirs;
  EXPECT_EQ(dirs, 4u);
  EXPECT_TRUE(fs::exists(tmp.path() / run_dir_name(Variant::m, 0.4, 1) / "metrics.csv"));
  EXPECT_TRUE(fs::exists(tmp.path() / "aggregate.csv"));
}

TEST(Experiment, AggregateEqualsRecomputation) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path());
  c.epochs = 3;
  c.variants = {Variant::ce, Variant::m};
  c.noise_rates = {0.2};
  c.seeds = {1, 2};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_matrix(c, out, err), exit_ok) << err.str();

  const auto jobs = expand_matrix(c);
  const auto agg = aggregate_runs(jobs, tmp.path());
  ASSERT_EQ(agg.size(), 2u);
  for (const auto& a : agg) {
    double best_sum = 0.0, last_sum = 0.0;
    for (std::uint64_t s : c.seeds) {
      const auto rows = csv_rows(tmp.path() / run_dir_name(a.variant, a.noise_rate, s) / "metrics.csv");
      double best = 0.0;
      for (std::size_t i = 1; i < rows.size(); ++i) best = std::max(best, std::stod(rows[i][5]));
      best_sum += best;
      last_sum += std::stod(rows.back()[5]);
    }
    EXPECT_EQ(a.runs, 2u);
    EXPECT_NEAR(a.best_mean, best_sum / 2.0, 1e-9);
    EXPECT_NEAR(a.last_mean, last_sum / 2.0, 1e-9);
  }
}

TEST(Experiment, EmptyVariantListIsUsageError) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path());
  std::ostringstream out, err;
  EXPECT_EQ(cmd_matrix(c, out, err), exit_usage);
  EXPECT_NE(err.str().find("variants"), std::string::npos);
}

TEST(Experiment, BadChildConfigAbortsBeforeAnyRun) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path() / "m");
  c.variants = {Variant::md_dyr_sh, Variant::ce};
  c.temp_decay_end = 10;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_matrix(c, out, err), exit_usage);
  EXPECT_FALSE(fs::exists(tmp.path() / "m"));
}

TEST(Experiment, ExitCodes) {
  TempDir tmp;
  std::ostringstream out, err;
  RunConfig bad = tiny(tmp.path() / "r");
  bad.variant = Variant::ce;
  bad.bootstrap_start = 3;
  EXPECT_EQ(cmd_run(bad, out, err), exit_usage);

  RunConfig missing = tiny(tmp.path() / "r");
  missing.dataset = "csv";
  missing.csv_path = (tmp.path() / "absent.csv").string();
  EXPECT_EQ(cmd_run(missing, out, err), exit_io);

  // Blocked by a regular file where the directory should go.
  std::ofstream(tmp.path() / "file") << "x";
  RunConfig blocked = tiny(tmp.path() / "file" / "run");
  blocked.epochs = 1;
  EXPECT_EQ(cmd_run(blocked, out, err), exit_io);

  EXPECT_EQ(cmd_fit_trace(tmp.path() / "nope.csv", std::nullopt, 20, out, err), exit_io);
}

TEST(Experiment, DivergenceStillExitsZero) {
  TempDir tmp;
  RunConfig c = tiny(tmp.path() / "r");
  c.epochs = 3;
  c.lr = 1e300;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(c, out, err), exit_ok) << err.str();
  std::ifstream in(tmp.path() / "r" / "summary.json");
  EXPECT_TRUE(nlohmann::json::parse(in)["diverged"].get<bool>());
}

TEST(FitTrace, ConstantLossesAreDegenerate) {
  std::vector<LossTraceRow> rows;
  for (std::size_t i = 0; i < 50; ++i) rows.push_back({3, i, 1.0, 0.5, 0.5, i % 2 == 0});
  const auto r = fit_trace(rows);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(r.bmm_auc.has_value());
  EXPECT_FALSE(r.gmm_auc.has_value());
  EXPECT_DOUBLE_EQ(r.bmm.lambda[0], 0.5);
  std::ostringstream out;
  print_fit_trace(out, r);
  EXPECT_NE(out.str().find("absent"), std::string::npos);
}

TEST(FitTrace, RecoversSampledMixture) {
  BetaMixture truth = fixtures::separated();
  truth.alpha = {2.0, 9.0};
  truth.beta = {9.0, 3.0};
  const auto s = fixtures::beta_mixture(truth, 4000, 5);
  std::vector<LossTraceRow> rows;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    rows.push_back({1, i, s.values[i], s.values[i], 0.0, s.component[i] == 1});
  }
  const auto r = fit_trace(rows);
  const auto m = fixtures::ordered_means(r.bmm);
  EXPECT_NEAR(m[0], 2.0 / 11.0, 0.05);
  EXPECT_NEAR(m[1], 9.0 / 12.0, 0.05);
  ASSERT_TRUE(r.bmm_auc.has_value());
  EXPECT_GT(*r.bmm_auc, 0.95);

  double mass = 0.0;
  for (const auto& b : r.histogram) mass += b.empirical * (b.hi - b.lo);
  EXPECT_NEAR(mass, 1.0, 1e-9);
}

TEST(FitTrace, PicksRequestedEpoch) {
  std::vector<LossTraceRow> rows;
  for (std::size_t i = 0; i < 20; ++i) rows.push_back({1, i, 1.0, 0.5, 0.5, false});
  for (std::size_t i = 0; i < 30; ++i) rows.push_back({2, i, 1.0, 0.1 + 0.02 * static_cast<double>(i), 0.5, i > 20});
  EXPECT_EQ(fit_trace(rows).epoch, 2);
  EXPECT_EQ(fit_trace(rows).samples, 30u);
  EXPECT_TRUE(fit_trace(rows, 1).degenerate);
}

TEST(FitTrace, MalformedTraceNamesLine) {
  TempDir tmp;
  const auto p = tmp.path() / "t.csv";
  std::ofstream(p) << kLossTraceHeader << "\n1,0,0.5,0.5,0.1,0\n1,1,oops,0.5,0.1,0\n";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_fit_trace(p, std::nullopt, 20, out, err), exit_io);
  EXPECT_NE(err.str().find("3"), std::string::npos) << err.str();
}

TEST(FitTrace, BmmAtLeastGmmOnHalfNoiseRun) {
  TempDir tmp;
  RunConfig c;
  c.variant = Variant::ce;
  c.noise = 0.5;
  c.epochs = 10;
  c.samples = 4000;
  c.seed = 3;
  c.loss_trace = true;
  c.out = (tmp.path() / "r").string();
  execute_run(c, c.out);

  std::ostringstream out, err;
  ASSERT_EQ(cmd_fit_trace(tmp.path() / "r" / "loss_trace.csv", 10, 20, out, err), exit_ok) << err.str();
  std::ifstream in(tmp.path() / "r" / "loss_trace.csv");
  const auto r = fit_trace(read_loss_trace(in), 10);
  ASSERT_TRUE(r.bmm_auc && r.gmm_auc);
  EXPECT_GE(*r.bmm_auc, *r.gmm_auc);
}
