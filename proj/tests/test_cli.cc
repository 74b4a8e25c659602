#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "test_util.h"

namespace fs = std::filesystem;

namespace {

struct result {
  int code_{-1};
  std::string out_;
  std::string err_;
};

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

result run(fs::path const& dir, std::string const& args) {
  auto const out = dir / "stdout.txt";
  auto const err = dir / "stderr.txt";
  auto const cmd = std::string{TFE_CLI} + " " + args + " >" + out.string() +
                   " 2>" + err.string();
  auto const status = std::system(cmd.c_str());
  result r;
  r.code_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out_ = slurp(out);
  r.err_ = slurp(err);
  return r;
}

std::vector<std::string> lines(fs::path const& p) {
  std::ifstream in{p};
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) {
    out.push_back(l);
  }
  return out;
}

class Cli : public testing::Test {
protected:
  void SetUp() override {
    dir_ = tfe::test::scratch_dir(
        testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  std::string at(std::string const& name) const {
    return (dir_ / name).string();
  }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateWritesBundle) {
  auto const r = run(dir_, "generate example41 --with-counts --out " + at("b"));
  ASSERT_EQ(r.code_, 0) << r.err_;
  for (auto const* f : {"network.json", "demand.csv", "scenario.json",
                        "counts.csv", "ground_truth_ridership.csv",
                        "gap_trajectory.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "b" / f)) << f;
  }
  auto const counts = lines(dir_ / "b" / "counts.csv");
  EXPECT_EQ(counts.front(), "stop_id,channel,period_index,value");
  // 5 stops x 3 channels x 60 unit periods.
  EXPECT_EQ(counts.size(), 1U + 5U * 3U * 60U);
}

TEST_F(Cli, WithoutCountsThereIsNoCountsFile) {
  ASSERT_EQ(run(dir_, "generate example41 --out " + at("b")).code_, 0);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "demand.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "b" / "counts.csv"));
}

TEST_F(Cli, UnknownScenarioFails) {
  auto const r = run(dir_, "generate atlantis --out " + at("b"));
  EXPECT_NE(r.code_, 0);
  EXPECT_NE(r.err_.find("atlantis"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "b" / "network.json"));
}

TEST_F(Cli, UnknownFlagIsInputError) {
  EXPECT_EQ(run(dir_, "assign --frobnicate x").code_, 1);
  EXPECT_EQ(run(dir_, "").code_, 1);
}

TEST_F(Cli, AssignExample41) {
  ASSERT_EQ(run(dir_, "generate example41 --out " + at("b")).code_, 0);
  auto const r = run(dir_, "assign " + at("b") + " --out " + at("a"));
  ASSERT_EQ(r.code_, 0) << r.err_;
  auto const pos = r.out_.find("cost ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(r.out_.substr(pos + 5)), 11750.0, 0.5);
  EXPECT_NE(r.out_.find("converged"), std::string::npos);
  auto const rid = lines(dir_ / "a" / "ridership.csv");
  EXPECT_EQ(rid.front(), "line,run_index,from_stop,to_stop,depart_time,flow");
  // l1 has 3 segments, l2 two runs of 3.
  EXPECT_EQ(rid.size(), 1U + 3U + 6U);
  auto const gap = lines(dir_ / "a" / "gap_trajectory.csv");
  EXPECT_EQ(gap.front(), "iteration,cost_f,cost_g,relative_gap");
  auto const last = gap.back();
  EXPECT_LE(std::stod(last.substr(last.rfind(',') + 1)), 0.005);
}

TEST_F(Cli, SingleInnerIterationIsBudgetExhausted) {
  ASSERT_EQ(run(dir_, "generate example41 --out " + at("b")).code_, 0);
  auto const r =
      run(dir_, "assign " + at("b") + " --max-inner 1 --out " + at("a"));
  EXPECT_EQ(r.code_, 2);
  EXPECT_NE(r.out_.find("budget exhausted"), std::string::npos);
  EXPECT_EQ(lines(dir_ / "a" / "gap_trajectory.csv").size(), 2U);
}

TEST_F(Cli, ZeroDemandBundle) {
  ASSERT_EQ(run(dir_, "generate example41 --out " + at("b")).code_, 0);
  {
    std::ofstream d{dir_ / "b" / "demand.csv"};
    d << "origin,destination,depart_time,quantity\n"
      << "0,1,0,0.000000\n4,1,0,0.000000\n";
  }
  auto const r = run(dir_, "assign " + at("b") + " --out " + at("a"));
  ASSERT_EQ(r.code_, 0) << r.err_;
  auto const rid = lines(dir_ / "a" / "ridership.csv");
  for (auto i = 1U; i < rid.size(); ++i) {
    EXPECT_TRUE(rid[i].ends_with(",0.000000")) << rid[i];
  }
  auto const gap = lines(dir_ / "a" / "gap_trajectory.csv");
  ASSERT_EQ(gap.size(), 2U);
  EXPECT_TRUE(gap[1].ends_with(",0.000000")) << gap[1];
}

TEST_F(Cli, MalformedDemandNamesFileAndRow) {
  ASSERT_EQ(run(dir_, "generate example41 --out " + at("b")).code_, 0);
  {
    std::ofstream d{dir_ / "b" / "demand.csv"};
    d << "origin,destination,depart_time,quantity\n0,1,0,100\n4,1,zero,1\n";
  }
  auto const r = run(dir_, "assign " + at("b") + " --out " + at("a"));
  EXPECT_EQ(r.code_, 1);
  EXPECT_NE(r.err_.find("demand.csv"), std::string::npos) << r.err_;
  // Data rows are counted after the header.
  EXPECT_NE(r.err_.find("row 2"), std::string::npos) << r.err_;
  EXPECT_FALSE(fs::exists(dir_ / "a" / "ridership.csv"));
}

TEST_F(Cli, RoundTripIsBitForBit) {
  for (auto const* k : {"1", "2"}) {
    auto const b = at(std::string{"b"} + k);
    ASSERT_EQ(run(dir_, "generate example41 --with-counts --noise-var 0.25 "
                        "--theta 0.1 --seed 7 --out " +
                            b)
                  .code_,
              0);
    ASSERT_EQ(
        run(dir_, "assign " + b + " --out " + at(std::string{"a"} + k)).code_,
        0);
  }
  for (auto const* f : {"counts.csv", "ground_truth_ridership.csv",
                        "demand.csv", "network.json", "scenario.json"}) {
    EXPECT_EQ(slurp(dir_ / "b1" / f), slurp(dir_ / "b2" / f)) << f;
  }
  for (auto const* f : {"ridership.csv", "gap_trajectory.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a1" / f), slurp(dir_ / "a2" / f)) << f;
  }
}

TEST_F(Cli, MeasurementPeriodAggregatesCounts) {
  auto const r = run(dir_, "generate sioux-falls --with-counts "
                           "--measurement-period 15 --out " +
                               at("b"));
  ASSERT_EQ(r.code_, 0) << r.err_;
  auto const counts = lines(dir_ / "b" / "counts.csv");
  ASSERT_GT(counts.size(), 1U);
  for (auto i = 1U; i < counts.size(); ++i) {
    std::stringstream ss{counts[i]};
    std::string stop, ch, period;
    std::getline(ss, stop, ',');
    std::getline(ss, ch, ',');
    std::getline(ss, period, ',');
    // Two-hour window in quarter hours.
    auto const k = std::stoi(period);
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 8);
  }
}

TEST_F(Cli, MeasuredStopsAndChannels) {
  auto const r = run(dir_, "generate example41 --with-counts "
                           "--measured-stops 2,4 --channels entry --out " +
                               at("b"));
  ASSERT_EQ(r.code_, 0) << r.err_;
  auto const counts = lines(dir_ / "b" / "counts.csv");
  EXPECT_EQ(counts.size(), 1U + 2U * 60U);
  for (auto i = 1U; i < counts.size(); ++i) {
    EXPECT_TRUE(counts[i].starts_with("2,entry,") ||
                counts[i].starts_with("4,entry,"))
        << counts[i];
  }
  EXPECT_NE(run(dir_, "generate example41 --measured-stops 9 --out " +
                          at("c"))
                .code_,
            0);
}

TEST_F(Cli, EstimateNeedsCounts) {
  ASSERT_EQ(run(dir_, "generate example41 --out " + at("b")).code_, 0);
  auto const r = run(dir_, "estimate " + at("b") + " --out " + at("e"));
  EXPECT_EQ(r.code_, 1);
  EXPECT_NE(r.err_.find("counts.csv"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "e" / "demand_estimate.csv"));
}

TEST_F(Cli, EstimateRejectsPeriodOutsideGrid) {
  ASSERT_EQ(
      run(dir_, "generate example41 --with-counts --out " + at("b")).code_, 0);
  {
    std::ofstream c{dir_ / "b" / "counts.csv", std::ios::app};
    c << "0,entry,999,1.000000\n";
  }
  auto const r = run(dir_, "estimate " + at("b") + " --out " + at("e"));
  EXPECT_EQ(r.code_, 1);
  EXPECT_NE(r.err_.find("999"), std::string::npos) << r.err_;
}

TEST_F(Cli, EstimateAndEvaluate) {
  ASSERT_EQ(
      run(dir_, "generate example41 --with-counts --out " + at("b")).code_, 0);
  auto const e = run(dir_, "estimate " + at("b") + " --max-outer 3 --out " +
                               at("e"));
  ASSERT_TRUE(e.code_ == 0 || e.code_ == 2) << e.err_;
  auto const traj = lines(dir_ / "e" / "trajectory.csv");
  EXPECT_GE(traj.size(), 2U);
  EXPECT_LE(traj.size(), 4U);
  EXPECT_TRUE(fs::exists(dir_ / "e" / "demand_estimate.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "e" / "ridership_estimate.csv"));

  auto const v = run(dir_, "evaluate " + at("e") + " " + at("b") + " --out " +
                               at("v"));
  ASSERT_EQ(v.code_, 0) << v.err_;
  auto const rep = slurp(dir_ / "v" / "report.json");
  for (auto const* k : {"mse_minute_od", "mse_hourly_od", "mse_ridership",
                        "std_error", "are"}) {
    EXPECT_NE(rep.find(k), std::string::npos) << k;
  }
  // One row per run segment.
  EXPECT_EQ(lines(dir_ / "v" / "report.csv").size(),
            lines(dir_ / "b" / "ground_truth_ridership.csv").size());
}

TEST_F(Cli, EvaluateIdenticalInputsIsZero) {
  ASSERT_EQ(
      run(dir_, "generate example41 --with-counts --out " + at("b")).code_, 0);
  fs::create_directories(dir_ / "e");
  fs::copy_file(dir_ / "b" / "ground_truth_ridership.csv",
                dir_ / "e" / "ridership_estimate.csv");
  fs::copy_file(dir_ / "b" / "demand.csv", dir_ / "e" / "demand_estimate.csv");
  auto const v = run(dir_, "evaluate " + at("e") + " " + at("b") + " --out " +
                               at("v"));
  ASSERT_EQ(v.code_, 0) << v.err_;
  EXPECT_NE(v.out_.find("mse minute-od 0 hourly-od 0 ridership 0"),
            std::string::npos)
      << v.out_;
}

TEST_F(Cli, EvaluateMissingInputsFail) {
  ASSERT_EQ(
      run(dir_, "generate example41 --with-counts --out " + at("b")).code_, 0);
  auto const v = run(dir_, "evaluate " + at("nothing") + " " + at("b") +
                               " --out " + at("v"));
  EXPECT_EQ(v.code_, 1);
  EXPECT_FALSE(fs::exists(dir_ / "v" / "report.json"));
}
