#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "kfp/io.hpp"

namespace fs = std::filesystem;
using namespace kfp;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KFP_CLI) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("kfp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string out() const { return " --output-dir " + dir.string(); }
  fs::path dir;
};

const std::string kScan = " --radius 3 --resolution 5 --quasi-random 20";

}  // namespace

TEST_F(Cli, CheckClassicalPasses) {
  EXPECT_EQ(run_cli("check --model classical --dim 2" + kScan + out()), 0);
  const KeyValues kv = read_kv_file((dir / "report.kv").string());
  EXPECT_EQ(kv.number("sigma1"), 1.0);
  EXPECT_TRUE(kv.flag("required_ok"));
  EXPECT_TRUE(fs::exists(dir / "check.txt"));
}

TEST_F(Cli, CheckLowThetaFailsWithWitness) {
  EXPECT_EQ(run_cli("check --model relativistic --theta 0.1 --dim 1" + kScan + out()), 1);
  const KeyValues kv = read_kv_file((dir / "report.kv").string());
  EXPECT_FALSE(kv.flag("required_ok"));
  EXPECT_LT(kv.number("sigma1"), 0.0);
  EXPECT_NE(slurp(dir / "check.txt").find("sigma1"), std::string::npos);
  EXPECT_EQ(run_cli("certify --model relativistic --theta 0.1" + out()), 1);
}

TEST_F(Cli, PipelineIsDeterministic) {
  ASSERT_EQ(run_cli("check --model classical --dim 2" + kScan + out()), 0);
  ASSERT_EQ(run_cli("certify" + out()), 0);
  const KeyValues cert = read_kv_file((dir / "certificate.kv").string());
  EXPECT_EQ(cert.number("k"), 382.0);
  ASSERT_EQ(run_cli("simulate --model classical --Nx 16 --Np 32 --tmax 0.5 --sample-dt 0.05" + out()), 0);
  const KeyValues sum = read_kv_file((dir / "summary.kv").string());
  EXPECT_TRUE(sum.flag("D_monotone"));
  EXPECT_TRUE(sum.flag("decay_ok"));
  std::ifstream csv(dir / "series.csv");
  EXPECT_EQ(read_series_csv(csv).rows.size(), 11u);
  ASSERT_EQ(run_cli("report --input-dir " + dir.string() + out()), 0);
  const std::string first = slurp(dir / "report.txt");
  ASSERT_EQ(run_cli("report --input-dir " + dir.string() + out()), 0);
  EXPECT_EQ(slurp(dir / "report.txt"), first);
}

TEST_F(Cli, ErrorsMapToExitCodes) {
  EXPECT_EQ(run_cli("report --input-dir " + dir.string() + out()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("check --model " + (dir / "missing.ini").string() + out()), 2);
  EXPECT_EQ(run_cli("simulate --model classical --Nx 16 --Np 32 --tmax 0.1 --initial 'x +' " + out()), 2);
  EXPECT_EQ(run_cli("simulate --model classical --Nx 16 --Np 32 --P -1" + out()), 2);
}
