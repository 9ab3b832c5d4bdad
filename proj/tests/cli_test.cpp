// Copyright 2026 The nflbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

const std::string kSourceDir = NFLBENCH_SOURCE_DIR;
const std::string kCli = NFLBENCH_CLI_PATH;

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun Exec(const std::string& args) {
  CliRun r;
  std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nflbench_cli_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::create_directories(dir_);
    config_ = dir_ / "small.json";
    std::ofstream(config_) << R"({"schema": 1, "embedding_file": ")" << kSourceDir
                           << R"(/configs/gaussian_1d.emb", "prompt": "g020",
      "prior": {"mean": [0], "var": [1]},
      "mechanisms": [{"mechanism": "gaussian", "sigma_eps": [0.5, 1.5]}],
      "attacker": {"kind": "calibrated", "iterations": 64},
      "baseline": {"kind": "uniform_over", "tokens": "z000 z010 z020"},
      "n_samples": 200, "tv_samples": 1000, "seed": 11})";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }
  std::string Config() const { return "--config '" + config_.string() + "'"; }

  fs::path dir_;
  fs::path config_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(Exec("--help").exit_code, 0);
  EXPECT_EQ(Exec("").exit_code, 2);
  EXPECT_EQ(Exec("sweep").exit_code, 2);
  EXPECT_EQ(Exec("frobnicate").exit_code, 2);
}

TEST_F(CliTest, ProtectAndAttack) {
  CliRun p = Exec("protect " + Config() + " --point 1");
  ASSERT_EQ(p.exit_code, 0);
  EXPECT_NE(p.out.find("\"steps\""), std::string::npos);
  CliRun a = Exec("attack " + Config() + " --trace " + Path("trace.csv"));
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_NE(a.out.find("\"recovery_extent\""), std::string::npos);
  EXPECT_EQ(Slurp(dir_ / "trace.csv").rfind("iter,mean_regret,cumulative\n", 0), 0u);
  EXPECT_EQ(Exec("protect " + Config() + " --point 9").exit_code, 2);
}

TEST_F(CliTest, SweepIsByteIdenticalUnderAFixedSeed) {
  ASSERT_EQ(Exec("sweep " + Config() + " --seed 3 --out " + Path("a.csv")).exit_code, 0);
  ASSERT_EQ(Exec("sweep " + Config() + " --seed 3 --out " + Path("b.csv")).exit_code, 0);
  ASSERT_EQ(Exec("sweep " + Config() + " --seed 4 --out " + Path("c.csv")).exit_code, 0);
  std::string a = Slurp(dir_ / "a.csv");
  EXPECT_EQ(a.rfind("mech,param,eps_p,eps_p_se,eps_u,eps_u_se,delta,", 0), 0u);
  EXPECT_EQ(a, Slurp(dir_ / "b.csv"));
  EXPECT_NE(a, Slurp(dir_ / "c.csv"));
  CliRun to_stdout = Exec("sweep " + Config() + " --seed 3");
  EXPECT_EQ(to_stdout.exit_code, 0);
  EXPECT_EQ(to_stdout.out, a);
}

TEST_F(CliTest, ExportConvertsJsonResults) {
  ASSERT_EQ(Exec("sweep " + Config() + " --out " + Path("r.json")).exit_code, 0);
  ASSERT_EQ(Exec("sweep " + Config() + " --out " + Path("r.csv")).exit_code, 0);
  ASSERT_EQ(Exec("export --in " + Path("r.json") + " --format csv --out " + Path("x.csv"))
                .exit_code,
            0);
  EXPECT_EQ(Slurp(dir_ / "x.csv"), Slurp(dir_ / "r.csv"));
  ASSERT_EQ(Exec("export --in " + Path("r.json") + " --format json --out " + Path("y.json"))
                .exit_code,
            0);
  EXPECT_EQ(Slurp(dir_ / "y.json"), Slurp(dir_ / "r.json"));
  std::ofstream(dir_ / "bad.json") << "{\"records\": 5}";
  EXPECT_EQ(Exec("export --in " + Path("bad.json") + " --format csv").exit_code, 2);
}

TEST_F(CliTest, VerifyExitCodes) {
  CliRun pass = Exec("verify-nfl --config '" + kSourceDir + "/configs/degenerate.json'");
  EXPECT_EQ(pass.exit_code, 0) << pass.out;
  EXPECT_NE(pass.out.find("PASS"), std::string::npos);

  CliRun fault = Exec("verify-nfl --config '" + kSourceDir + "/tests/data/faulty_c1.json'");
  EXPECT_EQ(fault.exit_code, 1) << fault.out;
  EXPECT_NE(fault.out.find("VIOLATION"), std::string::npos);

  std::ofstream(dir_ / "broken.json") << R"({"schema": 1, "prompt": 3})";
  EXPECT_EQ(Exec("verify-nfl --config " + Path("broken.json")).exit_code, 2);
  std::ofstream(dir_ / "nocal.json") << Slurp(config_).replace(
      Slurp(config_).find("\"calibrated\""), 12, "\"nearest_neighbor\"");
  EXPECT_EQ(Exec("verify-nfl --config " + Path("nocal.json")).exit_code, 2);
}

}  // namespace
