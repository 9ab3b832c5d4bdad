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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nflbench/experiment.hpp"
#include "nflbench/mock_llm.hpp"
#include "nflbench/results_io.hpp"
#include "test_util.hpp"

namespace nflbench {
namespace {

const std::string kSourceDir = NFLBENCH_SOURCE_DIR;

std::string SmallConfig(const std::string& mechanisms, const std::string& extra = "") {
  return R"({"schema": 1, "embedding_file": ")" + kSourceDir +
         R"(/configs/gaussian_1d.emb", "prompt": "g020", "prior": {"mean": [0], "var": [1]},
  "mechanisms": )" + mechanisms + R"(,
  "attacker": {"kind": "calibrated", "iterations": 64, "p": 0.5, "scale": 1.0},
  "baseline": {"kind": "uniform_over", "tokens": "z000 z005 z010 z015 z020"},
  "n_samples": 300, "tv_samples": 2000, "seed": 99, "threads": 1)" + extra + "}";
}

Experiment Build(const std::string& json) {
  return Experiment::FromConfig(ParseExperimentConfig(json, kSourceDir));
}

TEST(ConfigTest, ParsesGridAndDefaults) {
  ExperimentConfig cfg = ParseExperimentConfig(
      SmallConfig(R"([{"mechanism": "gaussian", "sigma_eps": {"linspace": [0, 1, 3]}},
                      {"mechanism": "identity"}])"),
      kSourceDir);
  ASSERT_EQ(cfg.grid.size(), 4u);
  EXPECT_EQ(cfg.grid[0].mechanism, Mechanism::kGaussianEmbedding);
  EXPECT_DOUBLE_EQ(cfg.grid[1].sigma_eps, 0.5);
  EXPECT_EQ(cfg.grid[3].mechanism, Mechanism::kIdentity);
  EXPECT_EQ(cfg.n_samples, 300u);
  EXPECT_EQ(cfg.orientation, LeakageOrientation::kProtectedMinusBaseline);
  EXPECT_EQ(cfg.xi, 1.0);
}

TEST(ConfigTest, RejectsInvalidInput) {
  const std::string grid = R"([{"mechanism": "identity"}])";
  EXPECT_NFL_ERROR(ParseExperimentConfig("{not json", kSourceDir), ErrorCode::kConfig);
  EXPECT_NFL_ERROR(ParseExperimentConfig(SmallConfig(grid, R"(, "bogus": 1)"), kSourceDir),
                   ErrorCode::kConfig);
  EXPECT_NFL_ERROR(ParseExperimentConfig(SmallConfig(grid, R"(, "xi": 2)"), kSourceDir),
                   ErrorCode::kConfig);
  EXPECT_NFL_ERROR(ParseExperimentConfig(SmallConfig(grid, R"(, "schema": 7)"), kSourceDir),
                   ErrorCode::kConfig);
  EXPECT_NFL_ERROR(
      ParseExperimentConfig(SmallConfig(R"([{"mechanism": "laplace"}])"), kSourceDir),
      ErrorCode::kConfig);
  EXPECT_NFL_ERROR(
      ParseExperimentConfig(SmallConfig(R"([{"mechanism": "gaussian", "sigma_eps": -1}])"),
                            kSourceDir),
      ErrorCode::kConfig);
  EXPECT_ANY_THROW(Build(R"({"schema": 1, "embedding_file": "missing.emb", "prompt": "a",
                             "mechanisms": [{"mechanism": "identity"}]})"));
}

TEST(ConfigTest, NSamplesFloor) {
  std::string json = SmallConfig(R"([{"mechanism": "identity"}])");
  json.replace(json.find("\"n_samples\": 300"), 16, "\"n_samples\": 99");
  EXPECT_NFL_ERROR(ParseExperimentConfig(json, kSourceDir), ErrorCode::kConfig);
}

class ProtocolTest : public ::testing::Test {
 protected:
  ProtocolTest()
      : space_(LoadEmbeddingFile(kSourceDir + "/configs/gaussian_1d.emb")),
        d_(MakePrompt({20}, space_.vocab.size())) {
    std::vector<std::pair<Prompt, Prompt>> entries;
    std::size_t v = space_.vocab.size();
    for (TokenId t = 0; t < v; ++t) {
      entries.emplace_back(MakePrompt({t}, v), MakePrompt({(t + 1) % v}, v));
    }
    llm_.emplace(MockLLM::Create(entries, space_.table));
  }
  EmbeddingSpace space_;
  std::optional<MockLLM> llm_;
  Prompt d_;
};

TEST_F(ProtocolTest, MockIsTotalAndPrefersPrefixes) {
  std::size_t v = space_.vocab.size();
  EmbeddingTable table = space_.table;
  MockLLM llm = MockLLM::Create({{MakePrompt({1, 2}, v), MakePrompt({10}, v)},
                                 {MakePrompt({1}, v), MakePrompt({11}, v)},
                                 {MakePrompt({40}, v), MakePrompt({12}, v)}},
                                table);
  EXPECT_EQ(llm.Respond(MakePrompt({1, 2, 3}, v)), MakePrompt({10}, v));
  EXPECT_EQ(llm.Respond(MakePrompt({1, 5}, v)), MakePrompt({11}, v));
  // No key is a prefix: fall back to the nearest key embedding.
  EXPECT_EQ(llm.Respond(MakePrompt({39}, v)), MakePrompt({12}, v));
  testing::Gen gen(601);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> ids(1 + gen.Index(4));
    for (auto& id : ids) id = gen.Index(v);
    EXPECT_NO_THROW(llm.Respond(MakePrompt(ids, v)));
  }
  EXPECT_NFL_ERROR(MockLLM::Create({}, table), ErrorCode::kInvalidArgument);
}

TEST_F(ProtocolTest, IdentityLeavesTheResponseUnchanged) {
  ProtectionConfig cfg;
  ProtocolRun run = RunProtocol(d_, cfg, *llm_, space_.table, space_.vocab);
  EXPECT_EQ(run.protected_prompt, d_);
  EXPECT_EQ(run.response, llm_->Respond(d_));
  ASSERT_EQ(run.steps.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(run.steps[i].step, i + 1);
}

TEST_F(ProtocolTest, DeterministicUnderSeed) {
  ProtectionConfig cfg{Mechanism::kGaussianEmbedding, 1.0, 1, 3.0, 17};
  ProtocolRun a = RunProtocol(d_, cfg, *llm_, space_.table, space_.vocab);
  ProtocolRun b = RunProtocol(d_, cfg, *llm_, space_.table, space_.vocab);
  EXPECT_EQ(a.protected_prompt, b.protected_prompt);
  EXPECT_EQ(a.response, b.response);
}

TEST_F(ProtocolTest, HeavyNoiseChangesTheResponse) {
  Prompt clean = llm_->Respond(d_);
  int changed = 0;
  const int runs = 1000;
  for (int s = 0; s < runs; ++s) {
    ProtectionConfig cfg{Mechanism::kGaussianEmbedding, 1.0, 1, 50.0,
                         static_cast<std::uint64_t>(s)};
    if (!(RunProtocol(d_, cfg, *llm_, space_.table, space_.vocab).response == clean)) ++changed;
  }
  EXPECT_GE(changed, 990);
}

TEST(SweepTest, DeterministicAndThreadIndependent) {
  const std::string grid = R"([{"mechanism": "gaussian", "sigma_eps": [0.5, 1.5]}])";
  std::string one = RecordsToCsv(Sweep(Build(SmallConfig(grid))));
  EXPECT_EQ(one, RecordsToCsv(Sweep(Build(SmallConfig(grid)))));
  std::string json = SmallConfig(grid);
  json.replace(json.find("\"threads\": 1"), 12, "\"threads\": 3");
  EXPECT_EQ(one, RecordsToCsv(Sweep(Build(json))));
  Experiment other = Build(SmallConfig(grid));
  other.set_seed(100);
  EXPECT_NE(one, RecordsToCsv(Sweep(other)));
}

TEST(SweepTest, UtilityLossGrowsWithNoise) {
  auto records = Sweep(Build(SmallConfig(
      R"([{"mechanism": "identity"}, {"mechanism": "gaussian", "sigma_eps": [0.5, 1.0, 3.0]}])")));
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    EXPECT_EQ(r.status, RecordStatus::kOk) << r.message;
    EXPECT_GE(r.delta, 0.0);
    for (double tv : {r.tv_p_pt.value, r.tv_pt_pb.value, r.tv_p_pb.value}) {
      EXPECT_GE(tv, 0.0);
      EXPECT_LE(tv, 1.0);
    }
    EXPECT_GE(r.eps_p.value, -1.0);
    EXPECT_LE(r.eps_p.value, 1.0);
  }
  EXPECT_NEAR(records[0].eps_u.value, 0.0, 1e-12);
  EXPECT_EQ(records[0].delta, 0.0);
  EXPECT_GT(records[3].delta, 0.0);
  EXPECT_EQ(records[0].tv_p_pt.value, 0.0);
  for (std::size_t i = 1; i + 1 < records.size(); ++i) {
    EXPECT_LE(records[i].eps_u.value,
              records[i + 1].eps_u.value + 3.0 * std::hypot(records[i].eps_u.se,
                                                            records[i + 1].eps_u.se));
  }
  EXPECT_GT(records[3].eps_u.value, records[1].eps_u.value);
}

TradeoffRecord Point(std::size_t index, double eps_p, double eps_u) {
  TradeoffRecord r;
  r.index = index;
  r.mechanism = "gaussian";
  r.eps_p = {eps_p, 0.01};
  r.eps_u = {eps_u, 0.01};
  return r;
}

TEST(SelectOptimumTest, FiltersByXiThenMinimisesUtilityLoss) {
  std::vector<TradeoffRecord> rs = {Point(0, 0.9, 0.01), Point(1, 0.5, 0.2),
                                    Point(2, 0.3, 0.1), Point(3, 0.1, 0.4)};
  EXPECT_EQ(SelectOptimum(rs, 0.5), 2u);
  EXPECT_EQ(SelectOptimum(rs, 1.0), 0u);
  EXPECT_EQ(SelectOptimum(rs, 0.05), std::nullopt);
  rs[2].status = RecordStatus::kError;
  EXPECT_EQ(SelectOptimum(rs, 0.5), 1u);
}

TEST(ResultsIoTest, CsvLayout) {
  TradeoffRecord r = Point(0, 0.25, 0.5);
  r.param = 1.5;
  r.c1 = std::nan("");
  std::string csv = RecordsToCsv({r});
  std::istringstream in(csv);
  std::string header, line, rest;
  ASSERT_TRUE(std::getline(in, header));
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_FALSE(std::getline(in, rest));
  EXPECT_EQ(header, kCsvHeader);
  EXPECT_EQ(line.substr(0, 23), "gaussian,1.5,0.25,0.01,");
  EXPECT_NE(line.find("nan"), std::string::npos);
  EXPECT_EQ(RecordsToCsv({}), std::string(kCsvHeader) + "\n");
}

TEST(ResultsIoTest, JsonRoundTrip) {
  auto records = Sweep(Build(SmallConfig(R"([{"mechanism": "gaussian", "sigma_eps": [0.7]}])")));
  records.push_back(Point(1, 0.1, 0.2));
  records.back().status = RecordStatus::kAssumptionViolated;
  records.back().message = "alpha";
  records.back().c1 = std::nan("");
  std::string json = RecordsToJson(records);
  auto back = RecordsFromJson(json);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(RecordsToJson(back), json);
  EXPECT_EQ(RecordsToCsv(back), RecordsToCsv(records));
  EXPECT_EQ(back[1].status, RecordStatus::kAssumptionViolated);
  EXPECT_TRUE(std::isnan(back[1].c1));
  EXPECT_NFL_ERROR(RecordsFromJson("[1, 2"), ErrorCode::kParse);
  EXPECT_NFL_ERROR(RecordsFromJson(R"({"records": 3})"), ErrorCode::kParse);
}

TEST(ResultsIoTest, ExportWritesAndValidates) {
  std::vector<TradeoffRecord> rs = {Point(0, 0.2, 0.3)};
  auto path = std::filesystem::temp_directory_path() / "nflbench_export_test.csv";
  ExportResults(rs, ResultFormat::kCsv, path.string());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), RecordsToCsv(rs));
  std::filesystem::remove(path);
  EXPECT_NFL_ERROR(ExportResults({}, ResultFormat::kCsv, path.string()),
                   ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(ExportResults(rs, ResultFormat::kCsv, "/nonexistent/dir/out.csv"),
                   ErrorCode::kIo);
  EXPECT_EQ(ParseResultFormat("json"), ResultFormat::kJson);
  EXPECT_NFL_ERROR(ParseResultFormat("xml"), ErrorCode::kInvalidArgument);
}

TEST(VerifyTest, VerdictFromRecords) {
  TradeoffRecord ok = Point(0, 0.2, 0.3);
  ok.nfl_slack = {0.05, 0.01};
  ok.slack_l2 = {0.0, 0.01};
  ok.slack_l3 = {0.1, 0.01};
  ok.decomposition.sum = 0.05;
  EXPECT_EQ(VerifyRecords({ok}).verdict, Verdict::kPass);
  TradeoffRecord av = ok;
  av.status = RecordStatus::kAssumptionViolated;
  VerifyReport r = VerifyRecords({ok, av});
  EXPECT_EQ(r.verdict, Verdict::kPass);
  EXPECT_EQ(r.assumption_violated, 1u);
  TradeoffRecord bad = ok;
  bad.nfl_slack = {-0.5, 0.01};
  EXPECT_EQ(VerifyRecords({ok, bad}).verdict, Verdict::kViolation);
  TradeoffRecord err = ok;
  err.status = RecordStatus::kError;
  EXPECT_EQ(VerifyRecords({ok, err}).verdict, Verdict::kConfigError);
  EXPECT_EQ(VerifyRecords({bad, err}).verdict, Verdict::kViolation);
}

}  // namespace
}  // namespace nflbench
