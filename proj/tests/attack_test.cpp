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

#include "nflbench/attack.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace nflbench {
namespace {

using testing::Rows;
using testing::Vec;

AttackerSpec Spec(AttackerKind kind, std::size_t iterations = 1) {
  AttackerSpec s;
  s.kind = kind;
  s.iterations = iterations;
  return s;
}

AttackerSpec Calibrated(double p, std::size_t iterations, double scale = 1.0) {
  AttackerSpec s = Spec(AttackerKind::kCalibrated, iterations);
  s.calibrated_p = p;
  s.calibrated_scale = scale;
  return s;
}

TEST(AttackerSpecTest, Validation) {
  EXPECT_NFL_ERROR(Spec(AttackerKind::kNearestNeighbor, 0).Validate(),
                   ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(Calibrated(1.0, 4).Validate(), ErrorCode::kInvalidExponent);
  EXPECT_NFL_ERROR(Calibrated(0.0, 4).Validate(), ErrorCode::kInvalidExponent);
  EXPECT_NFL_ERROR(Calibrated(0.5, 4, 0.0).Validate(), ErrorCode::kInvalidArgument);
  for (AttackerKind k : {AttackerKind::kNearestNeighbor, AttackerKind::kContextualBigram,
                         AttackerKind::kIterativeGradient, AttackerKind::kCalibrated}) {
    EXPECT_EQ(ParseAttackerKind(AttackerKindName(k)), k);
  }
}

TEST(NearestNeighborInversionTest, Examples) {
  auto table = EmbeddingTable::Create(Rows({{0, 0}, {1, 0}}));
  // Distances 0.6 to id 0 and 0.4 to id 1.
  EXPECT_EQ(InvertNearestNeighbor({Vec({0.6, 0})}, table).token_ids, (std::vector<TokenId>{1}));
  Prompt d = MakePrompt({1, 0, 1}, 2);
  ProtectionConfig identity;
  ProtectedPrompt p = ProtectPrompt(d, identity, table, 1);
  EXPECT_EQ(InvertNearestNeighbor(p, table), d);
}

TEST(NearestNeighborInversionTest, IdentityOnUnprotectedPrompts) {
  testing::Gen gen(201);
  for (int trial = 0; trial < 100; ++trial) {
    auto table = EmbeddingTable::Create(gen.RandomMatrix(30, 3));
    std::vector<TokenId> ids(1 + gen.Index(10));
    for (auto& id : ids) id = gen.Index(30);
    Prompt d = MakePrompt(ids, 30);
    ProtectionConfig tiny;
    tiny.mechanism = Mechanism::kDChi;
    tiny.eta = 1e9;
    tiny.pi_dim = 3;
    EXPECT_EQ(InvertNearestNeighbor(ProtectPrompt(d, tiny, table, trial), table), d);
  }
}

Vocabulary ABVocab() { return Vocabulary::Create({"a", "b", "c"}); }

TEST(BigramTest, PredictsFromCounts) {
  Vocabulary v = ABVocab();
  BigramModel model = BigramModel::Train({Tokenize("a b a b", v)}, 3);
  // "a ?": whatever was observed at position 1, the left neighbour is a.
  Prompt observed = Tokenize("a c", v);
  EXPECT_EQ(InvertContextual(observed, model, 1), v.IdOf("b"));
}

TEST(BigramTest, SingleTokenTypeAlwaysWins) {
  Vocabulary v = ABVocab();
  BigramModel model = BigramModel::Train({Tokenize("c c c", v)}, 3);
  Prompt observed = Tokenize("a b c a", v);
  for (std::size_t m = 0; m < observed.size(); ++m) {
    EXPECT_EQ(InvertContextual(observed, model, m), v.IdOf("c"));
  }
}

TEST(BigramTest, TieAtPositionZeroGoesToLowestId) {
  Vocabulary v = ABVocab();
  BigramModel model = BigramModel::Train({Tokenize("c a", v), Tokenize("b", v)}, 3);
  EXPECT_EQ(InvertContextual(Tokenize("b b", v), model, 0), 0u);
}

TEST(BigramTest, EmptyCorpus) {
  EXPECT_NFL_ERROR(BigramModel::Train({}, 3), ErrorCode::kEmptyCorpus);
  EXPECT_NFL_ERROR(Attacker(EmbeddingTable::Create(Rows({{0}, {1}})), EncoderG::Identity(1),
                            Spec(AttackerKind::kContextualBigram)),
                   ErrorCode::kEmptyCorpus);
}

TEST(IterativeAttackerTest, ConvergesToObservedToken) {
  auto table = EmbeddingTable::Create(Rows({{0, 0}, {3, 1}, {-2, 4}}));
  AttackerSpec spec = Spec(AttackerKind::kIterativeGradient, 200);
  AttackTrace trace = RunIterativeAttacker({table.row(2)}, table, EncoderG::Identity(2), spec);
  EXPECT_EQ(trace.FinalPrompt().token_ids, (std::vector<TokenId>{2}));
  EXPECT_EQ(trace.regret.size(), 200u);
}

TEST(IterativeAttackerTest, SingleIterationSnapshot) {
  auto table = EmbeddingTable::Create(Rows({{0, 0}, {3, 1}}));
  AttackTrace trace = RunIterativeAttacker({Vec({3, 1})}, table, EncoderG::Identity(2),
                                           Spec(AttackerKind::kIterativeGradient, 1));
  EXPECT_EQ(trace.iterations, 1u);
  EXPECT_EQ(trace.regret.size(), 1u);
}

TEST(IterativeAttackerTest, DistanceFollowsGradientRecursion) {
  auto table = EmbeddingTable::Create(Rows({{0, 0}, {3, 4}}));
  AttackerSpec spec = Spec(AttackerKind::kIterativeGradient, 1000);
  EncoderG g = EncoderG::Create(Rows({{2, 0}, {0, 2}}));
  Vector observed = Vec({3, 4});
  AttackTrace trace = RunIterativeAttacker({observed}, table, g, spec);
  // x_i - y = prod_{j<=i} (1 - 1/(j+1)) (x_0 - y) = -y / (i + 1), with y = g(w~).
  double y = g.Apply(observed).norm();
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_NEAR(trace.regret[i], y / static_cast<double>(i + 2), 1e-12 * y);
  }
  // Log-log slope of the distance over the second half of the run.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 500; i < 1000; ++i) {
    double x = std::log(static_cast<double>(i + 1));
    double l = std::log(trace.regret[i]);
    sx += x;
    sy += l;
    sxx += x * x;
    sxy += x * l;
    n += 1;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -1.0, 0.1);
}

TEST(CalibratedAttackerTest, SingleIterationRegretIsScale) {
  auto table = EmbeddingTable::Create(Rows({{0}, {1}}));
  AttackTrace trace =
      RunCalibratedAttacker(MakePrompt({1}, 2), table, EncoderG::Identity(1), Calibrated(0.5, 1, 2.5));
  ASSERT_EQ(trace.regret.size(), 1u);
  EXPECT_DOUBLE_EQ(trace.regret[0], 2.5);
  EXPECT_DOUBLE_EQ(trace.embedding(0, 0)(0), 3.5);
}

TEST(CalibratedAttackerTest, IterateDistanceIsExact) {
  auto table = EmbeddingTable::Create(Rows({{0, 0}, {1, 2}}));
  EncoderG g = EncoderG::Create(Rows({{1, 1}, {0, 2}}));
  Prompt d = MakePrompt({1, 0}, 2);
  AttackerSpec spec = Calibrated(0.3, 50, 0.7);
  AttackTrace trace = RunCalibratedAttacker(d, table, g, spec);
  for (std::size_t i = 0; i < 50; ++i) {
    double expected = 0.7 * std::pow(static_cast<double>(i + 1), 0.3 - 1.0);
    for (std::size_t m = 0; m < 2; ++m) {
      double dist = (trace.embedding(i, m) - g.Apply(table.row(d.token_ids[m]))).norm();
      EXPECT_NEAR(dist, expected, 1e-12);
      EXPECT_EQ(trace.token(i, m), d.token_ids[m]);
    }
    EXPECT_NEAR(trace.regret[i], expected, 1e-15);
  }
}

TEST(CalibratedAttackerTest, PartialSumMatchesIntegralBounds) {
  auto table = EmbeddingTable::Create(Rows({{0}, {1}}));
  const std::size_t iterations = 10000;
  AttackTrace trace = RunCalibratedAttacker(MakePrompt({0}, 2), table, EncoderG::Identity(1),
                                            Calibrated(0.5, iterations));
  double root = std::sqrt(static_cast<double>(iterations));
  double normalised = trace.CumulativeRegret().back() / root;
  // 2 sqrt(I) - 2 <= sum_{i<=I} i^(-1/2) <= 2 sqrt(I) - 1.
  EXPECT_GE(normalised, (2.0 * root - 2.0) / root);
  EXPECT_LE(normalised, (2.0 * root - 1.0) / root);
}

TEST(CalibratedAttackerTest, DeclaredConstantsBoundEveryPrefix) {
  auto table = EmbeddingTable::Create(Rows({{0}, {1}}));
  for (double p : {0.1, 0.3, 0.5, 0.8, 0.95}) {
    AttackerSpec spec = Calibrated(p, 4096, 1.7);
    AttackTrace trace = RunCalibratedAttacker(MakePrompt({1}, 2), table, EncoderG::Identity(1), spec);
    auto s = trace.CumulativeRegret();
    for (std::size_t i = 1; i <= s.size(); ++i) {
      double ip = std::pow(static_cast<double>(i), p);
      ASSERT_LE(spec.CalibratedC0() * ip, s[i - 1]) << "p=" << p << " i=" << i;
      ASSERT_LE(s[i - 1], spec.CalibratedC2() * ip) << "p=" << p << " i=" << i;
    }
  }
}

TEST(CalibratedAttackerTest, InvalidExponent) {
  auto table = EmbeddingTable::Create(Rows({{0}, {1}}));
  EXPECT_NFL_ERROR(RunCalibratedAttacker(MakePrompt({0}, 2), table, EncoderG::Identity(1),
                                         Calibrated(1.2, 10)),
                   ErrorCode::kInvalidExponent);
}

TEST(RegretExponentTest, RecoversCalibratedExponent) {
  auto table = EmbeddingTable::Create(Rows({{0}, {1}}));
  for (double p : {0.3, 0.5, 0.8}) {
    AttackTrace trace = RunCalibratedAttacker(MakePrompt({0}, 2), table, EncoderG::Identity(1),
                                              Calibrated(p, 4096));
    RegretFit fit = EstimateRegretExponent(trace);
    EXPECT_NEAR(fit.p, p, 0.05);
    auto s = trace.CumulativeRegret();
    for (std::size_t i = 1; i <= s.size(); ++i) {
      double ip = std::pow(static_cast<double>(i), fit.p);
      ASSERT_LE(fit.c0 * ip, s[i - 1] * (1 + 1e-12));
      ASSERT_LE(s[i - 1], fit.c2 * ip * (1 + 1e-12));
    }
  }
}

TEST(RegretExponentTest, DegenerateAndShortTraces) {
  AttackTrace zero;
  zero.iterations = 32;
  zero.length = 1;
  zero.regret.assign(32, 0.0);
  EXPECT_NFL_ERROR(EstimateRegretExponent(zero), ErrorCode::kDegenerateTrace);
  AttackTrace shortish = zero;
  shortish.iterations = 8;
  shortish.regret.assign(8, 1.0);
  EXPECT_NFL_ERROR(EstimateRegretExponent(shortish), ErrorCode::kInvalidArgument);
}

TEST(AttackerTest, OutputsAreValidIdsForEveryKind) {
  testing::Gen gen(202);
  auto table = EmbeddingTable::Create(gen.RandomMatrix(12, 2));
  EncoderG g = EncoderG::Create(Rows({{1.5, 0.2}, {0.1, 0.8}}));
  BigramModel model = BigramModel::Train({MakePrompt({1, 2, 3, 1, 5}, 12)}, 12);
  for (AttackerKind kind : {AttackerKind::kNearestNeighbor, AttackerKind::kContextualBigram,
                            AttackerKind::kIterativeGradient, AttackerKind::kCalibrated}) {
    Attacker attacker(table, g, Spec(kind, 20), model);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vector> observed(1 + gen.Index(4));
      for (auto& v : observed) v = gen.RandomVector(2);
      AttackTrace trace = attacker.Run(observed);
      ASSERT_EQ(trace.recovered.size(), 20 * observed.size());
      for (TokenId id : trace.recovered) ASSERT_LT(id, 12u);
      for (double r : trace.regret) ASSERT_GE(r, 0.0);
    }
  }
}

TEST(AttackerTest, CalibratedTargetsTheObservedReading) {
  auto table = EmbeddingTable::Create(Rows({{0}, {1}, {2}}));
  Attacker attacker(table, EncoderG::Identity(1), Calibrated(0.5, 4));
  AttackTrace trace = attacker.Run({Vec({1.9})});
  EXPECT_EQ(trace.FinalPrompt().token_ids, (std::vector<TokenId>{2}));
  EXPECT_DOUBLE_EQ(trace.embedding(3, 0)(0), 2.0 + 0.5);
}

}  // namespace
}  // namespace nflbench
