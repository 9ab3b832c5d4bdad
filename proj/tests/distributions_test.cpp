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

#include "nflbench/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "nflbench/stats.hpp"
#include "test_util.hpp"

namespace nflbench {
namespace {

using testing::Gen;
using testing::Rows;
using testing::Vec;

double Phi(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

// TV = 1 - sum_k min(p_k, q_k): an identity independent of the 1/2 L1 form.
double TvByOverlap(const std::vector<double>& p, const std::vector<double>& q) {
  double overlap = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) overlap += std::min(p[k], q[k]);
  return 1.0 - overlap;
}

DiagonalGaussian Gauss1(double mean, double var) { return {Vec({mean}), Vec({var})}; }

EmbeddingTable Line(int n) {
  Matrix m(n, 1);
  for (int i = 0; i < n; ++i) m(i, 0) = i;
  return EmbeddingTable::Create(m);
}

TEST(DistributionSpecTest, Validation) {
  EXPECT_NFL_ERROR(DistributionSpec::Gaussian(Vec({0}), Vec({-1})), ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(DistributionSpec::Gaussian(Vec({0, 1}), Vec({1})),
                   ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(DistributionSpec::Discrete({0.5, 0.6}), ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(DistributionSpec::Discrete({1.5, -0.5}), ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(DistributionSpec::FromSamples(Matrix(0, 1)), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(DistributionSpec::Discrete({0.5, 0.5 + 1e-10}));
}

TEST(SampleDistributionTest, PointMassAlwaysReturnsItsToken) {
  EmbeddingTable table = EmbeddingTable::Create(Rows({{4, 1}, {0, 0}, {2, 2}}));
  RngStream rng(301);
  Matrix s = SampleDistribution(DistributionSpec::Discrete({1, 0, 0}), 500, table, rng);
  for (Eigen::Index i = 0; i < s.rows(); ++i) EXPECT_EQ(s.row(i), table.row(0).transpose());
}

TEST(SampleDistributionTest, GaussianMeanWithinClt) {
  EmbeddingTable table = Line(2);
  RngStream rng(302);
  const std::size_t n = 100000;
  Vector mu = Vec({1.5, -3.0, 0.0});
  Vector var = Vec({4.0, 0.25, 1.0});
  Matrix s = SampleDistribution(DistributionSpec::Gaussian(mu, var), n, table, rng);
  Vector mean = s.colwise().mean().transpose();
  for (Eigen::Index c = 0; c < 3; ++c) {
    EXPECT_NEAR(mean(c), mu(c), 3.0 * std::sqrt(var(c) / n)) << "coordinate " << c;
  }
}

TEST(SampleDistributionTest, EmpiricalResamplesStoredRows) {
  Matrix stored = Rows({{1, 1}, {2, 3}, {5, 8}});
  EmbeddingTable table = Line(2);
  RngStream rng(303);
  Matrix s = SampleDistribution(DistributionSpec::FromSamples(stored), 3000, table, rng);
  std::vector<int> hits(3, 0);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    bool found = false;
    for (int k = 0; k < 3; ++k) {
      if (s.row(i) == stored.row(k)) {
        ++hits[k];
        found = true;
      }
    }
    ASSERT_TRUE(found);
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(SampleDistributionTest, DeterministicUnderSeed) {
  EmbeddingTable table = Line(5);
  auto spec = DistributionSpec::Discrete({0.1, 0.2, 0.3, 0.2, 0.2});
  RngStream a(304), b(304);
  EXPECT_EQ(SampleDistribution(spec, 100, table, a), SampleDistribution(spec, 100, table, b));
}

TEST(TvDiscreteTest, Examples) {
  EXPECT_EQ(TvDiscrete({0.3, 0.7}, {0.3, 0.7}), 0.0);
  EXPECT_EQ(TvDiscrete({1.0, 0.0}, {0.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(TvDiscrete({0.5, 0.5}, {0.75, 0.25}), 0.25);
  EXPECT_NFL_ERROR(TvDiscrete({0.5, 0.5}, {1.0, 0.0, 0.0}), ErrorCode::kMismatchedSupport);
  EXPECT_NFL_ERROR(TvDiscrete(DistributionSpec::Discrete({1.0}),
                              DistributionSpec::Gaussian(Vec({0}), Vec({1}))),
                   ErrorCode::kMismatchedSupport);
}

TEST(TvDiscreteTest, MatchesOverlapOracleOnRandomSimplices) {
  Gen gen(305);
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = gen.Simplex(50);
    auto q = gen.Simplex(50);
    double tv = TvDiscrete(p, q);
    EXPECT_NEAR(tv, TvByOverlap(p, q), 1e-12);
    EXPECT_EQ(tv, TvDiscrete(q, p));
    EXPECT_GE(tv, 0.0);
    EXPECT_LE(tv, 1.0);
    EXPECT_EQ(TvDiscrete(p, p), 0.0);
  }
}

TEST(TvDiscreteTest, TriangleInequality) {
  Gen gen(306);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 2 + gen.Index(30);
    auto p = gen.Simplex(n);
    auto q = gen.Simplex(n);
    auto r = gen.Simplex(n);
    EXPECT_LE(TvDiscrete(p, r), TvDiscrete(p, q) + TvDiscrete(q, r) + 1e-15);
  }
}

TEST(TvGaussianTest, EqualVarianceClosedForm) {
  for (double m : {0.5, 1.0, 2.0}) {
    TvEstimate tv = TvGaussianDiag(Gauss1(0, 1), Gauss1(m, 1));
    EXPECT_NEAR(tv.value, 2.0 * Phi(m / 2.0) - 1.0, 1e-6) << "m=" << m;
    EXPECT_EQ(tv.se, 0.0);
  }
  EXPECT_NEAR(TvGaussianDiag(Gauss1(0, 1), Gauss1(1, 1)).value, 0.38292, 1e-4);
  EXPECT_NEAR(TvGaussianDiag(Gauss1(-1, 9), Gauss1(2, 9)).value, 2.0 * Phi(0.5) - 1.0, 1e-6);
  EXPECT_EQ(TvGaussianDiag(Gauss1(0.3, 2), Gauss1(0.3, 2)).value, 0.0);
}

TEST(TvGaussianTest, UnequalVarianceAgreesWithCrossingsAndMonteCarlo) {
  TvEstimate tv = TvGaussianDiag(Gauss1(0, 1), Gauss1(0, 4));
  // Densities of N(0,1) and N(0,4) cross at +-x with x^2 = 8 ln 2 / 3.
  double x = std::sqrt(8.0 * std::log(2.0) / 3.0);
  double oracle = (2.0 * Phi(x) - 1.0) - (2.0 * Phi(x / 2.0) - 1.0);
  EXPECT_NEAR(tv.value, oracle, 1e-6);

  // TV = E_p[max(0, 1 - q/p)] estimated from 10^7 draws of N(0,1).
  std::mt19937_64 engine(307);
  std::normal_distribution<double> normal;
  const int n = 10000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = normal(engine);
    double ratio = 0.5 * std::exp(-z * z / 8.0 + z * z / 2.0);
    double h = std::max(0.0, 1.0 - ratio);
    sum += h;
    sum2 += h * h;
  }
  double mean = sum / n;
  double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(tv.value, mean, 3.0 * se);
}

TEST(TvGaussianTest, MultivariateQmcMatchesRotatedClosedForm) {
  // N(0, I) vs N((1,1), I) reduces to a 1-D shift of sqrt(2).
  DiagonalGaussian p{Vec({0, 0}), Vec({1, 1})};
  DiagonalGaussian q{Vec({1, 1}), Vec({1, 1})};
  TvEstimate tv = TvGaussianDiag(p, q);
  double oracle = 2.0 * Phi(std::sqrt(2.0) / 2.0) - 1.0;
  EXPECT_GT(tv.se, 0.0);
  EXPECT_NEAR(tv.value, oracle, 3.0 * tv.se + 1e-4);
}

TEST(TvGaussianTest, IdenticalCoordinatesFactorOut) {
  DiagonalGaussian p{Vec({0, 5, 1}), Vec({1, 2, 3})};
  DiagonalGaussian q{Vec({1, 5, 1}), Vec({1, 2, 3})};
  TvEstimate tv = TvGaussianDiag(p, q);
  EXPECT_NEAR(tv.value, 2.0 * Phi(0.5) - 1.0, 1e-6);
  EXPECT_EQ(tv.se, 0.0);
}

TEST(TvGaussianTest, PropertiesOnRandomPairs) {
  Gen gen(308);
  for (int trial = 0; trial < 200; ++trial) {
    DiagonalGaussian p = Gauss1(gen.Uniform(-3, 3), gen.Uniform(0.05, 5));
    DiagonalGaussian q = Gauss1(gen.Uniform(-3, 3), gen.Uniform(0.05, 5));
    DiagonalGaussian r = Gauss1(gen.Uniform(-3, 3), gen.Uniform(0.05, 5));
    double pq = TvGaussianDiag(p, q).value;
    EXPECT_NEAR(pq, TvGaussianDiag(q, p).value, 1e-6);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1.0);
    EXPECT_LE(TvGaussianDiag(p, r).value,
              pq + TvGaussianDiag(q, r).value + 2e-6);
  }
}

TEST(TvGaussianTest, DegenerateAndInvalidInputs) {
  EXPECT_EQ(TvGaussianDiag(Gauss1(0, 0), Gauss1(0, 1)).value, 1.0);
  EXPECT_NFL_ERROR(TvGaussianDiag(Gauss1(0, NAN), Gauss1(0, 1)), ErrorCode::kNonFiniteDensity);
  EXPECT_NFL_ERROR(TvGaussianDiag(Gauss1(0, 1), {Vec({0, 0}), Vec({1, 1})}),
                   ErrorCode::kMismatchedSupport);
}

TEST(TotalVariationTest, MixedKindsUseVoronoiCells) {
  EmbeddingTable table = Line(5);
  // N(2, 0.01) puts all but ~5e-7 of its mass in the cell of token 2.
  auto gauss = DistributionSpec::Gaussian(Vec({2}), Vec({0.01}));
  TvEstimate same = TotalVariation(gauss, DistributionSpec::Discrete({0, 0, 1, 0, 0}), table);
  EXPECT_LE(same.value, 1e-4);
  TvEstimate far = TotalVariation(gauss, DistributionSpec::Discrete({1, 0, 0, 0, 0}), table);
  EXPECT_NEAR(far.value, 1.0, 1e-4);
  // N(2, 1) vs the uniform baseline: cell masses have a closed form.
  auto wide = DistributionSpec::Gaussian(Vec({2}), Vec({1}));
  std::vector<double> cells = {Phi(-1.5), Phi(-0.5) - Phi(-1.5), Phi(0.5) - Phi(-0.5),
                               Phi(1.5) - Phi(0.5), 1.0 - Phi(1.5)};
  double oracle = TvDiscrete(cells, std::vector<double>(5, 0.2));
  TvEstimate est = TotalVariation(wide, DistributionSpec::Discrete(std::vector<double>(5, 0.2)),
                                  table);
  EXPECT_GT(est.se, 0.0);
  EXPECT_NEAR(est.value, oracle, 4.0 * est.se);
}

TEST(TotalVariationTest, EmpiricalHistogramConvergesToSource) {
  EmbeddingTable table = Line(6);
  auto source = DistributionSpec::Discrete({0.05, 0.1, 0.15, 0.2, 0.25, 0.25});
  double previous = 1.0;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    RngStream rng(309, {n});
    Matrix samples = SampleDistribution(source, n, table, rng);
    double tv = TvDiscrete(DiscretizeOntoVocabulary(samples, table), source.discrete().probs);
    EXPECT_LT(tv, previous) << "n=" << n;
    previous = tv;
  }
  EXPECT_LT(previous, 0.01);
}

TEST(BaselineTest, UniformOverVocabulary) {
  Vocabulary vocab = Vocabulary::Create({"w", "x", "y", "z"});
  EmbeddingTable table = Line(4);
  DistributionSpec b = BaselineDistribution(vocab, table);
  EXPECT_EQ(b.discrete().probs, std::vector<double>(4, 0.25));
  EXPECT_EQ(TvDiscrete(b, b), 0.0);
  RngStream rng(310);
  auto tokens = SampleTokens(b.discrete(), 10000, rng);
  std::vector<double> counts(4, 0.0);
  for (TokenId t : tokens) counts[t] += 1.0;
  EXPECT_GT(stats::ChiSquareGoodnessOfFit(counts, b.discrete().probs).p_value, 0.01);
}

TEST(BaselineTest, UniformOverSubset) {
  DistributionSpec b = UniformOver({1, 3}, 4);
  EXPECT_EQ(b.discrete().probs, (std::vector<double>{0, 0.5, 0, 0.5}));
  EXPECT_NFL_ERROR(UniformOver({}, 4), ErrorCode::kInvalidArgument);
  EXPECT_NFL_ERROR(UniformOver({4}, 4), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace nflbench
