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

#ifndef NFLBENCH_DISTRIBUTIONS_HPP_
#define NFLBENCH_DISTRIBUTIONS_HPP_

#include <cstdint>
#include <variant>
#include <vector>

#include "nflbench/embedding_space.hpp"
#include "nflbench/rng.hpp"

namespace nflbench {

struct DiagonalGaussian {
  Vector mean;
  Vector var;
};

struct DiscreteOverVocab {
  std::vector<double> probs;
};

struct Empirical {
  Matrix samples;  // one sample per row
};

// P, P~, P^ and P0 all use this representation.
class DistributionSpec {
 public:
  enum class Kind { kDiagonalGaussian, kDiscrete, kEmpirical };

  // Variances must be >= 0 and finite.
  static DistributionSpec Gaussian(Vector mean, Vector var);
  // Probabilities must be >= 0 and sum to 1 within 1e-9.
  static DistributionSpec Discrete(std::vector<double> probs);
  static DistributionSpec FromSamples(Matrix samples);

  Kind kind() const;
  const DiagonalGaussian& gaussian() const;
  const DiscreteOverVocab& discrete() const;
  const Empirical& empirical() const;

  friend bool operator==(const DistributionSpec& a, const DistributionSpec& b);

 private:
  explicit DistributionSpec(std::variant<DiagonalGaussian, DiscreteOverVocab, Empirical> v)
      : value_(std::move(v)) {}

  std::variant<DiagonalGaussian, DiscreteOverVocab, Empirical> value_;
};

// n i.i.d. draws as rows. Discrete draws return the token's row in `table`;
// empirical draws resample stored rows with replacement.
Matrix SampleDistribution(const DistributionSpec& spec, std::size_t n,
                          const EmbeddingTable& table, RngStream& rng);
std::vector<TokenId> SampleTokens(const DiscreteOverVocab& dist, std::size_t n,
                                  RngStream& rng);

struct TvEstimate {
  double value = 0.0;
  double se = 0.0;  // 0 for exact or deterministic-quadrature results
};

// 1/2 sum_k |p_k - q_k|. Throws MismatchedSupport unless both are discrete
// over the same vocabulary size.
double TvDiscrete(const DistributionSpec& p, const DistributionSpec& q);
double TvDiscrete(const std::vector<double>& p, const std::vector<double>& q);

struct TvOptions {
  // M > 1: randomised quasi-Monte-Carlo with `qmc_replicates` shifted Halton
  // point sets of size `qmc_points` per component.
  std::size_t qmc_points = 4096;
  std::size_t qmc_replicates = 16;
  std::uint64_t seed = 0x7f4a7c15u;
};

// M = 1: adaptive Gauss-Kronrod quadrature of 1/2 |p - q| split at the density
// crossings (absolute error well under 1e-6). M > 1: randomised QMC with the
// replicate standard error in `se`. Throws NonFiniteDensity.
TvEstimate TvGaussianDiag(const DiagonalGaussian& p, const DiagonalGaussian& q,
                          const TvOptions& options = {});

// Histogram of samples over the vocabulary's Voronoi cells.
std::vector<double> DiscretizeOntoVocabulary(const Matrix& samples,
                                             const EmbeddingTable& table);

struct MixedTvOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0x2545f491u;
  TvOptions gaussian;
};

// TV between any two specs. Gaussian/Gaussian and discrete/discrete are
// computed directly; other combinations are discretised onto the
// vocabulary's Voronoi cells (sampling Gaussians with `options.samples`
// draws) and reported with a delta-method standard error.
TvEstimate TotalVariation(const DistributionSpec& p, const DistributionSpec& q,
                          const EmbeddingTable& table,
                          const MixedTvOptions& options = {});

// Uniform over the vocabulary: the default prompt-independent reference P^.
DistributionSpec BaselineDistribution(const Vocabulary& vocab,
                                      const EmbeddingTable& table);
// Uniform over a subset of token ids.
DistributionSpec UniformOver(const std::vector<TokenId>& ids, std::size_t vocab_size);

}  // namespace nflbench

#endif  // NFLBENCH_DISTRIBUTIONS_HPP_
