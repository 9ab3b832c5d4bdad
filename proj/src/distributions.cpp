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
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nflbench/error.hpp"

namespace nflbench {

namespace {

constexpr double kProbabilityTolerance = 1e-9;

// First primes, used as Halton bases.
constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double RadicalInverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

void CheckFiniteGaussian(const DiagonalGaussian& g) {
  if (!g.mean.allFinite() || !g.var.allFinite()) {
    Fail(ErrorCode::kNonFiniteDensity, "Gaussian parameters are not finite");
  }
}

double LogNormalDensity(double x, double mean, double var) {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  double z = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + z * z / var);
}

// Real roots of log p(x) = log q(x) for two 1-D normals.
std::vector<double> DensityCrossings(double m1, double v1, double m2, double v2) {
  double a = 0.5 / v2 - 0.5 / v1;
  double b = m1 / v1 - m2 / v2;
  double c = -0.5 * m1 * m1 / v1 + 0.5 * m2 * m2 / v2 + 0.5 * std::log(v2 / v1);
  std::vector<double> roots;
  if (std::abs(a) < 1e-300 || std::abs(a) * 1e12 < std::abs(b)) {
    if (b != 0.0) roots.push_back(-c / b);
    return roots;
  }
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return roots;
  double sq = std::sqrt(disc);
  // Numerically stable pair.
  double q = -0.5 * (b + std::copysign(sq, b));
  if (q != 0.0) {
    roots.push_back(q / a);
    roots.push_back(c / q);
  } else {
    roots.push_back(0.0);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double TvOneDimensional(double m1, double v1, double m2, double v2) {
  double s = std::sqrt(std::max(v1, v2));
  double lo = std::min(m1, m2) - 40.0 * s;
  double hi = std::max(m1, m2) + 40.0 * s;
  std::vector<double> breaks{lo};
  for (double r : DensityCrossings(m1, v1, m2, v2)) {
    if (r > lo && r < hi) breaks.push_back(r);
  }
  // Extra breaks at the means keep each panel unimodal-ish for the adaptive rule.
  for (double m : {m1, m2}) {
    if (m > lo && m < hi) breaks.push_back(m);
  }
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto integrand = [&](double x) {
    double p = std::exp(LogNormalDensity(x, m1, v1));
    double q = std::exp(LogNormalDensity(x, m2, v2));
    return std::abs(p - q);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double error = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, breaks[i], breaks[i + 1], 15, 1e-13, &error);
  }
  if (!std::isfinite(total)) {
    Fail(ErrorCode::kNonFiniteDensity, "TV integrand produced a non-finite value");
  }
  return std::clamp(0.5 * total, 0.0, 1.0);
}

TvEstimate TvQuasiMonteCarlo(const Vector& m1, const Vector& v1, const Vector& m2,
                             const Vector& v2, const TvOptions& options) {
  const auto dim = static_cast<std::size_t>(m1.size());
  if (dim > std::size(kPrimes)) {
    Fail(ErrorCode::kInvalidArgument, "QMC TV supports up to 25 differing coordinates");
  }
  boost::math::normal_distribution<double> standard;
  auto log_density = [&](const Vector& x, const Vector& m, const Vector& v) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      acc += LogNormalDensity(x[jj], m[jj], v[jj]);
    }
    return acc;
  };

  std::vector<double> replicate_values;
  replicate_values.reserve(options.qmc_replicates);
  Vector x(static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < options.qmc_replicates; ++r) {
    RngStream rng(options.seed, {r});
    double sums[2] = {0.0, 0.0};
    for (int component = 0; component < 2; ++component) {
      std::vector<double> shift(dim);
      for (double& s : shift) s = rng.Uniform();
      const Vector& m = component == 0 ? m1 : m2;
      const Vector& v = component == 0 ? v1 : v2;
      for (std::size_t n = 0; n < options.qmc_points; ++n) {
        for (std::size_t j = 0; j < dim; ++j) {
          double u = RadicalInverse(n + 1, kPrimes[j]) + shift[j];
          u -= std::floor(u);
          u = std::clamp(u, 1e-16, 1.0 - 1e-16);
          auto jj = static_cast<Eigen::Index>(j);
          x[jj] = m[jj] + std::sqrt(v[jj]) * boost::math::quantile(standard, u);
        }
        double log_ratio = log_density(x, m2, v2) - log_density(x, m1, v1);
        sums[component] += std::tanh(0.5 * std::abs(log_ratio));
      }
    }
    double n = static_cast<double>(options.qmc_points);
    replicate_values.push_back(0.5 * (sums[0] / n + sums[1] / n));
  }
  double mean = std::accumulate(replicate_values.begin(), replicate_values.end(), 0.0) /
                static_cast<double>(replicate_values.size());
  double ss = 0.0;
  for (double v : replicate_values) ss += (v - mean) * (v - mean);
  double reps = static_cast<double>(replicate_values.size());
  double se = reps > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0;
  if (!std::isfinite(mean)) {
    Fail(ErrorCode::kNonFiniteDensity, "TV estimate is not finite");
  }
  return {std::clamp(mean, 0.0, 1.0), se};
}

// Probabilities of a spec over the vocabulary's cells plus the sample count
// behind them (0 for an exact pmf).
struct CellMass {
  std::vector<double> probs;
  double samples = 0.0;
};

CellMass Discretize(const DistributionSpec& spec, const EmbeddingTable& table,
                    const MixedTvOptions& options, std::uint64_t side) {
  switch (spec.kind()) {
    case DistributionSpec::Kind::kDiscrete:
      if (spec.discrete().probs.size() != table.size()) {
        Fail(ErrorCode::kMismatchedSupport, "discrete support differs from vocabulary");
      }
      return {spec.discrete().probs, 0.0};
    case DistributionSpec::Kind::kEmpirical:
      return {DiscretizeOntoVocabulary(spec.empirical().samples, table),
              static_cast<double>(spec.empirical().samples.rows())};
    case DistributionSpec::Kind::kDiagonalGaussian: {
      RngStream rng(options.seed, {side});
      Matrix samples = SampleDistribution(spec, options.samples, table, rng);
      return {DiscretizeOntoVocabulary(samples, table),
              static_cast<double>(options.samples)};
    }
  }
  Fail(ErrorCode::kInvalidArgument, "unknown distribution kind");
}

}  // namespace

DistributionSpec DistributionSpec::Gaussian(Vector mean, Vector var) {
  if (mean.size() == 0 || mean.size() != var.size()) {
    Fail(ErrorCode::kInvalidArgument, "Gaussian mean/var size mismatch");
  }
  if (!mean.allFinite() || !var.allFinite() || (var.array() < 0.0).any()) {
    Fail(ErrorCode::kInvalidArgument, "Gaussian needs finite mean and var >= 0");
  }
  return DistributionSpec(DiagonalGaussian{std::move(mean), std::move(var)});
}

DistributionSpec DistributionSpec::Discrete(std::vector<double> probs) {
  if (probs.empty()) Fail(ErrorCode::kInvalidArgument, "empty probability vector");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      Fail(ErrorCode::kInvalidArgument, "probabilities must be finite and >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    Fail(ErrorCode::kInvalidArgument, "probabilities must sum to 1");
  }
  return DistributionSpec(DiscreteOverVocab{std::move(probs)});
}

DistributionSpec DistributionSpec::FromSamples(Matrix samples) {
  if (samples.rows() < 1 || samples.cols() < 1) {
    Fail(ErrorCode::kInvalidArgument, "empirical distribution needs >= 1 sample");
  }
  if (!samples.allFinite()) {
    Fail(ErrorCode::kInvalidArgument, "empirical samples must be finite");
  }
  return DistributionSpec(Empirical{std::move(samples)});
}

DistributionSpec::Kind DistributionSpec::kind() const {
  return static_cast<Kind>(value_.index());
}

const DiagonalGaussian& DistributionSpec::gaussian() const {
  return std::get<DiagonalGaussian>(value_);
}

const DiscreteOverVocab& DistributionSpec::discrete() const {
  return std::get<DiscreteOverVocab>(value_);
}

const Empirical& DistributionSpec::empirical() const {
  return std::get<Empirical>(value_);
}

bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case DistributionSpec::Kind::kDiagonalGaussian:
      return a.gaussian().mean == b.gaussian().mean && a.gaussian().var == b.gaussian().var;
    case DistributionSpec::Kind::kDiscrete:
      return a.discrete().probs == b.discrete().probs;
    case DistributionSpec::Kind::kEmpirical:
      return a.empirical().samples == b.empirical().samples;
  }
  return false;
}

std::vector<TokenId> SampleTokens(const DiscreteOverVocab& dist, std::size_t n,
                                  RngStream& rng) {
  std::vector<double> cumulative(dist.probs.size());
  std::partial_sum(dist.probs.begin(), dist.probs.end(), cumulative.begin());
  std::vector<TokenId> out(n);
  for (auto& id : out) {
    double u = rng.Uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto k = static_cast<std::size_t>(it - cumulative.begin());
    // Rounding can land u on the total; fall back to the last non-empty cell.
    if (k >= cumulative.size()) {
      k = cumulative.size() - 1;
      while (k > 0 && dist.probs[k] == 0.0) --k;
    }
    id = k;
  }
  return out;
}

Matrix SampleDistribution(const DistributionSpec& spec, std::size_t n,
                          const EmbeddingTable& table, RngStream& rng) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  const auto rows = static_cast<Eigen::Index>(n);
  switch (spec.kind()) {
    case DistributionSpec::Kind::kDiagonalGaussian: {
      const auto& g = spec.gaussian();
      Matrix out(rows, g.mean.size());
      Vector sd = g.var.array().sqrt();
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < g.mean.size(); ++j) {
          out(i, j) = g.mean[j] + sd[j] * rng.Normal();
        }
      }
      return out;
    }
    case DistributionSpec::Kind::kDiscrete: {
      if (spec.discrete().probs.size() != table.size()) {
        Fail(ErrorCode::kMismatchedSupport, "discrete support differs from table");
      }
      Matrix out(rows, static_cast<Eigen::Index>(table.dim()));
      auto ids = SampleTokens(spec.discrete(), n, rng);
      for (Eigen::Index i = 0; i < rows; ++i) {
        out.row(i) = table.matrix().row(static_cast<Eigen::Index>(ids[static_cast<std::size_t>(i)]));
      }
      return out;
    }
    case DistributionSpec::Kind::kEmpirical: {
      const Matrix& src = spec.empirical().samples;
      Matrix out(rows, src.cols());
      for (Eigen::Index i = 0; i < rows; ++i) {
        out.row(i) = src.row(static_cast<Eigen::Index>(
            rng.UniformIndex(static_cast<std::size_t>(src.rows()))));
      }
      return out;
    }
  }
  Fail(ErrorCode::kInvalidArgument, "unknown distribution kind");
}

double TvDiscrete(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) {
    Fail(ErrorCode::kMismatchedSupport, "discrete supports differ in size");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - q[k]);
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

double TvDiscrete(const DistributionSpec& p, const DistributionSpec& q) {
  if (p.kind() != DistributionSpec::Kind::kDiscrete ||
      q.kind() != DistributionSpec::Kind::kDiscrete) {
    Fail(ErrorCode::kMismatchedSupport, "tv_discrete needs two discrete distributions");
  }
  return TvDiscrete(p.discrete().probs, q.discrete().probs);
}

TvEstimate TvGaussianDiag(const DiagonalGaussian& p, const DiagonalGaussian& q,
                          const TvOptions& options) {
  CheckFiniteGaussian(p);
  CheckFiniteGaussian(q);
  if (p.mean.size() != q.mean.size()) {
    Fail(ErrorCode::kMismatchedSupport, "Gaussians differ in dimension");
  }
  // Coordinates with identical marginals factor out of the TV of a product
  // measure; a degenerate coordinate that differs makes the two singular.
  std::vector<Eigen::Index> differing;
  for (Eigen::Index j = 0; j < p.mean.size(); ++j) {
    bool same = p.mean[j] == q.mean[j] && p.var[j] == q.var[j];
    if (same) continue;
    if (p.var[j] == 0.0 || q.var[j] == 0.0) return {1.0, 0.0};
    differing.push_back(j);
  }
  if (differing.empty()) return {0.0, 0.0};
  if (differing.size() == 1) {
    Eigen::Index j = differing.front();
    return {TvOneDimensional(p.mean[j], p.var[j], q.mean[j], q.var[j]), 0.0};
  }
  auto pick = [&](const Vector& v) {
    Vector out(static_cast<Eigen::Index>(differing.size()));
    for (std::size_t i = 0; i < differing.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = v[differing[i]];
    }
    return out;
  };
  return TvQuasiMonteCarlo(pick(p.mean), pick(p.var), pick(q.mean), pick(q.var), options);
}

std::vector<double> DiscretizeOntoVocabulary(const Matrix& samples,
                                             const EmbeddingTable& table) {
  std::vector<double> hist(table.size(), 0.0);
  if (samples.rows() == 0) return hist;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    hist[NearestToken(samples.row(i).transpose(), table)] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(samples.rows());
  return hist;
}

TvEstimate TotalVariation(const DistributionSpec& p, const DistributionSpec& q,
                          const EmbeddingTable& table, const MixedTvOptions& options) {
  using Kind = DistributionSpec::Kind;
  if (p.kind() == Kind::kDiagonalGaussian && q.kind() == Kind::kDiagonalGaussian) {
    return TvGaussianDiag(p.gaussian(), q.gaussian(), options.gaussian);
  }
  if (p.kind() == Kind::kDiscrete && q.kind() == Kind::kDiscrete) {
    return {TvDiscrete(p, q), 0.0};
  }
  CellMass a = Discretize(p, table, options, 0);
  CellMass b = Discretize(q, table, options, 1);
  double tv = TvDiscrete(a.probs, b.probs);
  // Delta method: TV-hat = 1/2 sum_k s_k (a_k - b_k) with s_k = sign(a_k - b_k).
  auto variance_term = [&](const CellMass& m) {
    if (m.samples == 0.0) return 0.0;
    double mean = 0.0, second = 0.0;
    for (std::size_t k = 0; k < m.probs.size(); ++k) {
      double diff = a.probs[k] - b.probs[k];
      double s = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      mean += s * m.probs[k];
      second += s * s * m.probs[k];
    }
    return (second - mean * mean) / m.samples;
  };
  double se = 0.5 * std::sqrt(std::max(0.0, variance_term(a) + variance_term(b)));
  return {tv, se};
}

DistributionSpec BaselineDistribution(const Vocabulary& vocab, const EmbeddingTable& table) {
  if (vocab.size() != table.size()) {
    Fail(ErrorCode::kInvalidArgument, "vocabulary/table size mismatch");
  }
  return DistributionSpec::Discrete(
      std::vector<double>(vocab.size(), 1.0 / static_cast<double>(vocab.size())));
}

DistributionSpec UniformOver(const std::vector<TokenId>& ids, std::size_t vocab_size) {
  if (ids.empty()) Fail(ErrorCode::kInvalidArgument, "uniform_over needs tokens");
  std::vector<double> probs(vocab_size, 0.0);
  for (TokenId id : ids) {
    if (id >= vocab_size) Fail(ErrorCode::kInvalidArgument, "token id out of range");
    probs[id] = 1.0;
  }
  double count = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= count;
  return DistributionSpec::Discrete(std::move(probs));
}

}  // namespace nflbench
