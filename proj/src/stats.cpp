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

#include "nflbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "nflbench/error.hpp"

namespace nflbench::stats {

MeanSe MeanAndStandardError(std::span<const double> values) {
  if (values.empty()) return {};
  double n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

std::vector<double> Ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    Fail(ErrorCode::kInvalidArgument, "Spearman needs two equal-length series of n >= 3");
  }
  auto rx = Ranks(x);
  auto ry = Ranks(y);
  double n = static_cast<double>(x.size());
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, 1.0};
  double rho = sxy / std::sqrt(sxx * syy);
  if (std::abs(rho) >= 1.0) return {rho, 0.0};
  double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
  boost::math::students_t_distribution<double> dist(n - 2.0);
  double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {rho, p};
}

double KolmogorovQ(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult KsOneSample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) Fail(ErrorCode::kInvalidArgument, "KS test needs samples");
  std::sort(sample.begin(), sample.end());
  double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  double root = std::sqrt(n);
  return {d, KolmogorovQ((root + 0.12 + 0.11 / root) * d)};
}

TestResult KsTwoSample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) Fail(ErrorCode::kInvalidArgument, "KS test needs samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  double ne = std::sqrt(na * nb / (na + nb));
  return {d, KolmogorovQ((ne + 0.12 + 0.11 / ne) * d)};
}

TestResult ChiSquareGoodnessOfFit(std::span<const double> counts, std::span<const double> probs) {
  if (counts.size() != probs.size() || counts.empty()) {
    Fail(ErrorCode::kInvalidArgument, "chi-square needs matching counts and probabilities");
  }
  double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    double expected = total * probs[k];
    stat += (counts[k] - expected) * (counts[k] - expected) / expected;
    ++cells;
  }
  if (cells < 2) return {stat, 1.0};
  boost::math::chi_squared_distribution<double> dist(cells - 1);
  return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

}  // namespace nflbench::stats
