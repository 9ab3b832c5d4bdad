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

#ifndef NFLBENCH_STATS_HPP_
#define NFLBENCH_STATS_HPP_

#include <functional>
#include <span>
#include <vector>

namespace nflbench::stats {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe MeanAndStandardError(std::span<const double> values);

// Average ranks (1-based), ties share their mean rank.
std::vector<double> Ranks(std::span<const double> values);

struct Correlation {
  double rho = 0.0;
  // Two-sided p-value from the t approximation with n - 2 degrees of freedom.
  double p_value = 1.0;
};

Correlation Spearman(std::span<const double> x, std::span<const double> y);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double KolmogorovQ(double lambda);

TestResult KsOneSample(std::vector<double> sample, const std::function<double(double)>& cdf);
TestResult KsTwoSample(std::vector<double> a, std::vector<double> b);

// Pearson chi-square goodness of fit of counts against expected probabilities
// (cells with zero expectation are skipped).
TestResult ChiSquareGoodnessOfFit(std::span<const double> counts,
                                  std::span<const double> probs);

}  // namespace nflbench::stats

#endif  // NFLBENCH_STATS_HPP_
