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

#ifndef NFLBENCH_METRICS_HPP_
#define NFLBENCH_METRICS_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nflbench/attack.hpp"
#include "nflbench/distributions.hpp"
#include "nflbench/embedding_space.hpp"

namespace nflbench {

inline constexpr std::size_t kMinSamples = 100;

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// U(w, s) = max(0, 1 - ||w - e(s)|| / omega), averaged over the test prompts.
struct UtilityFunctionSpec {
  std::vector<Vector> targets;  // canonical embeddings e(s)
  double omega = 1.0;

  void Validate() const;
  double Evaluate(const Vector& w) const;
};

UtilityFunctionSpec MakeUtility(const std::vector<Prompt>& targets, const EmbeddingTable& table,
                                double omega);

struct RecoveryExtentResult {
  double value = 0.0;
  // Iterations whose mean reconstruction error exceeded omega and was clamped.
  std::size_t clamp_events = 0;
};

// R = 1 - (1/I) sum_i ||(1/|d|) sum_m (x_i^(m) - e(d^(m)))|| / omega with
// x = g^-1 of the trace's encoded reconstructions.
RecoveryExtentResult RecoveryExtent(const AttackTrace& trace, const Prompt& original,
                                    const EmbeddingTable& table, const EncoderG& encoder,
                                    double omega);

enum class LeakageOrientation {
  kProtectedMinusBaseline,  // R(P~) - R(P^)
  kBaselineMinusProtected,  // R(P^) - R(P~)
};

std::string_view LeakageOrientationName(LeakageOrientation o);
LeakageOrientation ParseLeakageOrientation(std::string_view name);

// Difference of Monte-Carlo means from independent samples. Throws
// InsufficientSamples below kMinSamples per side.
Estimate PrivacyLeakage(std::span<const double> r_protected, std::span<const double> r_baseline,
                        LeakageOrientation orientation =
                            LeakageOrientation::kProtectedMinusBaseline);

// eps_u = E U(P) - E U(P~). With `paired`, sample j of both sides shares its
// randomness and the standard error uses the per-pair differences.
Estimate UtilityLoss(std::span<const double> u_clear, std::span<const double> u_protected,
                     bool paired);
Estimate UtilityLoss(const Matrix& clear, const Matrix& protected_samples,
                     const UtilityFunctionSpec& util, bool paired);

// Delta = || mean_m g(e(d^(m))) - mean_m g(e(d~^(m))) ||.
double DistortionExtent(const Prompt& d, const Prompt& d_tilde, const EmbeddingTable& table,
                        const EncoderG& encoder);

// Largest alpha in [0, u_star) such that the mass of points with
// u_star - U(w) <= alpha stays at most `cap`. Weights need not be normalised
// (empty weights mean equal mass). Throws AssumptionViolated when the mass at
// alpha -> 0+ already exceeds the cap.
double EstimateAlpha(std::span<const double> protected_utilities, std::span<const double> weights,
                     double u_star, double cap);

// max of U over the candidate rows and the utility targets themselves.
double OptimalUtility(const UtilityFunctionSpec& util, const Matrix& candidates);

// Smallest c with R~ - R >= R~ / c on every pair. Throws AssumptionViolated if
// any pair has R~ <= R and InsufficientSamples below `min_pairs`.
double EstimateC(std::span<const double> r_tilde, std::span<const double> r,
                 std::size_t min_pairs = kMinSamples);

struct BoundConstants {
  double omega = 1.0;
  double c = 1.0;
  double alpha = 0.0;
  double c_a = 1.0;
  double c_b = 1.0;
  double c0 = 0.0;
  double c2 = 0.0;
  double p = 0.5;
  std::size_t iterations = 1;

  // (1 - (c_b + c2 c_b I^(p-1)) / omega) / c
  double C1() const;
  // The same coefficient without the division by c.
  double C1Unscaled() const;
  double C2() const { return alpha / 2.0; }
  // 1 - (c_b Delta + c2 c_b I^(p-1)) / omega
  double RecoveryLowerBound(double delta) const;
};

// Throws SideConditionViolated when c_b + c_b c2 > omega.
void CheckSideCondition(const BoundConstants& k);

struct LemmaInputs {
  std::vector<double> r_protected;  // R(w~) per sample
  std::vector<double> delta;        // distortion from d to the matching protected prompt
  Estimate eps_p;
  Estimate eps_u;
  TvEstimate tv_p_pt;
  TvEstimate tv_pt_pb;
};

struct LemmaSlacks {
  Estimate l1;  // min over samples of R(w~) minus its lower bound
  Estimate l2;  // eps_p - C1 TV(P~ || P^)
  Estimate l3;  // eps_u - C2 TV(P || P~)
};

// Coefficients multiplying an exactly-zero TV term are not required and may
// be NaN. Throws ConstantsUnavailable for any other non-finite constant and
// SideConditionViolated.
LemmaSlacks CheckLemmaBounds(const LemmaInputs& in, double c1, double c2,
                             const BoundConstants& k);

// (C2/C1) eps_p + eps_u - C2 TV(P || P^). Throws NonpositiveC1 unless C1 > 0;
// when C2 == 0 the first term vanishes and C1 is not consulted.
Estimate CheckNfl(double c1, double c2, const Estimate& eps_p, const Estimate& eps_u,
                  const TvEstimate& tv_p_pb);

struct NflDecomposition {
  std::array<double, 3> parts{};
  double sum = 0.0;
};

// (C2/C1)(eps_p - C1 TV(P~||P^)) + (eps_u - C2 TV(P||P~))
//   + C2 (TV(P||P~) + TV(P~||P^) - TV(P||P^))
NflDecomposition DecomposeNfl(double c1, double c2, double eps_p, double eps_u, double tv_p_pt,
                              double tv_pt_pb, double tv_p_pb);

enum class RecordStatus { kOk, kAssumptionViolated, kError };
std::string_view RecordStatusName(RecordStatus s);
RecordStatus ParseRecordStatus(std::string_view name);

// One sweep grid point. Quantities that could not be computed are NaN.
struct TradeoffRecord {
  std::size_t index = 0;
  std::string mechanism;
  double param = 0.0;
  Estimate eps_p;
  Estimate eps_u;
  double delta = 0.0;  // mean distortion from unprotected to protected readings
  TvEstimate tv_p_pt;
  TvEstimate tv_pt_pb;
  TvEstimate tv_p_pb;
  BoundConstants constants;
  double c1 = 0.0;
  double c1_unscaled = 0.0;
  double c2 = 0.0;
  Estimate slack_l1;
  Estimate slack_l2;
  Estimate slack_l3;
  Estimate nfl_slack;
  NflDecomposition decomposition;
  std::size_t clamp_events = 0;
  RecordStatus status = RecordStatus::kOk;
  std::string message;
};

}  // namespace nflbench

#endif  // NFLBENCH_METRICS_HPP_
