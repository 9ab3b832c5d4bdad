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

#include "nflbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nflbench/error.hpp"
#include "nflbench/stats.hpp"

namespace nflbench {
namespace {

double Square(double x) { return x * x; }

bool IsExactZero(const TvEstimate& tv) { return tv.value == 0.0 && tv.se == 0.0; }

}  // namespace

void UtilityFunctionSpec::Validate() const {
  if (targets.empty()) Fail(ErrorCode::kInvalidArgument, "utility needs at least one target");
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    Fail(ErrorCode::kInvalidArgument, "utility scale omega must be positive");
  }
}

double UtilityFunctionSpec::Evaluate(const Vector& w) const {
  double total = 0.0;
  for (const Vector& t : targets) total += std::max(0.0, 1.0 - (w - t).norm() / omega);
  return total / static_cast<double>(targets.size());
}

UtilityFunctionSpec MakeUtility(const std::vector<Prompt>& targets, const EmbeddingTable& table,
                                double omega) {
  UtilityFunctionSpec util;
  util.omega = omega;
  for (const Prompt& s : targets) util.targets.push_back(EmbedPrompt(s, table));
  util.Validate();
  return util;
}

RecoveryExtentResult RecoveryExtent(const AttackTrace& trace, const Prompt& original,
                                    const EmbeddingTable& table, const EncoderG& encoder,
                                    double omega) {
  if (trace.iterations == 0) Fail(ErrorCode::kZeroIterations, "attack trace has no iterations");
  if (!(omega > 0.0)) Fail(ErrorCode::kInvalidArgument, "omega must be positive");
  if (trace.length != original.size()) {
    Fail(ErrorCode::kLengthMismatch, "trace length differs from the original prompt");
  }
  Vector target = EmbedPrompt(original, table);
  RecoveryExtentResult result;
  double total = 0.0;
  for (std::size_t i = 0; i < trace.iterations; ++i) {
    Vector mean_encoded = Vector::Zero(static_cast<Eigen::Index>(encoder.dim()));
    for (std::size_t m = 0; m < trace.length; ++m) mean_encoded += trace.embedding(i, m);
    mean_encoded /= static_cast<double>(trace.length);
    double err = (encoder.ApplyInverse(mean_encoded) - target).norm();
    if (err > omega) {
      err = omega;
      ++result.clamp_events;
    }
    total += err;
  }
  result.value = 1.0 - total / static_cast<double>(trace.iterations) / omega;
  return result;
}

std::string_view LeakageOrientationName(LeakageOrientation o) {
  return o == LeakageOrientation::kProtectedMinusBaseline ? "protected_minus_baseline"
                                                          : "baseline_minus_protected";
}

LeakageOrientation ParseLeakageOrientation(std::string_view name) {
  if (name == "protected_minus_baseline") return LeakageOrientation::kProtectedMinusBaseline;
  if (name == "baseline_minus_protected") return LeakageOrientation::kBaselineMinusProtected;
  Fail(ErrorCode::kInvalidArgument, "unknown leakage orientation '" + std::string(name) + "'");
}

Estimate PrivacyLeakage(std::span<const double> r_protected, std::span<const double> r_baseline,
                        LeakageOrientation orientation) {
  if (r_protected.size() < kMinSamples || r_baseline.size() < kMinSamples) {
    Fail(ErrorCode::kInsufficientSamples, "privacy leakage needs at least 100 samples per side");
  }
  stats::MeanSe a = stats::MeanAndStandardError(r_protected);
  stats::MeanSe b = stats::MeanAndStandardError(r_baseline);
  double value = a.mean - b.mean;
  if (orientation == LeakageOrientation::kBaselineMinusProtected) value = -value;
  return {value, std::hypot(a.se, b.se)};
}

Estimate UtilityLoss(std::span<const double> u_clear, std::span<const double> u_protected,
                     bool paired) {
  if (u_clear.size() < kMinSamples || u_protected.size() < kMinSamples) {
    Fail(ErrorCode::kInsufficientSamples, "utility loss needs at least 100 samples per side");
  }
  if (paired) {
    if (u_clear.size() != u_protected.size()) {
      Fail(ErrorCode::kLengthMismatch, "paired utility samples differ in count");
    }
    std::vector<double> diff(u_clear.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = u_clear[j] - u_protected[j];
    stats::MeanSe d = stats::MeanAndStandardError(diff);
    return {d.mean, d.se};
  }
  stats::MeanSe a = stats::MeanAndStandardError(u_clear);
  stats::MeanSe b = stats::MeanAndStandardError(u_protected);
  return {a.mean - b.mean, std::hypot(a.se, b.se)};
}

Estimate UtilityLoss(const Matrix& clear, const Matrix& protected_samples,
                     const UtilityFunctionSpec& util, bool paired) {
  util.Validate();
  auto evaluate = [&](const Matrix& rows) {
    std::vector<double> u(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
      u[static_cast<std::size_t>(j)] = util.Evaluate(rows.row(j).transpose());
    }
    return u;
  };
  return UtilityLoss(evaluate(clear), evaluate(protected_samples), paired);
}

double DistortionExtent(const Prompt& d, const Prompt& d_tilde, const EmbeddingTable& table,
                        const EncoderG& encoder) {
  if (d.size() != d_tilde.size()) {
    Fail(ErrorCode::kLengthMismatch, "distortion needs prompts of equal length");
  }
  // g is linear, so the mean of encoded rows is the encoding of the mean.
  return encoder.Apply(EmbedPrompt(d, table) - EmbedPrompt(d_tilde, table)).norm();
}

double EstimateAlpha(std::span<const double> protected_utilities, std::span<const double> weights,
                     double u_star, double cap) {
  if (protected_utilities.empty()) {
    Fail(ErrorCode::kInsufficientSamples, "alpha estimation needs protected samples");
  }
  if (!weights.empty() && weights.size() != protected_utilities.size()) {
    Fail(ErrorCode::kLengthMismatch, "alpha weights differ in count from utilities");
  }
  std::vector<std::pair<double, double>> points(protected_utilities.size());
  double total = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    double w = weights.empty() ? 1.0 : weights[j];
    if (w < 0.0) Fail(ErrorCode::kInvalidArgument, "alpha weights must be nonnegative");
    points[j] = {std::max(0.0, u_star - protected_utilities[j]), w};
    total += w;
  }
  if (!(total > 0.0)) Fail(ErrorCode::kInvalidArgument, "alpha weights have zero mass");
  std::sort(points.begin(), points.end());
  double alpha = std::nextafter(u_star, -std::numeric_limits<double>::infinity());
  double mass = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    mass += points[j].second / total;
    bool last_of_tie = j + 1 == points.size() || points[j + 1].first != points[j].first;
    if (last_of_tie && mass > cap) {
      if (points[j].first <= 0.0) {
        Fail(ErrorCode::kAssumptionViolated,
             "near-optimal mass exceeds TV/2 for every alpha > 0");
      }
      alpha = std::min(alpha,
                       std::nextafter(points[j].first, -std::numeric_limits<double>::infinity()));
      break;
    }
  }
  if (!(alpha > 0.0)) {
    Fail(ErrorCode::kAssumptionViolated, "no positive near-optimality tolerance exists");
  }
  return alpha;
}

double OptimalUtility(const UtilityFunctionSpec& util, const Matrix& candidates) {
  util.Validate();
  double best = 0.0;
  for (const Vector& t : util.targets) best = std::max(best, util.Evaluate(t));
  for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
    best = std::max(best, util.Evaluate(candidates.row(j).transpose()));
  }
  return best;
}

double EstimateC(std::span<const double> r_tilde, std::span<const double> r,
                 std::size_t min_pairs) {
  if (r_tilde.size() != r.size()) Fail(ErrorCode::kLengthMismatch, "unpaired recovery samples");
  if (r_tilde.size() < std::max<std::size_t>(min_pairs, 1)) {
    Fail(ErrorCode::kInsufficientSamples, "too few pairs to estimate c");
  }
  double c = 1.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (!(r_tilde[j] > r[j])) {
      Fail(ErrorCode::kAssumptionViolated,
           "a protected sample is no more recoverable than its baseline pair");
    }
    c = std::max(c, r_tilde[j] / (r_tilde[j] - r[j]));
  }
  return c;
}

double BoundConstants::C1Unscaled() const {
  double regret_term = c2 * c_b * std::pow(static_cast<double>(iterations), p - 1.0);
  return 1.0 - (c_b + regret_term) / omega;
}

double BoundConstants::C1() const { return C1Unscaled() / c; }

double BoundConstants::RecoveryLowerBound(double delta) const {
  double regret_term = c2 * c_b * std::pow(static_cast<double>(iterations), p - 1.0);
  return 1.0 - (c_b * delta + regret_term) / omega;
}

void CheckSideCondition(const BoundConstants& k) {
  if (k.c_b + k.c_b * k.c2 > k.omega) {
    Fail(ErrorCode::kSideConditionViolated, "c_b + c_b * c2 exceeds omega");
  }
}

LemmaSlacks CheckLemmaBounds(const LemmaInputs& in, double c1, double c2,
                             const BoundConstants& k) {
  if (!std::isfinite(k.c_b) || !std::isfinite(k.c2) || !std::isfinite(k.p) ||
      !(k.omega > 0.0) || k.iterations == 0) {
    Fail(ErrorCode::kConstantsUnavailable, "bound constants are not populated");
  }
  CheckSideCondition(k);
  if (in.r_protected.size() != in.delta.size() || in.r_protected.empty()) {
    Fail(ErrorCode::kLengthMismatch, "recovery and distortion samples must pair up");
  }
  LemmaSlacks out;
  double l1 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < in.r_protected.size(); ++j) {
    l1 = std::min(l1, in.r_protected[j] - k.RecoveryLowerBound(in.delta[j]));
  }
  out.l1 = {l1, 0.0};

  if (IsExactZero(in.tv_pt_pb)) {
    out.l2 = in.eps_p;
  } else {
    if (!std::isfinite(c1)) Fail(ErrorCode::kConstantsUnavailable, "C1 is unavailable");
    out.l2 = {in.eps_p.value - c1 * in.tv_pt_pb.value,
              std::hypot(in.eps_p.se, c1 * in.tv_pt_pb.se)};
  }
  if (IsExactZero(in.tv_p_pt)) {
    out.l3 = in.eps_u;
  } else {
    if (!std::isfinite(c2)) Fail(ErrorCode::kConstantsUnavailable, "C2 is unavailable");
    out.l3 = {in.eps_u.value - c2 * in.tv_p_pt.value, std::hypot(in.eps_u.se, c2 * in.tv_p_pt.se)};
  }
  return out;
}

Estimate CheckNfl(double c1, double c2, const Estimate& eps_p, const Estimate& eps_u,
                  const TvEstimate& tv_p_pb) {
  if (!std::isfinite(c2)) Fail(ErrorCode::kConstantsUnavailable, "C2 is unavailable");
  double ratio = 0.0;
  if (c2 != 0.0) {
    if (!(c1 > 0.0)) Fail(ErrorCode::kNonpositiveC1, "C1 must be positive for the bound");
    ratio = c2 / c1;
  }
  double value = ratio * eps_p.value + eps_u.value - c2 * tv_p_pb.value;
  double se = std::sqrt(Square(ratio * eps_p.se) + Square(eps_u.se) + Square(c2 * tv_p_pb.se));
  return {value, se};
}

NflDecomposition DecomposeNfl(double c1, double c2, double eps_p, double eps_u, double tv_p_pt,
                              double tv_pt_pb, double tv_p_pb) {
  NflDecomposition out;
  double ratio = c2 == 0.0 ? 0.0 : c2 / c1;
  out.parts[0] = c2 == 0.0 ? 0.0 : ratio * (eps_p - c1 * tv_pt_pb);
  out.parts[1] = eps_u - c2 * tv_p_pt;
  out.parts[2] = c2 * (tv_p_pt + tv_pt_pb - tv_p_pb);
  out.sum = out.parts[0] + out.parts[1] + out.parts[2];
  return out;
}

std::string_view RecordStatusName(RecordStatus s) {
  switch (s) {
    case RecordStatus::kOk:
      return "ok";
    case RecordStatus::kAssumptionViolated:
      return "assumption_violated";
    case RecordStatus::kError:
      return "error";
  }
  return "error";
}

RecordStatus ParseRecordStatus(std::string_view name) {
  if (name == "ok") return RecordStatus::kOk;
  if (name == "assumption_violated") return RecordStatus::kAssumptionViolated;
  if (name == "error") return RecordStatus::kError;
  Fail(ErrorCode::kParse, "unknown record status '" + std::string(name) + "'");
}

}  // namespace nflbench
