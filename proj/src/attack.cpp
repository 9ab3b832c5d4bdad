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

#include <algorithm>
#include <cmath>
#include <limits>

#include "nflbench/error.hpp"

namespace nflbench {

std::string_view AttackerKindName(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::kNearestNeighbor: return "nearest_neighbor";
    case AttackerKind::kContextualBigram: return "bigram";
    case AttackerKind::kIterativeGradient: return "gradient";
    case AttackerKind::kCalibrated: return "calibrated";
  }
  return "unknown";
}

AttackerKind ParseAttackerKind(std::string_view name) {
  if (name == "nearest_neighbor" || name == "nn") return AttackerKind::kNearestNeighbor;
  if (name == "bigram" || name == "contextual") return AttackerKind::kContextualBigram;
  if (name == "gradient" || name == "iterative") return AttackerKind::kIterativeGradient;
  if (name == "calibrated") return AttackerKind::kCalibrated;
  Fail(ErrorCode::kInvalidArgument, "unknown attacker kind: " + std::string(name));
}

void AttackerSpec::Validate() const {
  if (iterations < 1) Fail(ErrorCode::kInvalidArgument, "attacker needs I >= 1");
  if (kind == AttackerKind::kIterativeGradient) {
    if (!(initial_step > 0.0) || !(decay >= 0.0)) {
      Fail(ErrorCode::kInvalidArgument, "gradient attacker needs step > 0, decay >= 0");
    }
  }
  if (kind == AttackerKind::kCalibrated) {
    if (!(calibrated_p > 0.0 && calibrated_p < 1.0)) {
      Fail(ErrorCode::kInvalidExponent, "calibrated p must lie in (0, 1)");
    }
    if (!(calibrated_scale > 0.0) || !std::isfinite(calibrated_scale)) {
      Fail(ErrorCode::kInvalidArgument, "calibrated scale must be positive");
    }
  }
}

Prompt AttackTrace::RecoveredPrompt(std::size_t i) const {
  std::vector<TokenId> ids(recovered.begin() + static_cast<std::ptrdiff_t>(i * length),
                           recovered.begin() + static_cast<std::ptrdiff_t>((i + 1) * length));
  return Prompt{std::move(ids)};
}

std::vector<double> AttackTrace::CumulativeRegret() const {
  std::vector<double> out(regret.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < regret.size(); ++i) {
    acc += regret[i];
    out[i] = acc;
  }
  return out;
}

Prompt InvertNearestNeighbor(const std::vector<Vector>& observed, const EmbeddingTable& table) {
  std::vector<TokenId> ids;
  ids.reserve(observed.size());
  for (const Vector& v : observed) ids.push_back(NearestToken(v, table));
  return MakePrompt(std::move(ids), table.size());
}

Prompt InvertNearestNeighbor(const ProtectedPrompt& protected_prompt, const EmbeddingTable& table) {
  return InvertNearestNeighbor(ServerView(protected_prompt, table), table);
}

BigramModel BigramModel::Train(const std::vector<Prompt>& corpus, std::size_t vocab_size) {
  BigramModel model;
  model.unigram_.assign(vocab_size, 0.0);
  model.bigram_.assign(vocab_size, std::vector<double>(vocab_size, 0.0));
  double total = 0.0;
  for (const Prompt& p : corpus) {
    for (std::size_t m = 0; m < p.size(); ++m) {
      TokenId id = p.token_ids[m];
      if (id >= vocab_size) Fail(ErrorCode::kInvalidArgument, "corpus token out of range");
      model.unigram_[id] += 1.0;
      total += 1.0;
      if (m > 0) model.bigram_[p.token_ids[m - 1]][id] += 1.0;
    }
  }
  if (total == 0.0) Fail(ErrorCode::kEmptyCorpus, "bigram corpus has no tokens");
  return model;
}

TokenId BigramModel::Predict(std::optional<TokenId> left) const {
  const std::vector<double>* row = &unigram_;
  if (left && *left < bigram_.size()) {
    const auto& candidate = bigram_[*left];
    if (std::any_of(candidate.begin(), candidate.end(), [](double c) { return c > 0.0; })) {
      row = &candidate;
    }
  }
  // max_element returns the first maximum, i.e. the lowest id on ties.
  return static_cast<TokenId>(std::max_element(row->begin(), row->end()) - row->begin());
}

TokenId InvertContextual(const Prompt& observed, const BigramModel& model, std::size_t m) {
  if (m >= observed.size()) Fail(ErrorCode::kInvalidArgument, "position out of range");
  std::optional<TokenId> left;
  if (m > 0) left = observed.token_ids[m - 1];
  return model.Predict(left);
}

namespace {

AttackTrace EmptyTrace(std::size_t iterations, std::size_t length, std::size_t dim) {
  AttackTrace trace;
  trace.iterations = iterations;
  trace.length = length;
  trace.recovered.resize(iterations * length);
  trace.recovered_embeddings.resize(static_cast<Eigen::Index>(iterations * length),
                                    static_cast<Eigen::Index>(dim));
  trace.regret.assign(iterations, 0.0);
  return trace;
}

}  // namespace

AttackTrace RunIterativeAttacker(const std::vector<Vector>& observed, const EmbeddingTable& table,
                                 const EncoderG& encoder, const AttackerSpec& spec) {
  spec.Validate();
  if (observed.empty()) Fail(ErrorCode::kInvalidArgument, "nothing observed");
  EmbeddingTable encoded = encoder.EncodeTable(table);
  const std::size_t len = observed.size();
  AttackTrace trace = EmptyTrace(spec.iterations, len, table.dim());
  for (std::size_t m = 0; m < len; ++m) {
    Vector target = encoder.Apply(observed[m]);
    Vector x = Vector::Zero(target.size());
    for (std::size_t i = 0; i < spec.iterations; ++i) {
      double step = spec.initial_step / std::pow(static_cast<double>(i + 2), spec.decay);
      x -= step * (x - target);
      auto row = static_cast<Eigen::Index>(i * len + m);
      TokenId snapped = NearestToken(x, encoded);
      trace.recovered[i * len + m] = snapped;
      trace.recovered_embeddings.row(row) = encoded.row(snapped).transpose();
      trace.regret[i] += (x - target).norm() / static_cast<double>(len);
    }
  }
  return trace;
}

AttackTrace RunCalibratedAttacker(const Prompt& target, const EmbeddingTable& table,
                                  const EncoderG& encoder, const AttackerSpec& spec) {
  if (spec.kind == AttackerKind::kCalibrated) {
    spec.Validate();
  } else {
    AttackerSpec copy = spec;
    copy.kind = AttackerKind::kCalibrated;
    copy.Validate();
  }
  MakePrompt(target.token_ids, table.size());
  const std::size_t len = target.size();
  AttackTrace trace = EmptyTrace(spec.iterations, len, table.dim());
  std::vector<Vector> anchors;
  anchors.reserve(len);
  for (TokenId id : target.token_ids) anchors.push_back(encoder.Apply(table.row(id)));
  for (std::size_t i = 0; i < spec.iterations; ++i) {
    double radius =
        spec.calibrated_scale * std::pow(static_cast<double>(i + 1), spec.calibrated_p - 1.0);
    for (std::size_t m = 0; m < len; ++m) {
      auto row = static_cast<Eigen::Index>(i * len + m);
      trace.recovered_embeddings.row(row) = anchors[m].transpose();
      trace.recovered_embeddings(row, 0) += radius;
      trace.recovered[i * len + m] = target.token_ids[m];
    }
    trace.regret[i] = radius;
  }
  return trace;
}

RegretFit EstimateRegretExponent(const AttackTrace& trace) {
  const std::size_t n = trace.regret.size();
  if (n < 16) Fail(ErrorCode::kInvalidArgument, "regret fit needs I >= 16");
  std::vector<double> cumulative = trace.CumulativeRegret();
  if (cumulative.back() <= 0.0) {
    Fail(ErrorCode::kDegenerateTrace, "all regrets are zero");
  }
  const std::size_t first = (n + 3) / 4;  // 1-based ceil(I/4)
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, count = 0.0;
  for (std::size_t i = first; i <= n; ++i) {
    double s = cumulative[i - 1];
    if (s <= 0.0) Fail(ErrorCode::kDegenerateTrace, "zero cumulative regret in fit window");
    double x = std::log(static_cast<double>(i));
    double y = std::log(s);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1.0;
  }
  double p = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  double c0 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    double ratio = cumulative[i - 1] / std::pow(static_cast<double>(i), p);
    c0 = std::min(c0, ratio);
    c2 = std::max(c2, ratio);
  }
  return {p, c0, c2};
}

Attacker::Attacker(const EmbeddingTable& table, const EncoderG& encoder, AttackerSpec spec,
                   std::optional<BigramModel> bigram)
    : table_(table),
      encoder_(encoder),
      encoded_table_(encoder.EncodeTable(table)),
      spec_(spec),
      bigram_(std::move(bigram)) {
  spec_.Validate();
  if (spec_.kind == AttackerKind::kContextualBigram && !bigram_) {
    Fail(ErrorCode::kEmptyCorpus, "bigram attacker needs a trained model");
  }
}

AttackTrace Attacker::RepeatPrompt(const Prompt& prompt,
                                   const std::vector<Vector>& observed) const {
  const std::size_t len = prompt.size();
  AttackTrace trace = EmptyTrace(spec_.iterations, len, table_.dim());
  double regret = 0.0;
  std::vector<Vector> encoded(len);
  for (std::size_t m = 0; m < len; ++m) {
    encoded[m] = encoded_table_.row(prompt.token_ids[m]);
    regret += (encoded[m] - encoder_.Apply(observed[m])).norm() / static_cast<double>(len);
  }
  for (std::size_t i = 0; i < spec_.iterations; ++i) {
    for (std::size_t m = 0; m < len; ++m) {
      trace.recovered[i * len + m] = prompt.token_ids[m];
      trace.recovered_embeddings.row(static_cast<Eigen::Index>(i * len + m)) =
          encoded[m].transpose();
    }
    trace.regret[i] = regret;
  }
  return trace;
}

AttackTrace Attacker::Run(const std::vector<Vector>& observed) const {
  if (observed.empty()) Fail(ErrorCode::kInvalidArgument, "nothing observed");
  switch (spec_.kind) {
    case AttackerKind::kNearestNeighbor:
      return RepeatPrompt(InvertNearestNeighbor(observed, table_), observed);
    case AttackerKind::kContextualBigram: {
      Prompt seen = InvertNearestNeighbor(observed, table_);
      Prompt guess = seen;
      for (std::size_t m = 0; m < seen.size(); ++m) {
        guess.token_ids[m] = InvertContextual(seen, *bigram_, m);
      }
      return RepeatPrompt(guess, observed);
    }
    case AttackerKind::kIterativeGradient:
      return RunIterativeAttacker(observed, table_, encoder_, spec_);
    case AttackerKind::kCalibrated:
      return RunCalibratedAttacker(InvertNearestNeighbor(observed, table_), table_, encoder_,
                                   spec_);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown attacker kind");
}

}  // namespace nflbench
