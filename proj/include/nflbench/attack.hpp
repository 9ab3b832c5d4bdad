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

#ifndef NFLBENCH_ATTACK_HPP_
#define NFLBENCH_ATTACK_HPP_

#include <optional>
#include <string_view>
#include <vector>

#include "nflbench/embedding_space.hpp"
#include "nflbench/protection.hpp"

namespace nflbench {

enum class AttackerKind { kNearestNeighbor, kContextualBigram, kIterativeGradient, kCalibrated };

std::string_view AttackerKindName(AttackerKind kind);
// Accepts "nearest_neighbor", "bigram", "gradient", "calibrated".
AttackerKind ParseAttackerKind(std::string_view name);

struct AttackerSpec {
  AttackerKind kind = AttackerKind::kNearestNeighbor;
  std::size_t iterations = 1;  // I
  double initial_step = 1.0;   // gradient attacker: step_i = initial_step / (i + 1)^decay
  double decay = 1.0;
  double calibrated_p = 0.5;   // in (0, 1)
  double calibrated_scale = 1.0;

  // Throws InvalidArgument (I = 0, bad step schedule, scale <= 0) or
  // InvalidExponent (p outside (0, 1)) for the calibrated kind.
  void Validate() const;

  // Constants of the self-bounded regret condition met by construction by
  // the calibrated attacker: c0 * I^p <= sum_i regret_i <= c2 * I^p.
  double CalibratedC0() const { return calibrated_scale * calibrated_p / 2.0; }
  double CalibratedC2() const { return calibrated_scale / calibrated_p; }
};

// Reconstructions d_i^(m) for i = 1..I and m = 1..|d|.
struct AttackTrace {
  std::size_t iterations = 0;
  std::size_t length = 0;
  std::vector<TokenId> recovered;  // row-major [i * length + m]
  Matrix recovered_embeddings;     // encoded space, row i * length + m
  std::vector<double> regret;      // per iteration, averaged over m

  TokenId token(std::size_t i, std::size_t m) const { return recovered[i * length + m]; }
  Vector embedding(std::size_t i, std::size_t m) const {
    return recovered_embeddings.row(static_cast<Eigen::Index>(i * length + m)).transpose();
  }
  Prompt RecoveredPrompt(std::size_t i) const;
  Prompt FinalPrompt() const { return RecoveredPrompt(iterations - 1); }
  std::vector<double> CumulativeRegret() const;
};

// Maps each observed embedding to its nearest vocabulary token.
Prompt InvertNearestNeighbor(const std::vector<Vector>& observed, const EmbeddingTable& table);
Prompt InvertNearestNeighbor(const ProtectedPrompt& protected_prompt, const EmbeddingTable& table);

// Bigram co-occurrence model standing in for a masked language model.
class BigramModel {
 public:
  // Throws EmptyCorpus when the corpus holds no tokens.
  static BigramModel Train(const std::vector<Prompt>& corpus, std::size_t vocab_size);

  std::size_t vocab_size() const { return unigram_.size(); }
  // argmax_k count(left -> k); the unigram marginal when `left` is absent or
  // was never followed by anything. Ties go to the lowest id.
  TokenId Predict(std::optional<TokenId> left) const;

 private:
  std::vector<double> unigram_;
  std::vector<std::vector<double>> bigram_;  // [left][right]
};

// Replaces position m of the observed prompt using its left neighbour.
TokenId InvertContextual(const Prompt& observed, const BigramModel& model, std::size_t m);

// Gradient descent on 1/2 ||x - g(w~)||^2 in encoded space from x0 = 0; every
// iterate is snapped to the nearest encoded token, which becomes the
// reconstruction. The regret series records the unsnapped iterate's distance
// ||x_i - g(w~)||.
AttackTrace RunIterativeAttacker(const std::vector<Vector>& observed, const EmbeddingTable& table,
                                 const EncoderG& encoder, const AttackerSpec& spec);

// Synthetic attacker whose iterate i sits at distance scale * i^(p-1) from
// g(target) along the first encoded axis. Each iterate is labelled with its
// target token. Throws InvalidExponent when p is outside (0, 1).
AttackTrace RunCalibratedAttacker(const Prompt& target, const EmbeddingTable& table,
                                  const EncoderG& encoder, const AttackerSpec& spec);

struct RegretFit {
  double p;
  double c0;
  double c2;
};

// Least-squares slope of log cumulative regret against log i over
// i in [I/4, I]; c0/c2 are the min/max of cumulative(i) / i^p over all i.
// Requires I >= 16; throws DegenerateTrace for an all-zero regret series.
RegretFit EstimateRegretExponent(const AttackTrace& trace);

// Runs the attacker named by `spec` against per-position observations in
// canonical space. The calibrated attacker targets the nearest-neighbour
// reading of the observation, so no attacker ever receives the original
// prompt.
class Attacker {
 public:
  Attacker(const EmbeddingTable& table, const EncoderG& encoder, AttackerSpec spec,
           std::optional<BigramModel> bigram = std::nullopt);

  const AttackerSpec& spec() const { return spec_; }
  AttackTrace Run(const std::vector<Vector>& observed) const;

 private:
  AttackTrace RepeatPrompt(const Prompt& prompt, const std::vector<Vector>& observed) const;

  EmbeddingTable table_;
  EncoderG encoder_;
  EmbeddingTable encoded_table_;
  AttackerSpec spec_;
  std::optional<BigramModel> bigram_;
};

}  // namespace nflbench

#endif  // NFLBENCH_ATTACK_HPP_
