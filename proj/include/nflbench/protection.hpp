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

#ifndef NFLBENCH_PROTECTION_HPP_
#define NFLBENCH_PROTECTION_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nflbench/distributions.hpp"
#include "nflbench/embedding_space.hpp"
#include "nflbench/rng.hpp"

namespace nflbench {

enum class Mechanism { kDChi, kAdjacencyList, kGaussianEmbedding, kIdentity };

std::string_view MechanismName(Mechanism m);
// Accepts "dchi", "adjacency", "gaussian", "identity".
Mechanism ParseMechanism(std::string_view name);

struct ProtectionConfig {
  Mechanism mechanism = Mechanism::kIdentity;
  double eta = 1.0;        // d_chi privacy parameter, > 0
  int pi_dim = 1;          // d_chi dimension, must equal the embedding dim
  double sigma_eps = 0.0;  // per-coordinate std of Gaussian embedding noise
  std::uint64_t seed = 0;

  // Throws InvalidArgument on non-positive eta / pi_dim or negative sigma.
  void Validate() const;
  // The mechanism's swept parameter: sigma_eps for Gaussian, eta for the
  // d_chi-based mechanisms, 0 for Identity.
  double PrimaryParameter() const;

  friend bool operator==(const ProtectionConfig&, const ProtectionConfig&) = default;
};

struct DchiDraw {
  double magnitude;  // l ~ Gamma(shape = pi, scale = 1/eta)
  Vector direction;  // uniform on the unit ball B^pi
  Vector delta;      // magnitude * direction
};

DchiDraw SampleDchiNoise(int pi_dim, double eta, RngStream& rng);

// The additive noise the mechanism applies to one embedding of dimension
// `dim`. Identity yields zero; AdjacencyList uses d_chi noise for its
// displacement.
Vector SampleNoise(const ProtectionConfig& cfg, std::size_t dim, RngStream& rng);

// w~ = w + delta.
Vector PerturbEmbedding(const Vector& w, const ProtectionConfig& cfg, RngStream& rng);

// { k != token : ||w_k - w_token|| < ||w_token - w~|| } in ascending id order.
std::vector<TokenId> RandomAdjacencyList(TokenId token, const Vector& perturbed,
                                         const EmbeddingTable& table);

struct ProtectedPrompt {
  Prompt prompt;                          // d~
  std::vector<Vector> perturbed;          // w~^(m)
  std::vector<Vector> noise;              // delta^(m)
  std::vector<bool> unprotected;          // adjacency list was empty at m
  Mechanism mechanism = Mechanism::kIdentity;

  std::size_t unprotected_count() const;
};

// Per-token protection. Position m draws from the stream (seed, m), so the
// result does not depend on evaluation order.
ProtectedPrompt ProtectPrompt(const Prompt& prompt, const ProtectionConfig& cfg,
                              const EmbeddingTable& table, std::uint64_t seed);
inline ProtectedPrompt ProtectPrompt(const Prompt& prompt, const ProtectionConfig& cfg,
                                     const EmbeddingTable& table) {
  return ProtectPrompt(prompt, cfg, table, cfg.seed);
}

// What the server receives for each position: the perturbed embeddings for
// embedding-level mechanisms (Gaussian, Identity) and the replacement
// tokens' embeddings for token-level ones (d_chi, adjacency list).
std::vector<Vector> ServerView(const ProtectedPrompt& protected_prompt,
                               const EmbeddingTable& table);

// N(mu0, Sigma0 + sigma_eps^2 I): the analytic protected distribution for
// Gaussian embedding noise on a Gaussian prior.
DistributionSpec GaussianProtectedDistribution(const Vector& mean, const Vector& var,
                                               double sigma_eps);

}  // namespace nflbench

#endif  // NFLBENCH_PROTECTION_HPP_
