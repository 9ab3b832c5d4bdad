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

#include "nflbench/protection.hpp"

#include <algorithm>
#include <cmath>

#include "nflbench/error.hpp"

namespace nflbench {

std::string_view MechanismName(Mechanism m) {
  switch (m) {
    case Mechanism::kDChi: return "dchi";
    case Mechanism::kAdjacencyList: return "adjacency";
    case Mechanism::kGaussianEmbedding: return "gaussian";
    case Mechanism::kIdentity: return "identity";
  }
  return "unknown";
}

Mechanism ParseMechanism(std::string_view name) {
  if (name == "dchi") return Mechanism::kDChi;
  if (name == "adjacency" || name == "adjacency_list") return Mechanism::kAdjacencyList;
  if (name == "gaussian") return Mechanism::kGaussianEmbedding;
  if (name == "identity") return Mechanism::kIdentity;
  Fail(ErrorCode::kInvalidArgument, "unknown mechanism: " + std::string(name));
}

void ProtectionConfig::Validate() const {
  switch (mechanism) {
    case Mechanism::kDChi:
    case Mechanism::kAdjacencyList:
      if (!(eta > 0.0) || !std::isfinite(eta)) {
        Fail(ErrorCode::kInvalidArgument, "eta must be positive and finite");
      }
      if (pi_dim < 1) Fail(ErrorCode::kInvalidArgument, "pi must be >= 1");
      break;
    case Mechanism::kGaussianEmbedding:
      if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) {
        Fail(ErrorCode::kInvalidArgument, "sigma_eps must be finite and >= 0");
      }
      break;
    case Mechanism::kIdentity:
      break;
  }
}

double ProtectionConfig::PrimaryParameter() const {
  switch (mechanism) {
    case Mechanism::kGaussianEmbedding: return sigma_eps;
    case Mechanism::kDChi:
    case Mechanism::kAdjacencyList: return eta;
    case Mechanism::kIdentity: return 0.0;
  }
  return 0.0;
}

DchiDraw SampleDchiNoise(int pi_dim, double eta, RngStream& rng) {
  if (pi_dim < 1 || !(eta > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "d_chi noise needs pi >= 1 and eta > 0");
  }
  const auto n = static_cast<Eigen::Index>(pi_dim);
  // Direction: normalised Gaussian; radius U^(1/pi) makes it uniform in the ball.
  Vector direction(n);
  double norm = 0.0;
  do {
    for (Eigen::Index j = 0; j < n; ++j) direction[j] = rng.Normal();
    norm = direction.norm();
  } while (norm == 0.0);
  double radius = std::pow(rng.Uniform(), 1.0 / static_cast<double>(pi_dim));
  direction *= radius / norm;
  double magnitude = rng.Gamma(static_cast<double>(pi_dim), 1.0 / eta);
  Vector delta = magnitude * direction;
  return {magnitude, std::move(direction), std::move(delta)};
}

Vector SampleNoise(const ProtectionConfig& cfg, std::size_t dim, RngStream& rng) {
  cfg.Validate();
  const auto n = static_cast<Eigen::Index>(dim);
  switch (cfg.mechanism) {
    case Mechanism::kIdentity:
      return Vector::Zero(n);
    case Mechanism::kGaussianEmbedding: {
      Vector noise(n);
      for (Eigen::Index j = 0; j < n; ++j) noise[j] = cfg.sigma_eps * rng.Normal();
      return noise;
    }
    case Mechanism::kDChi:
    case Mechanism::kAdjacencyList:
      if (static_cast<std::size_t>(cfg.pi_dim) != dim) {
        Fail(ErrorCode::kInvalidArgument,
             "pi (" + std::to_string(cfg.pi_dim) + ") must equal the embedding dimension (" +
                 std::to_string(dim) + ")");
      }
      return SampleDchiNoise(cfg.pi_dim, cfg.eta, rng).delta;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown mechanism");
}

Vector PerturbEmbedding(const Vector& w, const ProtectionConfig& cfg, RngStream& rng) {
  return w + SampleNoise(cfg, static_cast<std::size_t>(w.size()), rng);
}

std::vector<TokenId> RandomAdjacencyList(TokenId token, const Vector& perturbed,
                                         const EmbeddingTable& table) {
  if (token >= table.size()) Fail(ErrorCode::kInvalidArgument, "token id out of range");
  Vector origin = table.row(token);
  double threshold = (origin - perturbed).squaredNorm();
  std::vector<TokenId> out;
  for (TokenId k = 0; k < table.size(); ++k) {
    if (k == token) continue;
    if ((table.row(k) - origin).squaredNorm() < threshold) out.push_back(k);
  }
  return out;
}

std::size_t ProtectedPrompt::unprotected_count() const {
  return static_cast<std::size_t>(std::count(unprotected.begin(), unprotected.end(), true));
}

ProtectedPrompt ProtectPrompt(const Prompt& prompt, const ProtectionConfig& cfg,
                              const EmbeddingTable& table, std::uint64_t seed) {
  cfg.Validate();
  MakePrompt(prompt.token_ids, table.size());
  ProtectedPrompt out;
  out.mechanism = cfg.mechanism;
  out.prompt.token_ids.reserve(prompt.size());
  for (std::size_t m = 0; m < prompt.size(); ++m) {
    RngStream rng(seed, {m});
    TokenId original = prompt.token_ids[m];
    Vector w = table.row(original);
    Vector delta = SampleNoise(cfg, table.dim(), rng);
    Vector perturbed = w + delta;
    TokenId replacement = original;
    bool unprotected = false;
    switch (cfg.mechanism) {
      case Mechanism::kIdentity:
        break;
      case Mechanism::kDChi:
      case Mechanism::kGaussianEmbedding:
        replacement = NearestToken(perturbed, table);
        break;
      case Mechanism::kAdjacencyList: {
        auto candidates = RandomAdjacencyList(original, perturbed, table);
        if (candidates.empty()) {
          unprotected = true;
        } else {
          replacement = candidates[rng.UniformIndex(candidates.size())];
        }
        break;
      }
    }
    out.prompt.token_ids.push_back(replacement);
    out.perturbed.push_back(std::move(perturbed));
    out.noise.push_back(std::move(delta));
    out.unprotected.push_back(unprotected);
  }
  return out;
}

std::vector<Vector> ServerView(const ProtectedPrompt& protected_prompt,
                               const EmbeddingTable& table) {
  switch (protected_prompt.mechanism) {
    case Mechanism::kGaussianEmbedding:
    case Mechanism::kIdentity:
      return protected_prompt.perturbed;
    case Mechanism::kDChi:
    case Mechanism::kAdjacencyList:
      break;
  }
  std::vector<Vector> view;
  view.reserve(protected_prompt.prompt.size());
  for (TokenId id : protected_prompt.prompt.token_ids) view.push_back(table.row(id));
  return view;
}

DistributionSpec GaussianProtectedDistribution(const Vector& mean, const Vector& var,
                                               double sigma_eps) {
  if (!(sigma_eps >= 0.0)) Fail(ErrorCode::kInvalidArgument, "sigma_eps must be >= 0");
  Vector total = var.array() + sigma_eps * sigma_eps;
  return DistributionSpec::Gaussian(mean, std::move(total));
}

}  // namespace nflbench
