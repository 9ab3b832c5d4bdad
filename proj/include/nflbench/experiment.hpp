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

#ifndef NFLBENCH_EXPERIMENT_HPP_
#define NFLBENCH_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nflbench/attack.hpp"
#include "nflbench/distributions.hpp"
#include "nflbench/embedding_space.hpp"
#include "nflbench/metrics.hpp"
#include "nflbench/mock_llm.hpp"
#include "nflbench/protection.hpp"

namespace nflbench {

inline constexpr int kConfigSchema = 1;

struct EncoderSpec {
  enum class Kind { kIdentity, kScale, kMatrix };
  Kind kind = Kind::kIdentity;
  double scale = 1.0;
  Matrix matrix;
};

// The prompt-independent reference distribution P^.
struct BaselineSpec {
  enum class Kind { kUniform, kUniformOver, kDiscrete, kGaussian };
  Kind kind = Kind::kUniform;
  std::vector<std::string> tokens;  // kUniformOver
  std::vector<double> probs;        // kDiscrete, one per vocabulary entry
  std::vector<double> mean;         // kGaussian
  std::vector<double> var;
};

struct ExperimentConfig {
  int schema = kConfigSchema;
  std::string embedding_file;  // resolved against the config's directory
  bool normalize = false;
  EncoderSpec encoder;
  std::vector<std::string> prompt;  // the client prompt d
  // Diagonal Gaussian prior P over the prompt embedding; defaults to
  // N(e(d), I).
  std::vector<double> prior_mean;
  std::vector<double> prior_var;
  std::vector<ProtectionConfig> grid;
  AttackerSpec attacker;
  std::vector<std::vector<std::string>> utility_targets;  // defaults to {d}
  std::vector<std::vector<std::string>> corpus;           // bigram training text
  BaselineSpec baseline;
  double omega = 0.0;  // 0 means the vocabulary diameter
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  std::string output;
  double xi = 1.0;
  LeakageOrientation orientation = LeakageOrientation::kProtectedMinusBaseline;
  std::size_t threads = 0;  // 0 means hardware concurrency
  std::size_t tv_samples = 100000;
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> mock_llm;
  double inject_c1_multiplier = 1.0;
};

// Throws ConfigError (ErrorCode::kConfig) on schema or value problems.
ExperimentConfig ParseExperimentConfig(std::string_view json_text, const std::string& base_dir);
ExperimentConfig LoadExperimentConfig(const std::string& path);

// A validated configuration with every derived object materialised.
class Experiment {
 public:
  static Experiment FromConfig(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  void set_seed(std::uint64_t seed) { config_.seed = seed; }
  const EmbeddingSpace& space() const { return space_; }
  const EncoderG& encoder() const { return encoder_; }
  const Prompt& prompt() const { return prompt_; }
  double omega() const { return omega_; }
  const UtilityFunctionSpec& utility() const { return utility_; }
  const DistributionSpec& prior() const { return prior_; }
  const DistributionSpec& baseline() const { return baseline_; }
  const MockLLM& llm() const { return llm_; }
  const Attacker& attacker() const { return attacker_; }

  // The protection config of grid point `index` with its stream seed filled in.
  ProtectionConfig PointConfig(std::size_t index) const;

 private:
  Experiment(ExperimentConfig config, EmbeddingSpace space, EncoderG encoder, Prompt prompt,
             double omega, UtilityFunctionSpec utility, DistributionSpec prior,
             DistributionSpec baseline, MockLLM llm, Attacker attacker);

  ExperimentConfig config_;
  EmbeddingSpace space_;
  EncoderG encoder_;
  Prompt prompt_;
  double omega_;
  UtilityFunctionSpec utility_;
  DistributionSpec prior_;
  DistributionSpec baseline_;
  MockLLM llm_;
  Attacker attacker_;
};

// Releases one embedding through the mechanism: embedding-level mechanisms
// return w + noise, token-level ones return the released token's embedding.
Vector ProtectEmbedding(const Vector& w, const ProtectionConfig& cfg, const EmbeddingTable& table,
                        RngStream& rng);

// The analytic P~ when available (Gaussian or Identity on a Gaussian prior).
std::optional<DistributionSpec> AnalyticProtectedDistribution(const DistributionSpec& prior,
                                                              const ProtectionConfig& cfg);

// Every metric, constant and slack for one grid point. Errors inside the
// point are captured in the record's status and message.
TradeoffRecord EvaluatePoint(const Experiment& experiment, std::size_t index);

// One record per grid point, ordered by index; independent of thread count.
std::vector<TradeoffRecord> Sweep(const Experiment& experiment);

// argmin eps_u over non-error records with eps_p <= xi (lowest index on ties).
std::optional<std::size_t> SelectOptimum(const std::vector<TradeoffRecord>& records, double xi);

enum class Verdict { kPass = 0, kViolation = 1, kConfigError = 2 };

struct VerifyReport {
  Verdict verdict = Verdict::kPass;
  std::size_t passed = 0;
  std::size_t assumption_violated = 0;
  std::size_t violations = 0;
  std::size_t errors = 0;
  std::string text;
};

// Checks the lemma and NFL slacks of every record (>= -3 SE) and the
// decomposition identity (1e-9).
VerifyReport VerifyRecords(const std::vector<TradeoffRecord>& records);
// Requires the calibrated attacker (ConfigError otherwise), then sweeps and
// verifies.
VerifyReport VerifyNfl(const Experiment& experiment);

}  // namespace nflbench

#endif  // NFLBENCH_EXPERIMENT_HPP_
