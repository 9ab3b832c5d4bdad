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

#include "nflbench/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nflbench/error.hpp"
#include "nflbench/rng.hpp"

namespace nflbench {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void ConfigFail(const std::string& message) {
  Fail(ErrorCode::kConfig, "config: " + message);
}

void RejectUnknownKeys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.contains(item.key())) ConfigFail("unknown key '" + item.key() + "' in " + where);
  }
}

double GetNumber(const json& v, const std::string& key) {
  if (!v.is_number()) ConfigFail("'" + key + "' must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) ConfigFail("'" + key + "' must be finite");
  return x;
}

std::size_t GetCount(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    ConfigFail("'" + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> GetNumbers(const json& v, const std::string& key) {
  if (!v.is_array()) ConfigFail("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const json& x : v) out.push_back(GetNumber(x, key));
  return out;
}

// "a b c" or ["a", "b", "c"].
std::vector<std::string> GetTokens(const json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_string()) {
    std::istringstream in(v.get<std::string>());
    std::string tok;
    while (in >> tok) out.push_back(tok);
  } else if (v.is_array()) {
    for (const json& t : v) {
      if (!t.is_string()) ConfigFail("'" + key + "' entries must be strings");
      out.push_back(t.get<std::string>());
    }
  } else {
    ConfigFail("'" + key + "' must be a string or an array of tokens");
  }
  if (out.empty()) ConfigFail("'" + key + "' must hold at least one token");
  return out;
}

// A number, an array of numbers, or {"linspace": [lo, hi, n]}.
std::vector<double> GetValues(const json& v, const std::string& key) {
  if (v.is_number()) return {GetNumber(v, key)};
  if (v.is_array()) {
    auto values = GetNumbers(v, key);
    if (values.empty()) ConfigFail("'" + key + "' must not be empty");
    return values;
  }
  if (v.is_object() && v.contains("linspace")) {
    RejectUnknownKeys(v, {"linspace"}, key);
    auto spec = GetNumbers(v["linspace"], key + ".linspace");
    if (spec.size() != 3 || spec[2] < 1 || spec[2] != std::floor(spec[2])) {
      ConfigFail("'" + key + ".linspace' must be [lo, hi, count]");
    }
    auto n = static_cast<std::size_t>(spec[2]);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = n == 1 ? spec[0]
                      : spec[0] + (spec[1] - spec[0]) * static_cast<double>(k) /
                                      static_cast<double>(n - 1);
    }
    return out;
  }
  ConfigFail("'" + key + "' must be a number, an array or a linspace object");
}

std::vector<ProtectionConfig> ParseGrid(const json& v) {
  if (!v.is_array() || v.empty()) ConfigFail("'mechanisms' must be a non-empty array");
  std::vector<ProtectionConfig> grid;
  for (const json& entry : v) {
    if (!entry.is_object() || !entry.contains("mechanism") || !entry["mechanism"].is_string()) {
      ConfigFail("each mechanisms entry needs a 'mechanism' name");
    }
    RejectUnknownKeys(entry, {"mechanism", "eta", "pi", "pi_dim", "sigma_eps"},
                      "mechanisms entry");
    ProtectionConfig base;
    try {
      base.mechanism = ParseMechanism(entry["mechanism"].get<std::string>());
    } catch (const Error& e) {
      ConfigFail(e.what());
    }
    std::vector<double> etas{base.eta};
    std::vector<double> pis{static_cast<double>(base.pi_dim)};
    std::vector<double> sigmas{base.sigma_eps};
    if (entry.contains("eta")) etas = GetValues(entry["eta"], "eta");
    if (entry.contains("pi")) pis = GetValues(entry["pi"], "pi");
    if (entry.contains("pi_dim")) pis = GetValues(entry["pi_dim"], "pi_dim");
    if (entry.contains("sigma_eps")) sigmas = GetValues(entry["sigma_eps"], "sigma_eps");
    for (double eta : etas) {
      for (double pi : pis) {
        for (double sigma : sigmas) {
          ProtectionConfig cfg = base;
          cfg.eta = eta;
          if (pi != std::floor(pi)) ConfigFail("'pi_dim' must be an integer");
          cfg.pi_dim = static_cast<int>(pi);
          cfg.sigma_eps = sigma;
          try {
            cfg.Validate();
          } catch (const Error& e) {
            ConfigFail(e.what());
          }
          grid.push_back(cfg);
        }
      }
    }
  }
  return grid;
}

AttackerSpec ParseAttacker(const json& v) {
  if (!v.is_object() || !v.contains("kind") || !v["kind"].is_string()) {
    ConfigFail("'attacker' needs a 'kind'");
  }
  RejectUnknownKeys(v, {"kind", "iterations", "initial_step", "decay", "p", "scale"}, "attacker");
  AttackerSpec spec;
  try {
    spec.kind = ParseAttackerKind(v["kind"].get<std::string>());
  } catch (const Error& e) {
    ConfigFail(e.what());
  }
  if (v.contains("iterations")) spec.iterations = GetCount(v["iterations"], "iterations");
  if (v.contains("initial_step")) spec.initial_step = GetNumber(v["initial_step"], "initial_step");
  if (v.contains("decay")) spec.decay = GetNumber(v["decay"], "decay");
  if (v.contains("p")) spec.calibrated_p = GetNumber(v["p"], "p");
  if (v.contains("scale")) spec.calibrated_scale = GetNumber(v["scale"], "scale");
  try {
    spec.Validate();
  } catch (const Error& e) {
    ConfigFail(e.what());
  }
  return spec;
}

EncoderSpec ParseEncoder(const json& v) {
  if (!v.is_object() || !v.contains("kind") || !v["kind"].is_string()) {
    ConfigFail("'encoder' needs a 'kind'");
  }
  RejectUnknownKeys(v, {"kind", "scale", "matrix"}, "encoder");
  EncoderSpec spec;
  std::string kind = v["kind"].get<std::string>();
  if (kind == "identity") {
    spec.kind = EncoderSpec::Kind::kIdentity;
  } else if (kind == "scale") {
    spec.kind = EncoderSpec::Kind::kScale;
    if (!v.contains("scale")) ConfigFail("scale encoder needs 'scale'");
    spec.scale = GetNumber(v["scale"], "scale");
    if (spec.scale == 0.0) ConfigFail("encoder scale must be nonzero");
  } else if (kind == "matrix") {
    spec.kind = EncoderSpec::Kind::kMatrix;
    if (!v.contains("matrix") || !v["matrix"].is_array() || v["matrix"].empty()) {
      ConfigFail("matrix encoder needs a non-empty 'matrix'");
    }
    const json& rows = v["matrix"];
    std::size_t n = rows.size();
    spec.matrix = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      auto row = GetNumbers(rows[r], "matrix");
      if (row.size() != n) ConfigFail("encoder matrix must be square");
      for (std::size_t c = 0; c < n; ++c) {
        spec.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      }
    }
  } else {
    ConfigFail("unknown encoder kind '" + kind + "'");
  }
  return spec;
}

BaselineSpec ParseBaseline(const json& v) {
  if (!v.is_object() || !v.contains("kind") || !v["kind"].is_string()) {
    ConfigFail("'baseline' needs a 'kind'");
  }
  RejectUnknownKeys(v, {"kind", "tokens", "probs", "mean", "var"}, "baseline");
  BaselineSpec spec;
  std::string kind = v["kind"].get<std::string>();
  if (kind == "uniform") {
    spec.kind = BaselineSpec::Kind::kUniform;
  } else if (kind == "uniform_over") {
    spec.kind = BaselineSpec::Kind::kUniformOver;
    if (!v.contains("tokens")) ConfigFail("uniform_over baseline needs 'tokens'");
    spec.tokens = GetTokens(v["tokens"], "tokens");
  } else if (kind == "discrete") {
    spec.kind = BaselineSpec::Kind::kDiscrete;
    if (!v.contains("probs")) ConfigFail("discrete baseline needs 'probs'");
    spec.probs = GetNumbers(v["probs"], "probs");
  } else if (kind == "gaussian") {
    spec.kind = BaselineSpec::Kind::kGaussian;
    if (!v.contains("mean") || !v.contains("var")) {
      ConfigFail("gaussian baseline needs 'mean' and 'var'");
    }
    spec.mean = GetNumbers(v["mean"], "mean");
    spec.var = GetNumbers(v["var"], "var");
  } else {
    ConfigFail("unknown baseline kind '" + kind + "'");
  }
  return spec;
}

}  // namespace

ExperimentConfig ParseExperimentConfig(std::string_view json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    ConfigFail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) ConfigFail("top level must be an object");
  RejectUnknownKeys(root,
                    {"schema", "embedding_file", "normalize", "encoder", "prompt", "prior",
                     "mechanisms", "attacker", "utility_targets", "corpus", "baseline", "omega",
                     "n_samples", "seed", "output", "xi", "leakage_orientation", "threads",
                     "tv_samples", "mock_llm", "inject_c1_multiplier"},
                    "config");
  ExperimentConfig cfg;
  if (!root.contains("schema") || !root["schema"].is_number_integer() ||
      root["schema"].get<int>() != kConfigSchema) {
    ConfigFail("'schema' must be 1");
  }
  for (const char* key : {"embedding_file", "prompt", "mechanisms", "attacker"}) {
    if (!root.contains(key)) ConfigFail(std::string("missing '") + key + "'");
  }
  if (!root["embedding_file"].is_string()) ConfigFail("'embedding_file' must be a string");
  std::filesystem::path emb(root["embedding_file"].get<std::string>());
  if (emb.is_relative() && !base_dir.empty()) emb = std::filesystem::path(base_dir) / emb;
  cfg.embedding_file = emb.lexically_normal().string();

  if (root.contains("normalize")) {
    if (!root["normalize"].is_boolean()) ConfigFail("'normalize' must be a boolean");
    cfg.normalize = root["normalize"].get<bool>();
  }
  if (root.contains("encoder")) cfg.encoder = ParseEncoder(root["encoder"]);
  cfg.prompt = GetTokens(root["prompt"], "prompt");
  if (root.contains("prior")) {
    const json& prior = root["prior"];
    if (!prior.is_object()) ConfigFail("'prior' must be an object");
    RejectUnknownKeys(prior, {"mean", "var"}, "prior");
    if (prior.contains("mean")) cfg.prior_mean = GetNumbers(prior["mean"], "prior.mean");
    if (prior.contains("var")) cfg.prior_var = GetNumbers(prior["var"], "prior.var");
  }
  cfg.grid = ParseGrid(root["mechanisms"]);
  cfg.attacker = ParseAttacker(root["attacker"]);
  if (root.contains("utility_targets")) {
    const json& targets = root["utility_targets"];
    if (!targets.is_array() || targets.empty()) {
      ConfigFail("'utility_targets' must be a non-empty array");
    }
    for (const json& t : targets) cfg.utility_targets.push_back(GetTokens(t, "utility_targets"));
  }
  if (root.contains("corpus")) {
    if (!root["corpus"].is_array()) ConfigFail("'corpus' must be an array");
    for (const json& t : root["corpus"]) cfg.corpus.push_back(GetTokens(t, "corpus"));
  }
  if (root.contains("baseline")) cfg.baseline = ParseBaseline(root["baseline"]);
  if (root.contains("omega")) {
    cfg.omega = GetNumber(root["omega"], "omega");
    if (cfg.omega < 0.0) ConfigFail("'omega' must be positive (or 0 for the diameter)");
  }
  if (root.contains("n_samples")) cfg.n_samples = GetCount(root["n_samples"], "n_samples");
  if (cfg.n_samples < kMinSamples) ConfigFail("'n_samples' must be at least 100");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) ConfigFail("'seed' must be a nonnegative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("output")) {
    if (!root["output"].is_string()) ConfigFail("'output' must be a string");
    cfg.output = root["output"].get<std::string>();
  }
  if (root.contains("xi")) cfg.xi = GetNumber(root["xi"], "xi");
  if (cfg.xi < 0.0 || cfg.xi > 1.0) ConfigFail("'xi' must lie in [0, 1]");
  if (root.contains("leakage_orientation")) {
    if (!root["leakage_orientation"].is_string()) {
      ConfigFail("'leakage_orientation' must be a string");
    }
    try {
      cfg.orientation = ParseLeakageOrientation(root["leakage_orientation"].get<std::string>());
    } catch (const Error& e) {
      ConfigFail(e.what());
    }
  }
  if (root.contains("threads")) cfg.threads = GetCount(root["threads"], "threads");
  if (root.contains("tv_samples")) cfg.tv_samples = GetCount(root["tv_samples"], "tv_samples");
  if (cfg.tv_samples < kMinSamples) ConfigFail("'tv_samples' must be at least 100");
  if (root.contains("mock_llm")) {
    const json& entries = root["mock_llm"];
    if (!entries.is_array()) ConfigFail("'mock_llm' must be an array");
    for (const json& e : entries) {
      if (!e.is_object() || !e.contains("prompt") || !e.contains("response")) {
        ConfigFail("mock_llm entries need 'prompt' and 'response'");
      }
      RejectUnknownKeys(e, {"prompt", "response"}, "mock_llm entry");
      cfg.mock_llm.emplace_back(GetTokens(e["prompt"], "mock_llm.prompt"),
                                GetTokens(e["response"], "mock_llm.response"));
    }
  }
  if (root.contains("inject_c1_multiplier")) {
    cfg.inject_c1_multiplier = GetNumber(root["inject_c1_multiplier"], "inject_c1_multiplier");
  }
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) ConfigFail("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseExperimentConfig(buffer.str(),
                               std::filesystem::path(path).parent_path().string());
}

namespace {

Prompt PromptFromTokens(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const std::string& t : tokens) {
    auto id = vocab.Find(t);
    if (!id) ConfigFail("token '" + t + "' is not in the vocabulary");
    ids.push_back(*id);
  }
  return MakePrompt(std::move(ids), vocab.size());
}

Vector ToVector(const std::vector<double>& values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) v(static_cast<Eigen::Index>(k)) = values[k];
  return v;
}

DistributionSpec MakeBaseline(const BaselineSpec& spec, const EmbeddingSpace& space) {
  std::size_t dim = space.table.dim();
  try {
    switch (spec.kind) {
      case BaselineSpec::Kind::kUniform:
        return BaselineDistribution(space.vocab, space.table);
      case BaselineSpec::Kind::kUniformOver: {
        std::vector<TokenId> ids = PromptFromTokens(spec.tokens, space.vocab).token_ids;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return UniformOver(ids, space.vocab.size());
      }
      case BaselineSpec::Kind::kDiscrete:
        if (spec.probs.size() != space.vocab.size()) {
          ConfigFail("discrete baseline needs one probability per token");
        }
        return DistributionSpec::Discrete(spec.probs);
      case BaselineSpec::Kind::kGaussian:
        if (spec.mean.size() != dim || spec.var.size() != dim) {
          ConfigFail("gaussian baseline dimension differs from the embedding dimension");
        }
        return DistributionSpec::Gaussian(ToVector(spec.mean), ToVector(spec.var));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    ConfigFail(std::string("baseline: ") + e.what());
  }
  ConfigFail("unknown baseline kind");
}

EncoderG MakeEncoder(const EncoderSpec& spec, std::size_t dim) {
  switch (spec.kind) {
    case EncoderSpec::Kind::kIdentity:
      return EncoderG::Identity(dim);
    case EncoderSpec::Kind::kScale:
      return EncoderG::Create(Matrix::Identity(static_cast<Eigen::Index>(dim),
                                               static_cast<Eigen::Index>(dim)) *
                              spec.scale);
    case EncoderSpec::Kind::kMatrix:
      if (static_cast<std::size_t>(spec.matrix.rows()) != dim) {
        ConfigFail("encoder matrix dimension differs from the embedding dimension");
      }
      return EncoderG::Create(spec.matrix);
  }
  ConfigFail("unknown encoder kind");
}

}  // namespace

Experiment::Experiment(ExperimentConfig config, EmbeddingSpace space, EncoderG encoder,
                       Prompt prompt, double omega, UtilityFunctionSpec utility,
                       DistributionSpec prior, DistributionSpec baseline, MockLLM llm,
                       Attacker attacker)
    : config_(std::move(config)),
      space_(std::move(space)),
      encoder_(std::move(encoder)),
      prompt_(std::move(prompt)),
      omega_(omega),
      utility_(std::move(utility)),
      prior_(std::move(prior)),
      baseline_(std::move(baseline)),
      llm_(std::move(llm)),
      attacker_(std::move(attacker)) {}

Experiment Experiment::FromConfig(ExperimentConfig config) {
  if (config.grid.empty()) ConfigFail("mechanism grid is empty");
  if (config.n_samples < kMinSamples) ConfigFail("'n_samples' must be at least 100");
  if (config.xi < 0.0 || config.xi > 1.0) ConfigFail("'xi' must lie in [0, 1]");
  EmbeddingSpace space = LoadEmbeddingFile(config.embedding_file);
  if (config.normalize) space.table = NormalizeToUnitDiameter(space.table);
  std::size_t dim = space.table.dim();

  EncoderG encoder = MakeEncoder(config.encoder, dim);
  Prompt prompt = PromptFromTokens(config.prompt, space.vocab);
  double omega = config.omega > 0.0 ? config.omega : VocabDiameter(space.table);

  std::vector<Prompt> targets;
  if (config.utility_targets.empty()) {
    targets.push_back(prompt);
  } else {
    for (const auto& t : config.utility_targets) targets.push_back(PromptFromTokens(t, space.vocab));
  }
  UtilityFunctionSpec utility = MakeUtility(targets, space.table, omega);

  Vector mean = config.prior_mean.empty() ? EmbedPrompt(prompt, space.table)
                                          : ToVector(config.prior_mean);
  Vector var = config.prior_var.empty() ? Vector::Ones(static_cast<Eigen::Index>(dim))
                                        : ToVector(config.prior_var);
  if (static_cast<std::size_t>(mean.size()) != dim || static_cast<std::size_t>(var.size()) != dim) {
    ConfigFail("prior dimension differs from the embedding dimension");
  }
  DistributionSpec prior = DistributionSpec::Gaussian(mean, var);
  DistributionSpec baseline = MakeBaseline(config.baseline, space);

  for (const ProtectionConfig& cfg : config.grid) {
    bool needs_pi = cfg.mechanism == Mechanism::kDChi ||
                    cfg.mechanism == Mechanism::kAdjacencyList;
    if (needs_pi && static_cast<std::size_t>(cfg.pi_dim) != dim) {
      ConfigFail("pi_dim must equal the embedding dimension");
    }
  }

  std::vector<std::pair<Prompt, Prompt>> entries;
  for (const auto& [key, response] : config.mock_llm) {
    entries.emplace_back(PromptFromTokens(key, space.vocab),
                         PromptFromTokens(response, space.vocab));
  }
  if (entries.empty()) entries.emplace_back(prompt, prompt);
  MockLLM llm = MockLLM::Create(std::move(entries), space.table);

  std::optional<BigramModel> bigram;
  if (config.attacker.kind == AttackerKind::kContextualBigram) {
    std::vector<Prompt> corpus;
    for (const auto& t : config.corpus) corpus.push_back(PromptFromTokens(t, space.vocab));
    if (corpus.empty()) corpus = targets;
    bigram = BigramModel::Train(corpus, space.vocab.size());
  }
  Attacker attacker(space.table, encoder, config.attacker, std::move(bigram));

  return Experiment(std::move(config), std::move(space), std::move(encoder), std::move(prompt),
                    omega, std::move(utility), std::move(prior), std::move(baseline),
                    std::move(llm), std::move(attacker));
}

ProtectionConfig Experiment::PointConfig(std::size_t index) const {
  if (index >= config_.grid.size()) Fail(ErrorCode::kInvalidArgument, "grid index out of range");
  ProtectionConfig cfg = config_.grid[index];
  cfg.seed = DeriveSeed(config_.seed, {index, 0});
  return cfg;
}

Vector ProtectEmbedding(const Vector& w, const ProtectionConfig& cfg, const EmbeddingTable& table,
                        RngStream& rng) {
  switch (cfg.mechanism) {
    case Mechanism::kIdentity:
      return w;
    case Mechanism::kGaussianEmbedding:
      return PerturbEmbedding(w, cfg, rng);
    case Mechanism::kDChi:
      return table.row(NearestToken(PerturbEmbedding(w, cfg, rng), table));
    case Mechanism::kAdjacencyList: {
      TokenId token = NearestToken(w, table);
      Vector perturbed = table.row(token) + SampleNoise(cfg, table.dim(), rng);
      auto phi = RandomAdjacencyList(token, perturbed, table);
      if (phi.empty()) return table.row(token);
      return table.row(phi[rng.UniformIndex(phi.size())]);
    }
  }
  Fail(ErrorCode::kInvalidArgument, "unknown mechanism");
}

std::optional<DistributionSpec> AnalyticProtectedDistribution(const DistributionSpec& prior,
                                                              const ProtectionConfig& cfg) {
  if (prior.kind() != DistributionSpec::Kind::kDiagonalGaussian) return std::nullopt;
  const DiagonalGaussian& g = prior.gaussian();
  if (cfg.mechanism == Mechanism::kIdentity) return prior;
  if (cfg.mechanism == Mechanism::kGaussianEmbedding) {
    return GaussianProtectedDistribution(g.mean, g.var, cfg.sigma_eps);
  }
  return std::nullopt;
}

namespace {

void NoteAssumption(TradeoffRecord& rec, const Error& e) {
  rec.status = RecordStatus::kAssumptionViolated;
  if (!rec.message.empty()) rec.message += "; ";
  rec.message += std::string(ErrorCodeName(e.code())) + ": " + e.what();
}

bool IsAssumptionCode(ErrorCode code) {
  return code == ErrorCode::kAssumptionViolated || code == ErrorCode::kSideConditionViolated ||
         code == ErrorCode::kNonpositiveC1;
}

void FillNaN(TradeoffRecord& rec) {
  rec.eps_p = {kNaN, kNaN};
  rec.eps_u = {kNaN, kNaN};
  rec.delta = kNaN;
  rec.tv_p_pt = {kNaN, kNaN};
  rec.tv_pt_pb = {kNaN, kNaN};
  rec.tv_p_pb = {kNaN, kNaN};
  rec.constants.c = kNaN;
  rec.constants.alpha = kNaN;
  rec.constants.c0 = kNaN;
  rec.constants.c2 = kNaN;
  rec.constants.p = kNaN;
  rec.c1 = rec.c1_unscaled = rec.c2 = kNaN;
  rec.slack_l1 = rec.slack_l2 = rec.slack_l3 = rec.nfl_slack = {kNaN, kNaN};
  rec.decomposition.parts = {kNaN, kNaN, kNaN};
  rec.decomposition.sum = kNaN;
}

void Evaluate(const Experiment& ex, const ProtectionConfig& cfg, std::size_t index,
              TradeoffRecord& rec) {
  const ExperimentConfig& config = ex.config();
  const EmbeddingTable& table = ex.space().table;
  const Prompt& d = ex.prompt();
  const std::size_t n = config.n_samples;
  const std::uint64_t seed = config.seed;

  RngStream prior_rng(seed, {index, 1});
  RngStream noise_rng(seed, {index, 2});
  RngStream baseline_rng(seed, {index, 3});
  Matrix clear = SampleDistribution(ex.prior(), n, table, prior_rng);
  Matrix baseline = SampleDistribution(ex.baseline(), n, table, baseline_rng);
  Matrix released(clear.rows(), clear.cols());
  for (Eigen::Index j = 0; j < clear.rows(); ++j) {
    released.row(j) = ProtectEmbedding(clear.row(j).transpose(), cfg, table, noise_rng).transpose();
  }

  // The attacker sees the released embedding at every prompt position.
  auto observe = [&](const Matrix& rows, Eigen::Index j) {
    return std::vector<Vector>(d.size(), rows.row(j).transpose());
  };
  std::vector<double> r_protected(n), r_baseline(n), deltas(n), u_clear(n), u_protected(n);
  double delta_total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    auto observed = observe(released, jj);
    RecoveryExtentResult r =
        RecoveryExtent(ex.attacker().Run(observed), d, table, ex.encoder(), ex.omega());
    r_protected[j] = r.value;
    rec.clamp_events += r.clamp_events;
    RecoveryExtentResult rb = RecoveryExtent(ex.attacker().Run(observe(baseline, jj)), d, table,
                                             ex.encoder(), ex.omega());
    r_baseline[j] = rb.value;
    rec.clamp_events += rb.clamp_events;
    // The recovery bound is scored against d, so its distortion is measured
    // from d; the reported distortion is the mechanism's own, from the
    // unprotected sample's reading to the protected one.
    Prompt protected_reading = InvertNearestNeighbor(observed, table);
    deltas[j] = DistortionExtent(d, protected_reading, table, ex.encoder());
    delta_total += DistortionExtent(InvertNearestNeighbor(observe(clear, jj), table),
                                    protected_reading, table, ex.encoder());
    u_clear[j] = ex.utility().Evaluate(clear.row(jj).transpose());
    u_protected[j] = ex.utility().Evaluate(released.row(jj).transpose());
  }
  rec.delta = delta_total / static_cast<double>(n);
  rec.eps_p = PrivacyLeakage(r_protected, r_baseline, config.orientation);
  rec.eps_u = UtilityLoss(u_clear, u_protected, /*paired=*/true);

  std::optional<DistributionSpec> analytic = AnalyticProtectedDistribution(ex.prior(), cfg);
  DistributionSpec protected_dist =
      analytic ? *analytic : DistributionSpec::FromSamples(released);
  MixedTvOptions tv_options;
  tv_options.samples = config.tv_samples;
  tv_options.seed = DeriveSeed(seed, {index, 4});
  tv_options.gaussian.seed = DeriveSeed(seed, {index, 5});
  rec.tv_p_pt = TotalVariation(ex.prior(), protected_dist, table, tv_options);
  rec.tv_pt_pb = TotalVariation(protected_dist, ex.baseline(), table, tv_options);
  rec.tv_p_pb = TotalVariation(ex.prior(), ex.baseline(), table, tv_options);

  BoundConstants& k = rec.constants;
  k.omega = ex.omega();
  k.c_a = ex.encoder().c_a();
  k.c_b = ex.encoder().c_b();
  k.iterations = config.attacker.iterations;
  bool calibrated = config.attacker.kind == AttackerKind::kCalibrated;
  if (calibrated) {
    k.p = config.attacker.calibrated_p;
    k.c0 = config.attacker.CalibratedC0();
    k.c2 = config.attacker.CalibratedC2();
  }
  // With P~ = P^ the leakage bound reads eps_p >= 0 and needs no c.
  if (!(rec.tv_pt_pb.value == 0.0 && rec.tv_pt_pb.se == 0.0)) {
    try {
      k.c = EstimateC(r_protected, r_baseline);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAssumptionViolated) throw;
      NoteAssumption(rec, e);
    }
  }
  if (rec.tv_p_pt.value == 0.0 && rec.tv_p_pt.se == 0.0) {
    // P~ = P: the utility bound needs no tolerance, so C2 is taken as 0.
    k.alpha = 0.0;
  } else {
    try {
      Matrix candidates(clear.rows() + released.rows(), clear.cols());
      candidates << clear, released;
      double u_star = OptimalUtility(ex.utility(), candidates);
      k.alpha = EstimateAlpha(u_protected, {}, u_star, rec.tv_p_pt.value / 2.0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAssumptionViolated) throw;
      NoteAssumption(rec, e);
    }
  }
  rec.c2 = k.C2();
  if (calibrated) {
    rec.c1 = k.C1() * config.inject_c1_multiplier;
    rec.c1_unscaled = k.C1Unscaled();
  }
  if (!calibrated) {
    rec.message = "bound checks need the calibrated attacker";
    return;
  }
  if (rec.status != RecordStatus::kOk) return;

  try {
    LemmaInputs in{r_protected, deltas, rec.eps_p, rec.eps_u, rec.tv_p_pt, rec.tv_pt_pb};
    LemmaSlacks slacks = CheckLemmaBounds(in, rec.c1, rec.c2, k);
    rec.slack_l1 = slacks.l1;
    rec.slack_l2 = slacks.l2;
    rec.slack_l3 = slacks.l3;
    rec.nfl_slack = CheckNfl(rec.c1, rec.c2, rec.eps_p, rec.eps_u, rec.tv_p_pb);
    rec.decomposition = DecomposeNfl(rec.c1, rec.c2, rec.eps_p.value, rec.eps_u.value,
                                     rec.tv_p_pt.value, rec.tv_pt_pb.value, rec.tv_p_pb.value);
  } catch (const Error& e) {
    if (!IsAssumptionCode(e.code())) throw;
    NoteAssumption(rec, e);
  }
}

}  // namespace

TradeoffRecord EvaluatePoint(const Experiment& experiment, std::size_t index) {
  TradeoffRecord rec;
  rec.index = index;
  FillNaN(rec);
  ProtectionConfig cfg = experiment.PointConfig(index);
  rec.mechanism = std::string(MechanismName(cfg.mechanism));
  rec.param = cfg.PrimaryParameter();
  try {
    Evaluate(experiment, cfg, index, rec);
  } catch (const Error& e) {
    rec.status = IsAssumptionCode(e.code()) ? RecordStatus::kAssumptionViolated
                                            : RecordStatus::kError;
    if (!rec.message.empty()) rec.message += "; ";
    rec.message += std::string(ErrorCodeName(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    rec.status = RecordStatus::kError;
    rec.message = e.what();
  }
  return rec;
}

std::vector<TradeoffRecord> Sweep(const Experiment& experiment) {
  std::size_t points = experiment.config().grid.size();
  std::vector<TradeoffRecord> records(points);
  std::size_t threads = experiment.config().threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, points);
  if (threads <= 1) {
    for (std::size_t i = 0; i < points; ++i) records[i] = EvaluatePoint(experiment, i);
    return records;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= points) return;
          i = next++;
        }
        records[i] = EvaluatePoint(experiment, i);
      }
    });
  }
  for (auto& w : workers) w.join();
  return records;
}

std::optional<std::size_t> SelectOptimum(const std::vector<TradeoffRecord>& records, double xi) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TradeoffRecord& r = records[i];
    if (r.status == RecordStatus::kError) continue;
    if (!std::isfinite(r.eps_p.value) || !std::isfinite(r.eps_u.value)) continue;
    if (r.eps_p.value > xi) continue;
    if (!best || r.eps_u.value < records[*best].eps_u.value) best = i;
  }
  return best;
}

namespace {

constexpr double kRoundoff = 1e-12;
constexpr double kDecompositionTolerance = 1e-9;

bool SlackHolds(const Estimate& s) { return s.value >= -3.0 * s.se - kRoundoff; }

std::string FormatEstimate(const Estimate& e) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g (se %.2g)", e.value, e.se);
  return buf;
}

}  // namespace

VerifyReport VerifyRecords(const std::vector<TradeoffRecord>& records) {
  VerifyReport report;
  std::ostringstream out;
  for (const TradeoffRecord& r : records) {
    char head[160];
    std::snprintf(head, sizeof(head), "point %zu %s param=%.6g: ", r.index, r.mechanism.c_str(),
                  r.param);
    out << head;
    if (r.status == RecordStatus::kError) {
      ++report.errors;
      out << "ERROR " << r.message << "\n";
      continue;
    }
    if (r.status == RecordStatus::kAssumptionViolated) {
      ++report.assumption_violated;
      out << "ASSUMPTION-VIOLATED " << r.message << "\n";
      continue;
    }
    double residual = std::abs(r.decomposition.sum - r.nfl_slack.value);
    bool ok = SlackHolds(r.nfl_slack) && SlackHolds(r.slack_l1) && SlackHolds(r.slack_l2) &&
              SlackHolds(r.slack_l3) && residual <= kDecompositionTolerance;
    out << (ok ? "PASS" : "VIOLATION") << " nfl_slack=" << FormatEstimate(r.nfl_slack)
        << " L1=" << FormatEstimate(r.slack_l1) << " L2=" << FormatEstimate(r.slack_l2)
        << " L3=" << FormatEstimate(r.slack_l3) << " decomposition_residual=" << residual
        << " eps_p=" << FormatEstimate(r.eps_p) << " eps_u=" << FormatEstimate(r.eps_u)
        << " C1=" << r.c1 << " C2=" << r.c2 << "\n";
    if (ok) {
      ++report.passed;
    } else {
      ++report.violations;
    }
  }
  if (report.violations > 0) {
    report.verdict = Verdict::kViolation;
  } else if (report.errors > 0) {
    report.verdict = Verdict::kConfigError;
  }
  char summary[160];
  std::snprintf(summary, sizeof(summary),
                "summary: %zu passed, %zu assumption-violated, %zu violations, %zu errors\n",
                report.passed, report.assumption_violated, report.violations, report.errors);
  out << summary;
  report.text = out.str();
  return report;
}

VerifyReport VerifyNfl(const Experiment& experiment) {
  if (experiment.config().attacker.kind != AttackerKind::kCalibrated) {
    ConfigFail("verify-nfl needs the calibrated attacker");
  }
  return VerifyRecords(Sweep(experiment));
}

}  // namespace nflbench
