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

#include "nflbench/mock_llm.hpp"

#include <algorithm>
#include <limits>

#include "nflbench/error.hpp"

namespace nflbench {

MockLLM MockLLM::Create(std::vector<std::pair<Prompt, Prompt>> entries,
                        const EmbeddingTable& table) {
  if (entries.empty()) Fail(ErrorCode::kInvalidArgument, "mock LLM needs at least one entry");
  std::vector<Vector> keys;
  keys.reserve(entries.size());
  for (const auto& [key, response] : entries) {
    if (key.size() == 0) Fail(ErrorCode::kInvalidArgument, "mock LLM keys must be non-empty");
    keys.push_back(EmbedPrompt(key, table));
  }
  return MockLLM(std::move(entries), std::move(keys), table);
}

const Prompt& MockLLM::Respond(const Prompt& prompt) const {
  std::size_t best = entries_.size();
  std::size_t best_len = 0;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& key = entries_[k].first.token_ids;
    if (key.size() > prompt.size() || key.size() <= best_len) continue;
    if (std::equal(key.begin(), key.end(), prompt.token_ids.begin())) {
      best = k;
      best_len = key.size();
    }
  }
  if (best < entries_.size()) return entries_[best].second;

  Vector v = EmbedPrompt(prompt, table_);
  double best_dist = std::numeric_limits<double>::infinity();
  best = 0;
  for (std::size_t k = 0; k < key_embeddings_.size(); ++k) {
    double dist = (key_embeddings_[k] - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  return entries_[best].second;
}

ProtocolRun RunProtocol(const Prompt& d, const ProtectionConfig& cfg, const MockLLM& llm,
                        const EmbeddingTable& table, const Vocabulary& vocab) {
  ProtocolRun run;
  run.steps.push_back({1, "client prompt: " + Detokenize(d, vocab)});
  run.protection = ProtectPrompt(d, cfg, table);
  run.protected_prompt = run.protection.prompt;
  std::string noise = "protected with " + std::string(MechanismName(cfg.mechanism)) + ", noise norms";
  for (const Vector& delta : run.protection.noise) noise += " " + std::to_string(delta.norm());
  run.steps.push_back({2, noise});
  run.steps.push_back({3, "submitted: " + Detokenize(run.protected_prompt, vocab)});
  run.response = llm.Respond(run.protected_prompt);
  run.steps.push_back({4, "response: " + Detokenize(run.response, vocab)});
  return run;
}

}  // namespace nflbench
