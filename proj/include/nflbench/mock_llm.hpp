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

#ifndef NFLBENCH_MOCK_LLM_HPP_
#define NFLBENCH_MOCK_LLM_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nflbench/embedding_space.hpp"
#include "nflbench/protection.hpp"

namespace nflbench {

// Stand-in server: a table from prompt prefixes to responses. A prompt gets the
// response of its longest stored prefix; with no stored prefix it gets the
// entry whose mean embedding is nearest (lowest index on ties).
class MockLLM {
 public:
  // Throws InvalidArgument when `entries` is empty or holds an empty key.
  static MockLLM Create(std::vector<std::pair<Prompt, Prompt>> entries,
                        const EmbeddingTable& table);

  std::size_t size() const { return entries_.size(); }
  const Prompt& Respond(const Prompt& prompt) const;

 private:
  MockLLM(std::vector<std::pair<Prompt, Prompt>> entries, std::vector<Vector> keys,
          EmbeddingTable table)
      : entries_(std::move(entries)), key_embeddings_(std::move(keys)), table_(std::move(table)) {}

  std::vector<std::pair<Prompt, Prompt>> entries_;
  std::vector<Vector> key_embeddings_;
  EmbeddingTable table_;
};

struct ProtocolStep {
  int step = 0;  // 1..4
  std::string description;
};

struct ProtocolRun {
  Prompt protected_prompt;  // d~
  Prompt response;          // r~
  ProtectedPrompt protection;
  std::vector<ProtocolStep> steps;
};

// 1: the client holds d; 2: protects it into d~; 3: submits d~; 4: the server
// returns r~.
ProtocolRun RunProtocol(const Prompt& d, const ProtectionConfig& cfg, const MockLLM& llm,
                        const EmbeddingTable& table, const Vocabulary& vocab);

}  // namespace nflbench

#endif  // NFLBENCH_MOCK_LLM_HPP_
