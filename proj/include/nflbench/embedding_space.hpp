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

#ifndef NFLBENCH_EMBEDDING_SPACE_HPP_
#define NFLBENCH_EMBEDDING_SPACE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace nflbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using TokenId = std::size_t;

class Vocabulary {
 public:
  // Tokens must be unique and there must be at least two of them.
  static Vocabulary Create(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<TokenId> Find(std::string_view token) const;
  // Throws UnknownToken.
  TokenId IdOf(std::string_view token) const;

 private:
  Vocabulary() = default;

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> id_of_;
};

// |V| x M matrix; row k is the embedding of token k.
class EmbeddingTable {
 public:
  enum class Role { kCanonical, kEncoded };

  static EmbeddingTable Create(Matrix rows, Role role = Role::kCanonical);

  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
  Role role() const { return role_; }
  const Matrix& matrix() const { return rows_; }
  Vector row(TokenId id) const { return rows_.row(static_cast<Eigen::Index>(id)).transpose(); }

 private:
  EmbeddingTable(Matrix rows, Role role) : rows_(std::move(rows)), role_(role) {}

  Matrix rows_;
  Role role_;
};

struct Prompt {
  std::vector<TokenId> token_ids;

  std::size_t size() const { return token_ids.size(); }
  friend bool operator==(const Prompt&, const Prompt&) = default;
};

// Validates 1 <= length and every id < vocab_size.
Prompt MakePrompt(std::vector<TokenId> ids, std::size_t vocab_size);

struct BiLipschitz {
  double c_a;
  double c_b;
};

// The encoding g(x) = T x of canonical embedding space. For any u, v:
//   c_a ||g(u) - g(v)|| <= ||u - v|| <= c_b ||g(u) - g(v)||.
class EncoderG {
 public:
  static EncoderG Create(Matrix transform);
  static EncoderG Identity(std::size_t dim);

  const Matrix& transform() const { return transform_; }
  std::size_t dim() const { return static_cast<std::size_t>(transform_.rows()); }
  double c_a() const { return constants_.c_a; }
  double c_b() const { return constants_.c_b; }
  BiLipschitz constants() const { return constants_; }

  Vector Apply(const Vector& canonical) const;
  Vector ApplyInverse(const Vector& encoded) const;
  EmbeddingTable EncodeTable(const EmbeddingTable& canonical) const;

 private:
  EncoderG(Matrix transform, BiLipschitz constants);

  Matrix transform_;
  BiLipschitz constants_;
  Eigen::PartialPivLU<Matrix> lu_;
};

// c_a = 1/sigma_max(T), c_b = 1/sigma_min(T). Throws SingularEncoder when
// sigma_min < 1e-12 or T is not square.
BiLipschitz EstimateBiLipschitz(const Matrix& transform);

// Whitespace split over a closed vocabulary. Throws UnknownToken(unit).
Prompt Tokenize(std::string_view text, const Vocabulary& vocab);
std::string Detokenize(const Prompt& prompt, const Vocabulary& vocab);

// Mean pooling of the prompt's token rows.
Vector EmbedPrompt(const Prompt& prompt, const EmbeddingTable& table);

// Exact Euclidean nearest neighbour; ties go to the lowest id.
TokenId NearestToken(const Vector& v, const EmbeddingTable& table);

// Omega: the largest pairwise distance between rows. Throws
// DegenerateVocabulary when every row is identical.
double VocabDiameter(const EmbeddingTable& table);

// Rescales rows about their centroid so that the diameter is exactly 1.
EmbeddingTable NormalizeToUnitDiameter(const EmbeddingTable& table);

struct EmbeddingSpace {
  Vocabulary vocab;
  EmbeddingTable table;
};

// Format: first line "|V| M", then |V| lines "token x1 ... xM".
EmbeddingSpace ParseEmbeddingText(std::string_view text);
EmbeddingSpace LoadEmbeddingFile(const std::string& path);
std::string FormatEmbeddingText(const EmbeddingSpace& space);

}  // namespace nflbench

#endif  // NFLBENCH_EMBEDDING_SPACE_HPP_
