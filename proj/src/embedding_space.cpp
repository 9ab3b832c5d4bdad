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

#include "nflbench/embedding_space.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nflbench/error.hpp"

namespace nflbench {

namespace {

constexpr double kSingularTolerance = 1e-12;

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::vector<std::string_view> SplitWhitespace(std::string_view text) {
  std::vector<std::string_view> units;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) units.push_back(text.substr(start, i - start));
  }
  return units;
}

}  // namespace

Vocabulary Vocabulary::Create(std::vector<std::string> tokens) {
  if (tokens.size() < 2) {
    Fail(ErrorCode::kInvalidArgument, "vocabulary needs at least 2 tokens");
  }
  Vocabulary vocab;
  vocab.id_of_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) {
      Fail(ErrorCode::kInvalidArgument, "empty token string");
    }
    if (!vocab.id_of_.emplace(tokens[i], i).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate token: " + tokens[i]);
    }
  }
  vocab.tokens_ = std::move(tokens);
  return vocab;
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = id_of_.find(std::string(token));
  if (it == id_of_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::IdOf(std::string_view token) const {
  auto id = Find(token);
  if (!id) Fail(ErrorCode::kUnknownToken, std::string(token));
  return *id;
}

EmbeddingTable EmbeddingTable::Create(Matrix rows, Role role) {
  if (rows.rows() < 1 || rows.cols() < 1) {
    Fail(ErrorCode::kInvalidArgument, "embedding table must be non-empty");
  }
  if (!rows.allFinite()) {
    Fail(ErrorCode::kInvalidArgument, "embedding table has non-finite entries");
  }
  return EmbeddingTable(std::move(rows), role);
}

Prompt MakePrompt(std::vector<TokenId> ids, std::size_t vocab_size) {
  if (ids.empty()) Fail(ErrorCode::kInvalidArgument, "prompt is empty");
  for (TokenId id : ids) {
    if (id >= vocab_size) {
      Fail(ErrorCode::kInvalidArgument,
           "token id " + std::to_string(id) + " out of range");
    }
  }
  return Prompt{std::move(ids)};
}

BiLipschitz EstimateBiLipschitz(const Matrix& transform) {
  if (transform.rows() != transform.cols() || transform.rows() == 0) {
    Fail(ErrorCode::kSingularEncoder, "encoder transform must be square");
  }
  if (!transform.allFinite()) {
    Fail(ErrorCode::kSingularEncoder, "encoder transform is not finite");
  }
  Eigen::JacobiSVD<Matrix> svd(transform);
  const Vector& sv = svd.singularValues();
  double sigma_max = sv.maxCoeff();
  double sigma_min = sv.minCoeff();
  if (!(sigma_min >= kSingularTolerance)) {
    Fail(ErrorCode::kSingularEncoder, "encoder transform is singular");
  }
  return {1.0 / sigma_max, 1.0 / sigma_min};
}

EncoderG::EncoderG(Matrix transform, BiLipschitz constants)
    : transform_(std::move(transform)), constants_(constants), lu_(transform_) {}

EncoderG EncoderG::Create(Matrix transform) {
  BiLipschitz constants = EstimateBiLipschitz(transform);
  return EncoderG(std::move(transform), constants);
}

EncoderG EncoderG::Identity(std::size_t dim) {
  auto n = static_cast<Eigen::Index>(dim);
  return Create(Matrix::Identity(n, n));
}

Vector EncoderG::Apply(const Vector& canonical) const {
  return transform_ * canonical;
}

Vector EncoderG::ApplyInverse(const Vector& encoded) const {
  return lu_.solve(encoded);
}

EmbeddingTable EncoderG::EncodeTable(const EmbeddingTable& canonical) const {
  if (canonical.dim() != dim()) {
    Fail(ErrorCode::kInvalidArgument, "encoder/table dimension mismatch");
  }
  return EmbeddingTable::Create(canonical.matrix() * transform_.transpose(),
                                EmbeddingTable::Role::kEncoded);
}

Prompt Tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (std::string_view unit : SplitWhitespace(text)) {
    ids.push_back(vocab.IdOf(unit));
  }
  return MakePrompt(std::move(ids), vocab.size());
}

std::string Detokenize(const Prompt& prompt, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(prompt.token_ids[i]);
  }
  return out;
}

Vector EmbedPrompt(const Prompt& prompt, const EmbeddingTable& table) {
  if (prompt.token_ids.empty()) {
    Fail(ErrorCode::kInvalidArgument, "prompt is empty");
  }
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
  for (TokenId id : prompt.token_ids) {
    if (id >= table.size()) {
      Fail(ErrorCode::kInvalidArgument, "token id out of range for table");
    }
    sum += table.matrix().row(static_cast<Eigen::Index>(id)).transpose();
  }
  return sum / static_cast<double>(prompt.size());
}

TokenId NearestToken(const Vector& v, const EmbeddingTable& table) {
  if (static_cast<std::size_t>(v.size()) != table.dim()) {
    Fail(ErrorCode::kInvalidArgument, "vector/table dimension mismatch");
  }
  const Matrix& rows = table.matrix();
  TokenId best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    double d2 = (rows.row(k).transpose() - v).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<TokenId>(k);
    }
  }
  return best;
}

double VocabDiameter(const EmbeddingTable& table) {
  const Matrix& rows = table.matrix();
  if (rows.rows() < 2) {
    Fail(ErrorCode::kDegenerateVocabulary, "need at least two tokens");
  }
  double best = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j) {
      best = std::max(best, (rows.row(i) - rows.row(j)).squaredNorm());
    }
  }
  if (best == 0.0) {
    Fail(ErrorCode::kDegenerateVocabulary, "all embeddings are identical");
  }
  return std::sqrt(best);
}

EmbeddingTable NormalizeToUnitDiameter(const EmbeddingTable& table) {
  double omega = VocabDiameter(table);
  Eigen::RowVectorXd centroid = table.matrix().colwise().mean();
  Matrix rows = (table.matrix().rowwise() - centroid) / omega;
  return EmbeddingTable::Create(std::move(rows), table.role());
}

EmbeddingSpace ParseEmbeddingText(std::string_view text) {
  std::istringstream in{std::string(text)};
  long long n = 0, m = 0;
  if (!(in >> n >> m) || n < 2 || m < 1) {
    Fail(ErrorCode::kParse, "embedding header must be '|V| M' with |V|>=2, M>=1");
  }
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(n));
  Matrix rows(n, m);
  for (long long i = 0; i < n; ++i) {
    std::string token;
    if (!(in >> token)) {
      Fail(ErrorCode::kParse, "missing row " + std::to_string(i));
    }
    for (long long j = 0; j < m; ++j) {
      std::string field;
      if (!(in >> field)) {
        Fail(ErrorCode::kParse, "short row for token " + token);
      }
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(field, &used);
      } catch (const std::exception&) {
        Fail(ErrorCode::kParse, "bad number '" + field + "'");
      }
      if (used != field.size() || !std::isfinite(value)) {
        Fail(ErrorCode::kParse, "bad number '" + field + "' for token " + token);
      }
      rows(i, j) = value;
    }
    tokens.push_back(std::move(token));
  }
  std::string extra;
  if (in >> extra) Fail(ErrorCode::kParse, "trailing data: " + extra);
  return {Vocabulary::Create(std::move(tokens)), EmbeddingTable::Create(std::move(rows))};
}

EmbeddingSpace LoadEmbeddingFile(const std::string& path) {
  std::ifstream file(path);
  if (!file) Fail(ErrorCode::kIo, "cannot open embedding file: " + path);
  std::stringstream buffer;
  buffer << file.rdbuf();
  return ParseEmbeddingText(buffer.str());
}

std::string FormatEmbeddingText(const EmbeddingSpace& space) {
  std::ostringstream out;
  out.precision(17);
  out << space.vocab.size() << ' ' << space.table.dim() << '\n';
  for (std::size_t k = 0; k < space.vocab.size(); ++k) {
    out << space.vocab.token(k);
    for (std::size_t j = 0; j < space.table.dim(); ++j) {
      out << ' ' << space.table.matrix()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace nflbench
