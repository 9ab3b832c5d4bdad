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

#include "nflbench/error.hpp"

namespace nflbench {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kDegenerateVocabulary: return "DegenerateVocabulary";
    case ErrorCode::kSingularEncoder: return "SingularEncoder";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInvalidExponent: return "InvalidExponent";
    case ErrorCode::kDegenerateTrace: return "DegenerateTrace";
    case ErrorCode::kMismatchedSupport: return "MismatchedSupport";
    case ErrorCode::kNonFiniteDensity: return "NonFiniteDensity";
    case ErrorCode::kZeroIterations: return "ZeroIterations";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kAssumptionViolated: return "AssumptionViolated";
    case ErrorCode::kSideConditionViolated: return "SideConditionViolated";
    case ErrorCode::kConstantsUnavailable: return "ConstantsUnavailable";
    case ErrorCode::kNonpositiveC1: return "NonpositiveC1";
  }
  return "Unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nflbench
