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

#ifndef NFLBENCH_ERROR_HPP_
#define NFLBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace nflbench {

enum class ErrorCode {
  kInvalidArgument,
  kUnknownToken,
  kDegenerateVocabulary,
  kSingularEncoder,
  kParse,
  kIo,
  kConfig,
  kEmptyCorpus,
  kInvalidExponent,
  kDegenerateTrace,
  kMismatchedSupport,
  kNonFiniteDensity,
  kZeroIterations,
  kInsufficientSamples,
  kLengthMismatch,
  kAssumptionViolated,
  kSideConditionViolated,
  kConstantsUnavailable,
  kNonpositiveC1,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the C
// API can translate it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace nflbench

#endif  // NFLBENCH_ERROR_HPP_
