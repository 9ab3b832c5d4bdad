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

#ifndef NFLBENCH_RESULTS_IO_HPP_
#define NFLBENCH_RESULTS_IO_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "nflbench/metrics.hpp"

namespace nflbench {

enum class ResultFormat { kCsv, kJson };

// "csv" or "json"; throws InvalidArgument otherwise.
ResultFormat ParseResultFormat(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "mech,param,eps_p,eps_p_se,eps_u,eps_u_se,delta,tv_p_pt,tv_pt_pb,tv_p_pb,C1,C2,nfl_slack";

// Numbers use 9 significant digits; unavailable values are written as "nan".
std::string FormatNumber(double x);

std::string RecordsToCsv(const std::vector<TradeoffRecord>& records);
std::string RecordsToJson(const std::vector<TradeoffRecord>& records);
// Throws Parse on malformed input.
std::vector<TradeoffRecord> RecordsFromJson(std::string_view text);

std::string FormatRecords(const std::vector<TradeoffRecord>& records, ResultFormat format);

// Throws InvalidArgument for an empty record list and Io when the file cannot
// be written.
void ExportResults(const std::vector<TradeoffRecord>& records, ResultFormat format,
                   const std::string& path);

}  // namespace nflbench

#endif  // NFLBENCH_RESULTS_IO_HPP_
