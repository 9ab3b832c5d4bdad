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

#include "nflbench/results_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nflbench/error.hpp"

namespace nflbench {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rounded to 9 significant digits; NaN becomes null.
json Num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(FormatNumber(x));
}

double GetNum(const json& obj, const char* key) {
  if (!obj.contains(key)) Fail(ErrorCode::kParse, std::string("record lacks '") + key + "'");
  const json& v = obj.at(key);
  if (v.is_null()) return kNaN;
  if (!v.is_number()) Fail(ErrorCode::kParse, std::string("'") + key + "' is not a number");
  return v.get<double>();
}

void PutEstimate(json& obj, const std::string& key, double value, double se) {
  obj[key] = Num(value);
  obj[key + "_se"] = Num(se);
}

}  // namespace

ResultFormat ParseResultFormat(std::string_view name) {
  if (name == "csv") return ResultFormat::kCsv;
  if (name == "json") return ResultFormat::kJson;
  Fail(ErrorCode::kInvalidArgument, "unknown result format '" + std::string(name) + "'");
}

std::string FormatNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

std::string RecordsToCsv(const std::vector<TradeoffRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const TradeoffRecord& r : records) {
    const double values[] = {r.param,         r.eps_p.value,   r.eps_p.se,       r.eps_u.value,
                             r.eps_u.se,      r.delta,         r.tv_p_pt.value,  r.tv_pt_pb.value,
                             r.tv_p_pb.value, r.c1,            r.c2,             r.nfl_slack.value};
    out += r.mechanism;
    for (double v : values) {
      out += ',';
      out += FormatNumber(v);
    }
    out += '\n';
  }
  return out;
}

std::string RecordsToJson(const std::vector<TradeoffRecord>& records) {
  json array = json::array();
  for (const TradeoffRecord& r : records) {
    json obj;
    obj["index"] = r.index;
    obj["mechanism"] = r.mechanism;
    obj["param"] = Num(r.param);
    obj["status"] = std::string(RecordStatusName(r.status));
    obj["message"] = r.message;
    PutEstimate(obj, "eps_p", r.eps_p.value, r.eps_p.se);
    PutEstimate(obj, "eps_u", r.eps_u.value, r.eps_u.se);
    obj["delta"] = Num(r.delta);
    PutEstimate(obj, "tv_p_pt", r.tv_p_pt.value, r.tv_p_pt.se);
    PutEstimate(obj, "tv_pt_pb", r.tv_pt_pb.value, r.tv_pt_pb.se);
    PutEstimate(obj, "tv_p_pb", r.tv_p_pb.value, r.tv_p_pb.se);
    const BoundConstants& k = r.constants;
    obj["constants"] = {{"omega", Num(k.omega)}, {"c", Num(k.c)},     {"alpha", Num(k.alpha)},
                        {"c_a", Num(k.c_a)},     {"c_b", Num(k.c_b)}, {"c0", Num(k.c0)},
                        {"c2", Num(k.c2)},       {"p", Num(k.p)},     {"iterations", k.iterations}};
    obj["C1"] = Num(r.c1);
    obj["C1_unscaled"] = Num(r.c1_unscaled);
    obj["C2"] = Num(r.c2);
    PutEstimate(obj, "slack_l1", r.slack_l1.value, r.slack_l1.se);
    PutEstimate(obj, "slack_l2", r.slack_l2.value, r.slack_l2.se);
    PutEstimate(obj, "slack_l3", r.slack_l3.value, r.slack_l3.se);
    PutEstimate(obj, "nfl_slack", r.nfl_slack.value, r.nfl_slack.se);
    obj["decomposition"] = {Num(r.decomposition.parts[0]), Num(r.decomposition.parts[1]),
                            Num(r.decomposition.parts[2])};
    obj["decomposition_sum"] = Num(r.decomposition.sum);
    obj["clamp_events"] = r.clamp_events;
    array.push_back(std::move(obj));
  }
  return array.dump(2) + "\n";
}

std::vector<TradeoffRecord> RecordsFromJson(std::string_view text) {
  json array;
  try {
    array = json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("invalid results JSON: ") + e.what());
  }
  if (!array.is_array()) Fail(ErrorCode::kParse, "results JSON must be an array");
  std::vector<TradeoffRecord> records;
  try {
    for (const json& obj : array) {
      if (!obj.is_object()) Fail(ErrorCode::kParse, "result entries must be objects");
      TradeoffRecord r;
      r.index = obj.at("index").get<std::size_t>();
      r.mechanism = obj.at("mechanism").get<std::string>();
      r.param = GetNum(obj, "param");
      r.status = ParseRecordStatus(obj.at("status").get<std::string>());
      r.message = obj.at("message").get<std::string>();
      r.eps_p = {GetNum(obj, "eps_p"), GetNum(obj, "eps_p_se")};
      r.eps_u = {GetNum(obj, "eps_u"), GetNum(obj, "eps_u_se")};
      r.delta = GetNum(obj, "delta");
      r.tv_p_pt = {GetNum(obj, "tv_p_pt"), GetNum(obj, "tv_p_pt_se")};
      r.tv_pt_pb = {GetNum(obj, "tv_pt_pb"), GetNum(obj, "tv_pt_pb_se")};
      r.tv_p_pb = {GetNum(obj, "tv_p_pb"), GetNum(obj, "tv_p_pb_se")};
      const json& k = obj.at("constants");
      r.constants.omega = GetNum(k, "omega");
      r.constants.c = GetNum(k, "c");
      r.constants.alpha = GetNum(k, "alpha");
      r.constants.c_a = GetNum(k, "c_a");
      r.constants.c_b = GetNum(k, "c_b");
      r.constants.c0 = GetNum(k, "c0");
      r.constants.c2 = GetNum(k, "c2");
      r.constants.p = GetNum(k, "p");
      r.constants.iterations = k.at("iterations").get<std::size_t>();
      r.c1 = GetNum(obj, "C1");
      r.c1_unscaled = GetNum(obj, "C1_unscaled");
      r.c2 = GetNum(obj, "C2");
      r.slack_l1 = {GetNum(obj, "slack_l1"), GetNum(obj, "slack_l1_se")};
      r.slack_l2 = {GetNum(obj, "slack_l2"), GetNum(obj, "slack_l2_se")};
      r.slack_l3 = {GetNum(obj, "slack_l3"), GetNum(obj, "slack_l3_se")};
      r.nfl_slack = {GetNum(obj, "nfl_slack"), GetNum(obj, "nfl_slack_se")};
      const json& parts = obj.at("decomposition");
      if (!parts.is_array() || parts.size() != 3) {
        Fail(ErrorCode::kParse, "'decomposition' must hold three numbers");
      }
      for (std::size_t i = 0; i < 3; ++i) {
        r.decomposition.parts[i] = parts[i].is_null() ? kNaN : parts[i].get<double>();
      }
      r.decomposition.sum = GetNum(obj, "decomposition_sum");
      r.clamp_events = obj.at("clamp_events").get<std::size_t>();
      records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed result record: ") + e.what());
  }
  return records;
}

std::string FormatRecords(const std::vector<TradeoffRecord>& records, ResultFormat format) {
  return format == ResultFormat::kCsv ? RecordsToCsv(records) : RecordsToJson(records);
}

void ExportResults(const std::vector<TradeoffRecord>& records, ResultFormat format,
                   const std::string& path) {
  if (records.empty()) Fail(ErrorCode::kInvalidArgument, "no records to export");
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << FormatRecords(records, format);
  out.flush();
  if (!out) Fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace nflbench
