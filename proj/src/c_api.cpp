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

#include "nflbench/nflbench.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nflbench/attack.hpp"
#include "nflbench/error.hpp"
#include "nflbench/experiment.hpp"
#include "nflbench/metrics.hpp"
#include "nflbench/mock_llm.hpp"
#include "nflbench/results_io.hpp"

struct nfl_experiment {
  explicit nfl_experiment(nflbench::Experiment e) : experiment(std::move(e)) {}
  nflbench::Experiment experiment;
};

struct nfl_results {
  std::vector<nflbench::TradeoffRecord> records;
};

namespace {

thread_local std::string last_error;

nfl_status ToStatus(nflbench::ErrorCode code) {
  // The C enumerators follow ErrorCode's order, shifted past NFL_OK.
  return static_cast<nfl_status>(static_cast<int>(code) + 1);
}

template <typename F>
nfl_status Guard(F&& body) {
  try {
    body();
    last_error.clear();
    return NFL_OK;
  } catch (const nflbench::Error& e) {
    last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NFL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NFL_ERR_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) {
    nflbench::Fail(nflbench::ErrorCode::kInvalidArgument, std::string(what) + " is null");
  }
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nflbench::ResultFormat ToFormat(nfl_format format) {
  switch (format) {
    case NFL_FORMAT_CSV:
      return nflbench::ResultFormat::kCsv;
    case NFL_FORMAT_JSON:
      return nflbench::ResultFormat::kJson;
  }
  nflbench::Fail(nflbench::ErrorCode::kInvalidArgument, "unknown result format");
}

nfl_verdict ToVerdict(nflbench::Verdict v) { return static_cast<nfl_verdict>(static_cast<int>(v)); }

}  // namespace

extern "C" {

const char* nfl_version(void) { return "0.1.0"; }

const char* nfl_status_name(nfl_status status) {
  if (status == NFL_OK) return "Ok";
  if (status == NFL_ERR_INTERNAL) return "Internal";
  int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(nflbench::ErrorCode::kNonpositiveC1)) return "Unknown";
  return nflbench::ErrorCodeName(static_cast<nflbench::ErrorCode>(code)).data();
}

const char* nfl_last_error_message(void) { return last_error.c_str(); }

void nfl_string_free(char* s) { std::free(s); }

nfl_status nfl_experiment_load(const char* path, nfl_experiment** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = nullptr;
    auto config = nflbench::LoadExperimentConfig(path);
    *out = new nfl_experiment(nflbench::Experiment::FromConfig(std::move(config)));
  });
}

nfl_status nfl_experiment_parse(const char* json, const char* base_dir, nfl_experiment** out) {
  return Guard([&] {
    Require(json, "json");
    Require(out, "out");
    *out = nullptr;
    auto config = nflbench::ParseExperimentConfig(json, base_dir ? base_dir : "");
    *out = new nfl_experiment(nflbench::Experiment::FromConfig(std::move(config)));
  });
}

nfl_status nfl_experiment_set_seed(nfl_experiment* experiment, uint64_t seed) {
  return Guard([&] {
    Require(experiment, "experiment");
    experiment->experiment.set_seed(seed);
  });
}

size_t nfl_experiment_grid_size(const nfl_experiment* experiment) {
  return experiment ? experiment->experiment.config().grid.size() : 0;
}

const char* nfl_experiment_output(const nfl_experiment* experiment) {
  return experiment ? experiment->experiment.config().output.c_str() : "";
}

double nfl_experiment_xi(const nfl_experiment* experiment) {
  return experiment ? experiment->experiment.config().xi : 1.0;
}

void nfl_experiment_free(nfl_experiment* experiment) { delete experiment; }

nfl_status nfl_protect(const nfl_experiment* experiment, size_t point, char** report) {
  return Guard([&] {
    Require(experiment, "experiment");
    Require(report, "report");
    const nflbench::Experiment& ex = experiment->experiment;
    const auto& vocab = ex.space().vocab;
    nflbench::ProtocolRun run = nflbench::RunProtocol(ex.prompt(), ex.PointConfig(point),
                                                      ex.llm(), ex.space().table, vocab);
    nlohmann::json j;
    j["point"] = point;
    j["mechanism"] = std::string(nflbench::MechanismName(ex.PointConfig(point).mechanism));
    j["param"] = ex.PointConfig(point).PrimaryParameter();
    j["prompt"] = nflbench::Detokenize(ex.prompt(), vocab);
    j["protected"] = nflbench::Detokenize(run.protected_prompt, vocab);
    j["response"] = nflbench::Detokenize(run.response, vocab);
    j["unprotected_positions"] = run.protection.unprotected_count();
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : run.steps) steps.push_back({{"step", s.step}, {"event", s.description}});
    j["steps"] = steps;
    *report = CopyString(j.dump(2) + "\n");
  });
}

nfl_status nfl_attack(const nfl_experiment* experiment, size_t point, char** report,
                      char** trace_csv) {
  return Guard([&] {
    Require(experiment, "experiment");
    Require(report, "report");
    const nflbench::Experiment& ex = experiment->experiment;
    const auto& table = ex.space().table;
    const auto& vocab = ex.space().vocab;
    nflbench::ProtectedPrompt prot = nflbench::ProtectPrompt(ex.prompt(), ex.PointConfig(point), table);
    nflbench::AttackTrace trace = ex.attacker().Run(nflbench::ServerView(prot, table));
    nflbench::RecoveryExtentResult r =
        nflbench::RecoveryExtent(trace, ex.prompt(), table, ex.encoder(), ex.omega());
    nlohmann::json j;
    j["point"] = point;
    j["attacker"] = std::string(nflbench::AttackerKindName(ex.attacker().spec().kind));
    j["prompt"] = nflbench::Detokenize(ex.prompt(), vocab);
    j["protected"] = nflbench::Detokenize(prot.prompt, vocab);
    j["recovered"] = nflbench::Detokenize(trace.FinalPrompt(), vocab);
    j["iterations"] = trace.iterations;
    j["recovery_extent"] = r.value;
    j["clamp_events"] = r.clamp_events;
    if (trace.iterations >= 16) {
      try {
        nflbench::RegretFit fit = nflbench::EstimateRegretExponent(trace);
        j["regret_fit"] = {{"p", fit.p}, {"c0", fit.c0}, {"c2", fit.c2}};
      } catch (const nflbench::Error& e) {
        if (e.code() != nflbench::ErrorCode::kDegenerateTrace) throw;
        j["regret_fit"] = nullptr;
      }
    }
    *report = CopyString(j.dump(2) + "\n");
    if (trace_csv != nullptr) {
      std::string csv = "iter,mean_regret,cumulative\n";
      std::vector<double> cumulative = trace.CumulativeRegret();
      for (std::size_t i = 0; i < trace.iterations; ++i) {
        csv += std::to_string(i + 1) + "," + nflbench::FormatNumber(trace.regret[i]) + "," +
               nflbench::FormatNumber(cumulative[i]) + "\n";
      }
      *trace_csv = CopyString(csv);
    }
  });
}

nfl_status nfl_sweep(const nfl_experiment* experiment, nfl_results** out) {
  return Guard([&] {
    Require(experiment, "experiment");
    Require(out, "out");
    *out = nullptr;
    auto results = std::make_unique<nfl_results>();
    results->records = nflbench::Sweep(experiment->experiment);
    *out = results.release();
  });
}

nfl_status nfl_results_load_json(const char* path, nfl_results** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = nullptr;
    std::FILE* f = std::fopen(path, "rb");
    if (f == nullptr) {
      nflbench::Fail(nflbench::ErrorCode::kIo, std::string("cannot open '") + path + "'");
    }
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, got);
    std::fclose(f);
    auto results = std::make_unique<nfl_results>();
    results->records = nflbench::RecordsFromJson(text);
    *out = results.release();
  });
}

size_t nfl_results_size(const nfl_results* results) {
  return results ? results->records.size() : 0;
}

nfl_status nfl_results_format(const nfl_results* results, nfl_format format, char** out) {
  return Guard([&] {
    Require(results, "results");
    Require(out, "out");
    *out = CopyString(nflbench::FormatRecords(results->records, ToFormat(format)));
  });
}

nfl_status nfl_results_export(const nfl_results* results, nfl_format format, const char* path) {
  return Guard([&] {
    Require(results, "results");
    Require(path, "path");
    nflbench::ExportResults(results->records, ToFormat(format), path);
  });
}

nfl_status nfl_results_optimum(const nfl_results* results, double xi, size_t* index,
                               int* found) {
  return Guard([&] {
    Require(results, "results");
    Require(index, "index");
    Require(found, "found");
    auto best = nflbench::SelectOptimum(results->records, xi);
    *found = best.has_value() ? 1 : 0;
    *index = best.value_or(0);
  });
}

void nfl_results_free(nfl_results* results) { delete results; }

nfl_status nfl_verify(const nfl_experiment* experiment, nfl_verdict* verdict, char** report) {
  return Guard([&] {
    Require(experiment, "experiment");
    Require(verdict, "verdict");
    nflbench::VerifyReport r = nflbench::VerifyNfl(experiment->experiment);
    *verdict = ToVerdict(r.verdict);
    if (report != nullptr) *report = CopyString(r.text);
  });
}

nfl_status nfl_verify_results(const nfl_results* results, nfl_verdict* verdict, char** report) {
  return Guard([&] {
    Require(results, "results");
    Require(verdict, "verdict");
    nflbench::VerifyReport r = nflbench::VerifyRecords(results->records);
    *verdict = ToVerdict(r.verdict);
    if (report != nullptr) *report = CopyString(r.text);
  });
}

}  // extern "C"
