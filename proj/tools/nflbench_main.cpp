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

// Command-line front end. Talks to the library only through its C interface.
//
// Exit codes: 0 success, 1 bound violation (verify-nfl), 2 configuration or
// runtime error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nflbench/nflbench.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 2;

int Report(nfl_status status) {
  std::cerr << "nflbench: " << nfl_status_name(status) << ": " << nfl_last_error_message()
            << "\n";
  return kExitError;
}

struct ExperimentHandle {
  nfl_experiment* ptr = nullptr;
  ~ExperimentHandle() { nfl_experiment_free(ptr); }
};

struct ResultsHandle {
  nfl_results* ptr = nullptr;
  ~ResultsHandle() { nfl_results_free(ptr); }
};

// Takes ownership of a library-allocated string.
std::string Take(char* s) {
  std::string out = s ? s : "";
  nfl_string_free(s);
  return out;
}

nfl_status OpenExperiment(const std::string& path, const std::optional<std::uint64_t>& seed,
                          ExperimentHandle& handle) {
  nfl_status status = nfl_experiment_load(path.c_str(), &handle.ptr);
  if (status != NFL_OK || !seed) return status;
  return nfl_experiment_set_seed(handle.ptr, *seed);
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

nfl_format FormatFor(const std::string& name, const std::string& path) {
  if (name == "json") return NFL_FORMAT_JSON;
  if (name == "csv") return NFL_FORMAT_CSV;
  return EndsWith(path, ".json") ? NFL_FORMAT_JSON : NFL_FORMAT_CSV;
}

int WriteResults(const nfl_results* results, nfl_format format, const std::string& path) {
  if (path.empty() || path == "-") {
    char* text = nullptr;
    nfl_status status = nfl_results_format(results, format, &text);
    if (status != NFL_OK) return Report(status);
    std::cout << Take(text);
    return kExitOk;
  }
  nfl_status status = nfl_results_export(results, format, path.c_str());
  if (status != NFL_OK) return Report(status);
  return kExitOk;
}

// Prints the grid point minimising eps_u subject to eps_p <= xi to stderr.
void ReportOptimum(const nfl_results* results, double xi) {
  std::size_t index = 0;
  int found = 0;
  if (nfl_results_optimum(results, xi, &index, &found) != NFL_OK) return;
  if (!found) {
    std::cerr << "optimum: no grid point has eps_p <= " << xi << "\n";
    return;
  }
  char* text = nullptr;
  if (nfl_results_format(results, NFL_FORMAT_CSV, &text) != NFL_OK) return;
  std::istringstream csv(Take(text));
  std::string line;
  for (std::size_t i = 0; i <= index + 1 && std::getline(csv, line); ++i) {
  }
  std::cerr << "optimum (eps_p <= " << xi << "): point " << index << ": " << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy/utility trade-off benchmark for protected LLM prompts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", nfl_version());

  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t point = 0;
  std::string out;
  std::string format = "auto";
  std::string trace_path;
  std::string in;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Experiment configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the configuration's master seed");
  };

  CLI::App* protect = app.add_subcommand("protect", "Run the client/server protocol once");
  add_common(protect);
  protect->add_option("--point", point, "Grid point supplying the mechanism");

  CLI::App* attack = app.add_subcommand("attack", "Protect the prompt and run the attacker");
  add_common(attack);
  attack->add_option("--point", point, "Grid point supplying the mechanism");
  attack->add_option("--trace", trace_path, "Write the regret trace as CSV");

  CLI::App* sweep = app.add_subcommand("sweep", "Evaluate every grid point");
  add_common(sweep);
  sweep->add_option("--out", out, "Output file (default: config 'output', else stdout)");
  sweep->add_option("--format", format, "csv or json (default: from the extension)")
      ->check(CLI::IsMember({"auto", "csv", "json"}));

  CLI::App* verify = app.add_subcommand("verify-nfl", "Certify the lemma and NFL bounds");
  add_common(verify);

  CLI::App* convert = app.add_subcommand("export", "Convert a JSON results file");
  convert->add_option("--in", in, "Results JSON written by sweep")
      ->required()
      ->check(CLI::ExistingFile);
  convert->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"auto", "csv", "json"}));
  convert->add_option("--out", out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  if (*convert) {
    ResultsHandle results;
    nfl_status status = nfl_results_load_json(in.c_str(), &results.ptr);
    if (status != NFL_OK) return Report(status);
    return WriteResults(results.ptr, FormatFor(format, out), out);
  }

  ExperimentHandle experiment;
  nfl_status status = OpenExperiment(config, seed, experiment);
  if (status != NFL_OK) return Report(status);

  if (*protect || *attack) {
    char* report = nullptr;
    char* trace = nullptr;
    status = *protect ? nfl_protect(experiment.ptr, point, &report)
                      : nfl_attack(experiment.ptr, point, &report,
                                   trace_path.empty() ? nullptr : &trace);
    if (status != NFL_OK) return Report(status);
    std::cout << Take(report);
    if (!trace_path.empty()) {
      std::ofstream f(trace_path, std::ios::binary);
      f << Take(trace);
      if (!f) {
        std::cerr << "nflbench: cannot write '" << trace_path << "'\n";
        return kExitError;
      }
    }
    return kExitOk;
  }

  if (*sweep) {
    ResultsHandle results;
    status = nfl_sweep(experiment.ptr, &results.ptr);
    if (status != NFL_OK) return Report(status);
    std::string path = out.empty() ? nfl_experiment_output(experiment.ptr) : out;
    int code = WriteResults(results.ptr, FormatFor(format, path), path);
    if (code == kExitOk) ReportOptimum(results.ptr, nfl_experiment_xi(experiment.ptr));
    return code;
  }

  // verify-nfl
  nfl_verdict verdict = NFL_VERDICT_PASS;
  char* report = nullptr;
  status = nfl_verify(experiment.ptr, &verdict, &report);
  if (status != NFL_OK) return Report(status);
  std::cout << Take(report);
  return static_cast<int>(verdict);
}
