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

/* C interface of the nflbench library. Every function returns an nfl_status;
 * on failure nfl_last_error_message() describes the problem for the calling
 * thread. Strings returned through char** are owned by the caller and are
 * released with nfl_string_free. */

#ifndef NFLBENCH_NFLBENCH_H_
#define NFLBENCH_NFLBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NFL_API __declspec(dllexport)
#elif defined(NFLBENCH_BUILDING_LIBRARY)
#define NFL_API __attribute__((visibility("default")))
#else
#define NFL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nfl_status {
  NFL_OK = 0,
  NFL_ERR_INVALID_ARGUMENT,
  NFL_ERR_UNKNOWN_TOKEN,
  NFL_ERR_DEGENERATE_VOCABULARY,
  NFL_ERR_SINGULAR_ENCODER,
  NFL_ERR_PARSE,
  NFL_ERR_IO,
  NFL_ERR_CONFIG,
  NFL_ERR_EMPTY_CORPUS,
  NFL_ERR_INVALID_EXPONENT,
  NFL_ERR_DEGENERATE_TRACE,
  NFL_ERR_MISMATCHED_SUPPORT,
  NFL_ERR_NONFINITE_DENSITY,
  NFL_ERR_ZERO_ITERATIONS,
  NFL_ERR_INSUFFICIENT_SAMPLES,
  NFL_ERR_LENGTH_MISMATCH,
  NFL_ERR_ASSUMPTION_VIOLATED,
  NFL_ERR_SIDE_CONDITION_VIOLATED,
  NFL_ERR_CONSTANTS_UNAVAILABLE,
  NFL_ERR_NONPOSITIVE_C1,
  NFL_ERR_INTERNAL
} nfl_status;

typedef enum nfl_format { NFL_FORMAT_CSV = 0, NFL_FORMAT_JSON = 1 } nfl_format;

typedef enum nfl_verdict {
  NFL_VERDICT_PASS = 0,
  NFL_VERDICT_VIOLATION = 1,
  NFL_VERDICT_CONFIG_ERROR = 2
} nfl_verdict;

typedef struct nfl_experiment nfl_experiment;
typedef struct nfl_results nfl_results;

NFL_API const char* nfl_version(void);
NFL_API const char* nfl_status_name(nfl_status status);
NFL_API const char* nfl_last_error_message(void);
NFL_API void nfl_string_free(char* s);

/* Experiments are built from a JSON configuration (schema 1). Relative
 * embedding paths resolve against the config file's directory, or against
 * base_dir for nfl_experiment_parse (which may be NULL). */
NFL_API nfl_status nfl_experiment_load(const char* path, nfl_experiment** out);
NFL_API nfl_status nfl_experiment_parse(const char* json, const char* base_dir,
                                        nfl_experiment** out);
NFL_API nfl_status nfl_experiment_set_seed(nfl_experiment* experiment, uint64_t seed);
NFL_API size_t nfl_experiment_grid_size(const nfl_experiment* experiment);
/* The config's "output" path, or "" when absent. Owned by the experiment. */
NFL_API const char* nfl_experiment_output(const nfl_experiment* experiment);
/* The privacy budget xi used to select the sweep optimum. */
NFL_API double nfl_experiment_xi(const nfl_experiment* experiment);
NFL_API void nfl_experiment_free(nfl_experiment* experiment);

/* Runs the client/server protocol for the config prompt under grid point
 * `point` and returns a JSON report. */
NFL_API nfl_status nfl_protect(const nfl_experiment* experiment, size_t point, char** report);
/* Protects the config prompt under grid point `point`, runs the configured
 * attacker on the server's view and returns a JSON report plus the regret
 * trace as CSV (iter,mean_regret,cumulative). trace_csv may be NULL. */
NFL_API nfl_status nfl_attack(const nfl_experiment* experiment, size_t point, char** report,
                              char** trace_csv);

NFL_API nfl_status nfl_sweep(const nfl_experiment* experiment, nfl_results** out);
NFL_API nfl_status nfl_results_load_json(const char* path, nfl_results** out);
NFL_API size_t nfl_results_size(const nfl_results* results);
NFL_API nfl_status nfl_results_format(const nfl_results* results, nfl_format format, char** out);
NFL_API nfl_status nfl_results_export(const nfl_results* results, nfl_format format,
                                      const char* path);
/* Grid point minimising eps_u among those with eps_p <= xi; *found is 0 when
 * no point qualifies. */
NFL_API nfl_status nfl_results_optimum(const nfl_results* results, double xi, size_t* index,
                                       int* found);
NFL_API void nfl_results_free(nfl_results* results);

/* Sweeps and certifies the lemma and NFL slacks of every grid point. */
NFL_API nfl_status nfl_verify(const nfl_experiment* experiment, nfl_verdict* verdict,
                              char** report);
/* Certifies previously computed results without re-running the sweep. */
NFL_API nfl_status nfl_verify_results(const nfl_results* results, nfl_verdict* verdict,
                                      char** report);

#ifdef __cplusplus
}
#endif

#endif /* NFLBENCH_NFLBENCH_H_ */
