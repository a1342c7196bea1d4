// Copyright 2026 The cissl-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the cissl library. Every function returns a cissl_status;
 * on failure cissl_last_error() describes the problem for the calling
 * thread. Strings handed out by the library are released with
 * cissl_string_free. */

#ifndef CISSL_CISSL_H_
#define CISSL_CISSL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(CISSL_BUILDING_LIBRARY)
#define CISSL_API __attribute__((visibility("default")))
#else
#define CISSL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cissl_status {
  CISSL_OK = 0,
  CISSL_E_INVALID_ARGUMENT = 1,
  CISSL_E_CONFIG = 2,
  CISSL_E_IO = 3,
  CISSL_E_CAPACITY = 4,
  CISSL_E_RUN_FAILED = 5, /* campaign finished, some runs failed */
  CISSL_E_INTERNAL = 6
} cissl_status;

typedef struct cissl_campaign cissl_campaign;
typedef struct cissl_model cissl_model;

typedef struct cissl_run_info {
  const char* dataset;
  const char* algorithm;
  int64_t seed;
  int ok;
  const char* error; /* empty when ok */
  double wall_seconds;
  double err_all; /* student errors; NaN on failure */
  double err_major;
  double err_minor;
} cissl_run_info;

typedef struct cissl_run_summary {
  int runs;
  int failures;
} cissl_run_summary;

typedef void (*cissl_run_callback)(const cissl_run_info* info, void* user);

CISSL_API const char* cissl_version(void);
CISSL_API const char* cissl_last_error(void);
CISSL_API const char* cissl_status_name(cissl_status status);
CISSL_API void cissl_string_free(char* s);

/* Campaigns */
CISSL_API cissl_status cissl_campaign_from_text(const char* json_text, cissl_campaign** out);
CISSL_API cissl_status cissl_campaign_from_file(const char* path, cissl_campaign** out);
CISSL_API cissl_status cissl_campaign_from_preset(const char* name, cissl_campaign** out);
CISSL_API void cissl_campaign_free(cissl_campaign* campaign);

/* Canonical JSON with every default spelled out. */
CISSL_API cissl_status cissl_campaign_dump(const cissl_campaign* campaign, char** out);
/* 16 hex digits plus terminator. */
CISSL_API cissl_status cissl_campaign_hash(const cissl_campaign* campaign, char out[17]);
CISSL_API cissl_status cissl_campaign_run_count(const cissl_campaign* campaign, int* out);

CISSL_API cissl_status cissl_campaign_set_output_dir(cissl_campaign* campaign, const char* dir);
CISSL_API cissl_status cissl_campaign_set_workers(cissl_campaign* campaign, int workers);
/* "dataset:algorithm:seed", empty fields match everything. */
CISSL_API cissl_status cissl_campaign_set_only(cissl_campaign* campaign, const char* filter);

/* Runs the campaign. `callback` may be NULL; it is called once per finished
 * run, never concurrently. Returns CISSL_E_RUN_FAILED when any run failed. */
CISSL_API cissl_status cissl_campaign_run(cissl_campaign* campaign, cissl_run_callback callback,
                                          void* user, cissl_run_summary* summary);

/* Plain-text table of the last run's aggregates. */
CISSL_API cissl_status cissl_campaign_report_text(const cissl_campaign* campaign, char** out);
/* Newline-separated list of files written by the last run. */
CISSL_API cissl_status cissl_campaign_files(const cissl_campaign* campaign, char** out);

/* Presets */
CISSL_API int cissl_preset_count(void);
CISSL_API const char* cissl_preset_name(int index); /* NULL when out of range */
CISSL_API cissl_status cissl_preset_text(const char* name, char** out);

/* Saved models */
CISSL_API cissl_status cissl_model_load(const char* path, cissl_model** out);
CISSL_API void cissl_model_free(cissl_model* model);
CISSL_API int cissl_model_num_classes(const cissl_model* model);
/* xy holds n (x, y) pairs; probs receives n * num_classes values. */
CISSL_API cissl_status cissl_model_predict_proba(const cissl_model* model, const double* xy,
                                                 size_t n, double* probs);

/* Utilities */
CISSL_API cissl_status cissl_imbalance_counts(int n_max, double rho, int num_classes, int* out);
CISSL_API cissl_status cissl_coefficient_gap(int lag, double delta, double gamma, double* out);

#ifdef __cplusplus
}
#endif

#endif /* CISSL_CISSL_H_ */
