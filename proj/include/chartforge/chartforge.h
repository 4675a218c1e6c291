// Copyright 2026 The Chartforge Authors
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

#ifndef CHARTFORGE_CHARTFORGE_H
#define CHARTFORGE_CHARTFORGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(CHARTFORGE_BUILDING)
#define CF_API __attribute__((visibility("default")))
#else
#define CF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cf_status {
  CF_OK = 0,
  CF_ERR_INVALID_INPUT = 1,
  CF_ERR_CONFIG = 2,
  CF_ERR_IO = 3,
  CF_ERR_TRANSPORT = 4,
  CF_ERR_PROTOCOL = 5,
  CF_ERR_AUTH = 6,
  CF_ERR_UNAVAILABLE = 7,
  CF_ERR_SCRIPTED_GAP = 8,
  CF_ERR_SYNTHESIS_PARSE = 9,
  CF_ERR_RENDER = 10,
  CF_ERR_INTEGRITY = 11,
  CF_ERR_INTERRUPTED = 12,
  CF_ERR_INTERNAL = 13
} cf_status;

typedef enum cf_zero_valid_policy { CF_ZERO_VALID_SENTINEL = 0, CF_ZERO_VALID_DROP = 1 } cf_zero_valid_policy;

/* A loaded manifest plus command-line overrides. */
typedef struct cf_context cf_context;

CF_API const char* cf_version(void);
CF_API const char* cf_status_name(cf_status status);

/* Message of the last failed call on this thread; "" when none. Valid until
   the next call on the same thread. */
CF_API const char* cf_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
CF_API void cf_free_string(char* s);

/* options_json may be NULL or an object with any of: seed, max_parallel,
   worker_cmd (list of strings), dry_run, max_items. */
CF_API cf_status cf_context_open(const char* manifest_path, const char* options_json, cf_context** out);
CF_API void cf_context_close(cf_context* ctx);

/* Runs every stage of the manifest. The summary's "status" is completed,
   interrupted or halted; all three return CF_OK. */
CF_API cf_status cf_context_run(cf_context* ctx, char** summary_json);

/* One pipeline command with JSON arguments. Commands that need endpoints or
   workers use the context's manifest; pure commands accept ctx == NULL. */
CF_API cf_status cf_command(cf_context* ctx, const char* name, const char* args_json, char** result_json);

/* Parses and validates a manifest; returns the run plan. */
CF_API cf_status cf_validate_manifest(const char* manifest_path, char** plan_json);

/* Rollout posterior entropy of `rows` successful rollout embeddings (row
   major, rows x dim) out of `attempted`. rows == 0 applies the zero-valid
   policy: *sentinel = 1 under CF_ZERO_VALID_SENTINEL, *dropped = 1 under
   CF_ZERO_VALID_DROP. */
CF_API cf_status cf_rpe(size_t attempted, const double* data, size_t rows, size_t dim, cf_zero_valid_policy policy,
                        double* value, int* sentinel, int* dropped);

/* Centers the rows, then writes the `rows` Gram eigenvalues (nonincreasing)
   and the spectral entropy in nats. */
CF_API cf_status cf_gram_spectrum(const double* data, size_t rows, size_t dim, double* sigma_out, double* entropy);

CF_API cf_status cf_ngram_flag(const char* text, size_t n, size_t min_repeats, int* flagged);
CF_API cf_status cf_filter_trace(const char* text, size_t min_words, size_t ngram_n, size_t min_repeats,
                                 char** verdict_json);
CF_API int cf_answers_match(const char* a, const char* b);

CF_API cf_status cf_color_entropy(const uint8_t* png, size_t len, double* out);
CF_API cf_status cf_embedding_spread(const double* data, size_t count, size_t dim, size_t sample_size, uint64_t seed,
                                     double* out);

#ifdef __cplusplus
}
#endif

#endif
