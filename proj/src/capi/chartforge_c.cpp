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

#include "chartforge/chartforge.h"

#include <cstring>
#include <memory>
#include <string>

#include "common/error.hpp"
#include "cot/cot_filter.hpp"
#include "diag/diagnostics.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/pipeline.hpp"
#include "qa/answer.hpp"
#include "rpe/rpe.hpp"

using namespace chartforge;

struct cf_context {
  pipeline::Manifest manifest;
  pipeline::RunOptions options;
  std::unique_ptr<pipeline::Engine> engine;
};

namespace {

thread_local std::string last_error;

cf_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return CF_ERR_INVALID_INPUT;
    case ErrorCode::kConfig: return CF_ERR_CONFIG;
    case ErrorCode::kIo: return CF_ERR_IO;
    case ErrorCode::kTransport: return CF_ERR_TRANSPORT;
    case ErrorCode::kProtocol: return CF_ERR_PROTOCOL;
    case ErrorCode::kAuth: return CF_ERR_AUTH;
    case ErrorCode::kUnavailable: return CF_ERR_UNAVAILABLE;
    case ErrorCode::kScriptedGap: return CF_ERR_SCRIPTED_GAP;
    case ErrorCode::kSynthesisParse: return CF_ERR_SYNTHESIS_PARSE;
    case ErrorCode::kRenderFailure: return CF_ERR_RENDER;
    case ErrorCode::kIntegrity: return CF_ERR_INTEGRITY;
    case ErrorCode::kInterrupted: return CF_ERR_INTERRUPTED;
    case ErrorCode::kInternal: return CF_ERR_INTERNAL;
  }
  return CF_ERR_INTERNAL;
}

template <typename F>
cf_status guard(F&& f) {
  last_error.clear();
  try {
    f();
    return CF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const Json::exception& e) {
    last_error = std::string("malformed JSON: ") + e.what();
    return CF_ERR_INVALID_INPUT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CF_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** out, const Json& j) {
  if (out) *out = dup_string(j.dump());
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::kInvalidInput, what);
}

Json parse_args(const char* text) {
  if (!text || !*text) return Json::object();
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kConfig, "arguments must be a JSON object");
  return j;
}

pipeline::RunOptions parse_options(const Json& j) {
  pipeline::RunOptions o;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") o.seed = value.get<std::int64_t>();
    else if (key == "max_parallel") o.max_parallel = value.get<int>();
    else if (key == "worker_cmd") o.worker_cmd = value.get<std::vector<std::string>>();
    else if (key == "dry_run") o.dry_run = value.get<bool>();
    else if (key == "max_items") o.max_items = value.get<long long>();
    else fail(ErrorCode::kConfig, "unknown option '" + key + "'");
  }
  return o;
}

rpe::Matrix matrix(const double* data, std::size_t rows, std::size_t dim) {
  require(dim > 0, "dim must be >= 1");
  require(rows == 0 || data != nullptr, "data is null");
  return rpe::Matrix(rows, dim, std::vector<double>(data, data + rows * dim));
}

}  // namespace

extern "C" {

const char* cf_version(void) { return "0.1.0"; }

const char* cf_status_name(cf_status status) {
  switch (status) {
    case CF_OK: return "ok";
    case CF_ERR_INVALID_INPUT: return "invalid_input";
    case CF_ERR_CONFIG: return "config";
    case CF_ERR_IO: return "io";
    case CF_ERR_TRANSPORT: return "transport";
    case CF_ERR_PROTOCOL: return "protocol";
    case CF_ERR_AUTH: return "auth";
    case CF_ERR_UNAVAILABLE: return "unavailable";
    case CF_ERR_SCRIPTED_GAP: return "scripted_gap";
    case CF_ERR_SYNTHESIS_PARSE: return "synthesis_parse";
    case CF_ERR_RENDER: return "render";
    case CF_ERR_INTEGRITY: return "integrity";
    case CF_ERR_INTERRUPTED: return "interrupted";
    case CF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cf_last_error(void) { return last_error.c_str(); }

void cf_free_string(char* s) { std::free(s); }

cf_status cf_context_open(const char* manifest_path, const char* options_json, cf_context** out) {
  return guard([&] {
    require(manifest_path && out, "manifest path and out must be non-null");
    *out = nullptr;
    auto ctx = std::make_unique<cf_context>();
    ctx->options = parse_options(parse_args(options_json));
    ctx->manifest = pipeline::load_manifest(manifest_path);
    *out = ctx.release();
  });
}

void cf_context_close(cf_context* ctx) { delete ctx; }

cf_status cf_context_run(cf_context* ctx, char** summary_json) {
  return guard([&] {
    require(ctx != nullptr, "context is null");
    ctx->engine.reset();  // the run opens its own ledger
    pipeline::RunReport report = pipeline::run_pipeline(ctx->manifest, ctx->options);
    Json summary = report.summary;
    summary["status"] = std::string(pipeline::run_status_name(report.status));
    if (!report.message.empty()) summary["message"] = report.message;
    set_out(summary_json, summary);
  });
}

cf_status cf_command(cf_context* ctx, const char* name, const char* args_json, char** result_json) {
  return guard([&] {
    require(name != nullptr, "command name is null");
    const Json args = parse_args(args_json);
    pipeline::Engine* engine = nullptr;
    if (pipeline::command_needs_engine(name)) {
      if (!ctx) fail(ErrorCode::kConfig, std::string(name) + " needs a manifest");
      if (ctx->options.dry_run) {
        set_out(result_json, Json{{"dry_run", true}, {"command", name}, {"args", args}});
        return;
      }
      if (!ctx->engine) ctx->engine = std::make_unique<pipeline::Engine>(ctx->manifest, ctx->options);
      engine = ctx->engine.get();
    }
    set_out(result_json, pipeline::execute_command(engine, name, args));
  });
}

cf_status cf_validate_manifest(const char* manifest_path, char** plan_json) {
  return guard([&] {
    require(manifest_path != nullptr, "manifest path is null");
    set_out(plan_json, pipeline::plan_pipeline(pipeline::load_manifest(manifest_path), {}));
  });
}

cf_status cf_rpe(size_t attempted, const double* data, size_t rows, size_t dim, cf_zero_valid_policy policy,
                 double* value, int* sentinel, int* dropped) {
  return guard([&] {
    require(value && sentinel && dropped, "output pointers must be non-null");
    rpe::RpeOptions opts;
    opts.zero_valid = policy == CF_ZERO_VALID_DROP ? rpe::ZeroValidPolicy::kDropRecord
                                                   : rpe::ZeroValidPolicy::kSentinelMax;
    rpe::Matrix m = matrix(data, rows, dim);
    auto score = rpe::rollout_posterior_entropy(attempted, rows ? &m : nullptr, opts);
    *dropped = score ? 0 : 1;
    *sentinel = score && score->sentinel ? 1 : 0;
    *value = score ? score->value : 0.0;
  });
}

cf_status cf_gram_spectrum(const double* data, size_t rows, size_t dim, double* sigma_out, double* entropy) {
  return guard([&] {
    require(entropy != nullptr, "entropy is null");
    require(rows == 0 || sigma_out != nullptr, "sigma_out is null");
    auto summary = rpe::gram_spectrum(rpe::center_rows(matrix(data, rows, dim)));
    for (std::size_t i = 0; i < summary.singular_values.size(); ++i) sigma_out[i] = summary.singular_values[i];
    *entropy = summary.entropy;
  });
}

cf_status cf_ngram_flag(const char* text, size_t n, size_t min_repeats, int* flagged) {
  return guard([&] {
    require(text && flagged, "text and flagged must be non-null");
    require(n >= 1, "n must be >= 1");
    *flagged = cot::ngram_repetition_flag(text, n, min_repeats) ? 1 : 0;
  });
}

cf_status cf_filter_trace(const char* text, size_t min_words, size_t ngram_n, size_t min_repeats,
                          char** verdict_json) {
  return guard([&] {
    require(text != nullptr, "text is null");
    cot::FilterOptions opts{min_words, ngram_n, min_repeats};
    auto verdict = cot::filter_trace(text, opts);
    Json failures = Json::array();
    for (const auto& f : verdict.failures) {
      failures.push_back({{"rule", std::string(cot::rule_name(f.rule))}, {"detail", f.detail}});
    }
    set_out(verdict_json, Json{{"passed", verdict.passed()}, {"failures", failures}});
  });
}

int cf_answers_match(const char* a, const char* b) {
  if (!a || !b) return 0;
  return qa::match(a, b) ? 1 : 0;
}

cf_status cf_color_entropy(const uint8_t* png, size_t len, double* out) {
  return guard([&] {
    require(png && out, "png and out must be non-null");
    *out = diag::color_entropy(std::span<const std::uint8_t>(png, len));
  });
}

cf_status cf_embedding_spread(const double* data, size_t count, size_t dim, size_t sample_size, uint64_t seed,
                              double* out) {
  return guard([&] {
    require(out != nullptr, "out is null");
    require(dim > 0 && (count == 0 || data), "bad embedding buffer");
    std::vector<std::vector<double>> vectors;
    for (std::size_t i = 0; i < count; ++i) vectors.emplace_back(data + i * dim, data + (i + 1) * dim);
    *out = diag::embedding_spread(vectors, sample_size, seed);
  });
}

}  // extern "C"
