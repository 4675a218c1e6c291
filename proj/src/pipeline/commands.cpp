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

#include "pipeline/commands.hpp"

#include <filesystem>

#include "common/error.hpp"
#include "diag/diagnostics.hpp"
#include "pipeline/pipeline.hpp"

namespace fs = std::filesystem;

namespace chartforge::pipeline {
namespace {

std::string need_string(const Json& args, const std::string& key, const std::string& cmd) {
  if (!args.contains(key) || !args[key].is_string() || args[key].get<std::string>().empty()) {
    fail(ErrorCode::kConfig, cmd + ": missing argument '" + key + "'");
  }
  return args[key].get<std::string>();
}

double opt_number(const Json& args, const std::string& key, double fallback) {
  if (!args.contains(key) || args[key].is_null()) return fallback;
  if (!args[key].is_number()) fail(ErrorCode::kConfig, "argument '" + key + "' must be a number");
  return args[key].get<double>();
}

long long opt_integer(const Json& args, const std::string& key, long long fallback) {
  if (!args.contains(key) || args[key].is_null()) return fallback;
  if (!args[key].is_number_integer()) fail(ErrorCode::kConfig, "argument '" + key + "' must be an integer");
  return args[key].get<long long>();
}

double unit(const Json& args, const std::string& key, double fallback) {
  const double v = opt_number(args, key, fallback);
  if (v < 0 || v > 1) fail(ErrorCode::kConfig, "argument '" + key + "' must lie in [0, 1]");
  return v;
}

std::vector<qa::QaCandidate> read_candidates(const fs::path& file) {
  std::vector<qa::QaCandidate> out;
  for (const Json& row : read_jsonl(file)) out.push_back(qa::qa_candidate_from_json(row));
  return out;
}

Json stage_result(const StageResult& r, const fs::path& out) {
  write_jsonl(out, r.records);
  return {{"records", r.records.size()},
          {"interrupted", r.interrupted},
          {"counts",
           {{"retained", r.counts.retained},
            {"dropped", r.counts.dropped},
            {"emitted", r.counts.emitted},
            {"failed", r.counts.failed},
            {"reused", r.counts.reused}}}};
}

Engine& require(Engine* engine, const std::string& name) {
  if (!engine) fail(ErrorCode::kConfig, name + " needs a manifest (endpoints, workers, output directory)");
  if (name != "coder-sample" && name != "cot-distill" && !engine->context().broker) {
    fail(ErrorCode::kConfig, name + " needs worker_cmd (set it in the manifest or pass --worker-cmd)");
  }
  return *engine;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"score",  "filter-hard", "cold-start",  "export-coder-set",
                                                 "coder-sample", "boost", "synth", "qa-synth",
                                                 "cot-distill",  "cot-filter", "bucket", "diagnose", "validate"};
  return names;
}

bool command_needs_engine(const std::string& name) {
  return name == "score" || name == "cold-start" || name == "coder-sample" || name == "boost" || name == "synth" ||
         name == "qa-synth" || name == "cot-distill";
}

Json execute_command(Engine* engine, const std::string& name, const Json& args) {
  if (name == "score") {
    Engine& e = require(engine, name);
    auto corpus = forge::load_corpus(need_string(args, "input", name));
    return stage_result(forge::score_corpus(e.context(), e.scoring_config(), corpus), need_string(args, "out", name));
  }
  if (name == "filter-hard") {
    const double t = unit(args, "rpe_threshold", 0.4);
    auto split = forge::filter_hard(forge::chart_records_from_json(read_jsonl(need_string(args, "in", name))), t);
    write_jsonl(need_string(args, "out", name), forge::to_json(split.hard));
    if (args.contains("index_out")) write_jsonl(need_string(args, "index_out", name), split.index.to_jsonl());
    return {{"hard", split.hard.size()}, {"rest", split.rest.size()}};
  }
  if (name == "cold-start") {
    Engine& e = require(engine, name);
    forge::ColdStartConfig cfg;
    cfg.codegen_endpoint = e.manifest().roles.codegen;
    cfg.render_timeout_s = e.manifest().scoring.render_timeout_s;
    auto hard = forge::chart_records_from_json(read_jsonl(need_string(args, "in", name)));
    return stage_result(forge::cold_start(e.context(), cfg, hard), need_string(args, "out", name));
  }
  if (name == "export-coder-set") {
    prompts::PromptCatalog catalog;
    auto records = forge::chart_records_from_json(read_jsonl(need_string(args, "in", name)));
    const std::size_t n =
        forge::export_coder_training_set(records, need_string(args, "out", name), catalog.get(prompts::kCoderSystem));
    return {{"records", n}};
  }
  if (name == "coder-sample") {
    Engine& e = require(engine, name);
    const long long count = opt_integer(args, "count", 100);
    const long long iteration = opt_integer(args, "iteration", 1);
    if (count < 0) fail(ErrorCode::kConfig, "coder-sample: count must be >= 0");
    const std::string endpoint = need_string(args, "endpoint", name);
    const std::string stage = "coder-sample.iter" + std::to_string(iteration);
    return stage_result(
        forge::sample_candidates(e.context(), endpoint, static_cast<int>(count), static_cast<int>(iteration), stage),
        need_string(args, "out", name));
  }
  if (name == "boost") {
    Engine& e = require(engine, name);
    forge::BoostConfig cfg{unit(args, "rpe_threshold", 0.4), unit(args, "sim_limit", 0.65)};
    const long long iteration = opt_integer(args, "iteration", 1);
    auto candidates = forge::chart_records_from_json(read_jsonl(need_string(args, "in", name)));
    auto index = forge::HardSeedIndex::from_jsonl(read_jsonl(need_string(args, "index", name)));
    return stage_result(forge::boost_filter(e.context(), e.scoring_config(), cfg, candidates, index,
                                            static_cast<int>(iteration), "boost.iter" + std::to_string(iteration)),
                        need_string(args, "out", name));
  }
  if (name == "synth") {
    Engine& e = require(engine, name);
    auto candidates = forge::chart_records_from_json(read_jsonl(need_string(args, "in", name)));
    return stage_result(
        forge::synth_dataset(e.context(), e.scoring_config(), candidates, unit(args, "rpe_threshold", 0.4)),
        need_string(args, "out", name));
  }
  if (name == "qa-synth") {
    Engine& e = require(engine, name);
    auto charts = qa::chart_inputs_from_json(read_jsonl(need_string(args, "in", name)));
    return stage_result(qa::qa_synth(e.context(), e.qa_config(), charts), need_string(args, "out", name));
  }
  if (name == "cot-distill") {
    Engine& e = require(engine, name);
    auto pairs = read_candidates(need_string(args, "in", name));
    return stage_result(qa::cot_distill(e.context(), e.qa_config(), pairs), need_string(args, "out", name));
  }
  if (name == "cot-filter") {
    cot::FilterOptions opts;
    opts.min_words = static_cast<std::size_t>(opt_integer(args, "min_words", 100));
    opts.ngram_n = static_cast<std::size_t>(opt_integer(args, "ngram_n", 50));
    opts.min_repeats = static_cast<std::size_t>(opt_integer(args, "min_repeats", 3));
    if (opts.ngram_n < 1) fail(ErrorCode::kConfig, "cot-filter: ngram_n must be >= 1");
    auto rep = qa::cot_filter(read_candidates(need_string(args, "in", name)), opts);
    const fs::path dir = need_string(args, "out_dir", name);
    std::vector<Json> rows;
    for (const auto& c : rep.candidates) rows.push_back(qa::to_json(c));
    write_jsonl(dir / "cot_filtered.jsonl", rows);
    write_jsonl(dir / "traces_passed.jsonl", rep.passed);
    write_jsonl(dir / "traces_rejected.jsonl", rep.rejected);
    Json hist = Json::object();
    for (const auto& [rule, n] : rep.histogram) hist[rule] = n;
    write_text_file(dir / "cot_filter_histogram.json", hist.dump(2) + "\n");
    return {{"passed", rep.passed.size()}, {"rejected", rep.rejected.size()}, {"histogram", hist}};
  }
  if (name == "bucket") {
    const long long quota = opt_integer(args, "rl_quota", 0);
    if (quota < 0) fail(ErrorCode::kConfig, "bucket: rl_quota must be >= 0");
    auto out = qa::bucket_candidates(read_candidates(need_string(args, "in", name)), static_cast<std::size_t>(quota));
    const fs::path dir = need_string(args, "out_dir", name);
    write_jsonl(dir / "sft.jsonl", out.sft);
    write_jsonl(dir / "rl.jsonl", out.rl);
    write_jsonl(dir / "rejected.jsonl", out.rejected);
    return {{"sft", out.sft.size()}, {"rl", out.rl.size()}, {"rejected", out.rejected.size()}};
  }
  if (name == "diagnose") {
    if (!args.contains("inputs") || !args["inputs"].is_array() || args["inputs"].empty()) {
      fail(ErrorCode::kConfig, "diagnose: at least one input corpus required");
    }
    std::vector<diag::CorpusInput> corpora;
    for (const Json& in : args["inputs"]) {
      const std::string path = need_string(in, "path", name);
      std::string id = in.value("id", "");
      if (id.empty()) id = fs::path(path).stem().string();
      corpora.push_back({id, read_jsonl(path)});
    }
    std::unique_ptr<ContentStore> store;
    if (args.contains("store")) store = std::make_unique<ContentStore>(need_string(args, "store", name));
    diag::ReportOptions opts;
    opts.sample_size = static_cast<std::size_t>(opt_integer(args, "sample_size", 1000));
    opts.seed = static_cast<std::uint64_t>(opt_integer(args, "seed", 0));
    auto reports = diag::build_report(corpora, store.get(), opts, need_string(args, "out_dir", name));
    Json result = Json::array();
    for (const auto& r : reports) result.push_back(diag::to_json(r));
    return {{"reports", result}};
  }
  if (name == "validate") {
    auto violations = qa::validate_dataset(need_string(args, "dir", name));
    Json rows = Json::array();
    for (const auto& v : violations) {
      rows.push_back({{"file", v.file}, {"line", v.line}, {"qa_id", v.qa_id}, {"reason", v.reason}});
    }
    return {{"violations", rows}};
  }
  fail(ErrorCode::kConfig, "unknown command '" + name + "'");
}

}  // namespace chartforge::pipeline
