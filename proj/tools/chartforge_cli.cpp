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

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chartforge/chartforge.h"

using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::optional<long long> seed;
  std::optional<int> max_parallel;
  bool dry_run = false;
  std::string worker_cmd;
  long long max_items = -1;
  std::string manifest;
};

int exit_for(cf_status s) { return s == CF_ERR_CONFIG ? kExitConfig : kExitFailure; }

int report_error(cf_status s) {
  std::cerr << "chartforge: " << cf_status_name(s) << ": " << cf_last_error() << "\n";
  return exit_for(s);
}

std::string options_json(const Globals& g) {
  Json o = Json::object();
  if (g.seed) o["seed"] = *g.seed;
  if (g.max_parallel) o["max_parallel"] = *g.max_parallel;
  if (g.dry_run) o["dry_run"] = true;
  if (g.max_items >= 0) o["max_items"] = g.max_items;
  if (!g.worker_cmd.empty()) {
    std::istringstream in(g.worker_cmd);
    std::vector<std::string> argv;
    for (std::string word; in >> word;) argv.push_back(word);
    o["worker_cmd"] = argv;
  }
  return o.dump();
}

std::string take(char* s) {
  std::string out = s ? s : "";
  cf_free_string(s);
  return out;
}

int print_result(const std::string& json_text) {
  std::cout << Json::parse(json_text).dump(2) << "\n";
  return kExitOk;
}

int run_command(const Globals& g, const std::string& name, const Json& args) {
  cf_context* ctx = nullptr;
  if (!g.manifest.empty()) {
    cf_status s = cf_context_open(g.manifest.c_str(), options_json(g).c_str(), &ctx);
    if (s != CF_OK) return report_error(s);
  }
  char* out = nullptr;
  const std::string text = args.dump();
  cf_status s = cf_command(ctx, name.c_str(), text.c_str(), &out);
  cf_context_close(ctx);
  if (s != CF_OK) return report_error(s);
  const std::string result = take(out);
  Json parsed = Json::parse(result);
  print_result(result);
  if (parsed.value("interrupted", false)) {
    std::cerr << "chartforge: " << name << " interrupted; run again to resume\n";
    return kExitFailure;
  }
  return kExitOk;
}

int run_pipeline(const Globals& g, const std::string& manifest) {
  cf_context* ctx = nullptr;
  cf_status s = cf_context_open(manifest.c_str(), options_json(g).c_str(), &ctx);
  if (s != CF_OK) return report_error(s);
  char* out = nullptr;
  s = cf_context_run(ctx, &out);
  cf_context_close(ctx);
  if (s != CF_OK) return report_error(s);
  const std::string result = take(out);
  print_result(result);
  const Json summary = Json::parse(result);
  if (summary.value("status", "") == "interrupted") {
    std::cerr << "chartforge: " << summary.value("message", "interrupted") << "\n";
    return kExitFailure;
  }
  if (summary.value("status", "") == "halted") std::cerr << "chartforge: " << summary.value("message", "") << "\n";
  return kExitOk;
}

int validate(const std::string& dir) {
  char* out = nullptr;
  const std::string args = Json{{"dir", dir}}.dump();
  cf_status s = cf_command(nullptr, "validate", args.c_str(), &out);
  if (s != CF_OK) return report_error(s);
  const Json result = Json::parse(take(out));
  const Json& violations = result["violations"];
  for (const Json& v : violations) {
    std::cerr << v["file"].get<std::string>() << ":" << v["line"].get<long long>() << ": "
              << v["qa_id"].get<std::string>() << ": " << v["reason"].get<std::string>() << "\n";
  }
  std::cout << violations.size() << " violation(s)\n";
  return violations.empty() ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chartforge: chart data synthesis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Override the manifest seed");
  app.add_option("--max-parallel", g.max_parallel, "Override per-stage parallelism")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "Validate and plan without calling endpoints or workers");
  app.add_option("--worker-cmd", g.worker_cmd, "Worker command line (overrides worker_cmd)");
  app.add_option("--max-items", g.max_items, "Stop dispatching after this many work items");

  Json args = Json::object();
  std::string command;
  auto str = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help,
                 bool required) {
    auto* opt = sub->add_option_function<std::string>(flag, [&args, key](const std::string& v) { args[key] = v; }, help);
    if (required) opt->required();
  };
  auto num = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<double>(flag, [&args, key](double v) { args[key] = v; }, help);
  };
  auto integer = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<long long>(flag, [&args, key](long long v) { args[key] = v; }, help);
  };
  auto with_manifest = [&](CLI::App* sub) {
    sub->add_option("-m,--manifest", g.manifest, "Manifest supplying endpoints, workers and the ledger")
        ->required();
  };

  auto* score = app.add_subcommand("score", "Score a corpus of chart images");
  with_manifest(score);
  str(score, "--input", "input", "Corpus JSONL ({\"image\": path} per line)", true);
  str(score, "--out", "out", "Scored records JSONL", true);

  auto* fh = app.add_subcommand("filter-hard", "Keep records with rpe >= threshold");
  str(fh, "--in", "in", "Scored records JSONL", true);
  str(fh, "--out", "out", "Hard records JSONL", true);
  str(fh, "--index-out", "index_out", "Hard seed index JSONL", false);
  num(fh, "--threshold", "rpe_threshold", "RPE threshold (default 0.4)");

  auto* cs = app.add_subcommand("cold-start", "Infer code for hard images");
  with_manifest(cs);
  str(cs, "--in", "in", "Hard records JSONL", true);
  str(cs, "--out", "out", "Cold-start records JSONL", true);

  auto* ex = app.add_subcommand("export-coder-set", "Write coder fine-tuning JSONL");
  str(ex, "--in", "in", "Records with code", true);
  str(ex, "--out", "out", "Training JSONL", true);

  auto* smp = app.add_subcommand("coder-sample", "Sample chart programs from a coder endpoint");
  with_manifest(smp);
  str(smp, "--endpoint", "endpoint", "Coder endpoint name", true);
  integer(smp, "--count", "count", "Number of samples (default 100)");
  integer(smp, "--iteration", "iteration", "Iteration tag (default 1)");
  str(smp, "--out", "out", "Candidate records JSONL", true);

  auto* boost = app.add_subcommand("boost", "Keep complex candidates dissimilar to the hard seeds");
  with_manifest(boost);
  str(boost, "--in", "in", "Candidate records JSONL", true);
  str(boost, "--index", "index", "Hard seed index JSONL", true);
  str(boost, "--out", "out", "Accepted records JSONL", true);
  num(boost, "--threshold", "rpe_threshold", "RPE threshold (default 0.4)");
  num(boost, "--sim-limit", "sim_limit", "Maximum cosine similarity (default 0.65)");
  integer(boost, "--iteration", "iteration", "Iteration tag (default 1)");

  auto* synth = app.add_subcommand("synth", "Render, score and keep complex synthetic charts");
  with_manifest(synth);
  str(synth, "--in", "in", "Candidate records JSONL", true);
  str(synth, "--out", "out", "Dataset records JSONL", true);
  num(synth, "--threshold", "rpe_threshold", "RPE threshold (default 0.4)");

  auto* qs = app.add_subcommand("qa-synth", "Synthesize answer-first QA pairs");
  with_manifest(qs);
  str(qs, "--in", "in", "Chart records JSONL (with code)", true);
  str(qs, "--out", "out", "QA candidates JSONL", true);

  auto* cd = app.add_subcommand("cot-distill", "Distill reasoning traces and fail rates");
  with_manifest(cd);
  str(cd, "--in", "in", "QA candidates JSONL", true);
  str(cd, "--out", "out", "Distilled candidates JSONL", true);

  auto* cf = app.add_subcommand("cot-filter", "Filter distilled traces");
  str(cf, "--in", "in", "Distilled candidates JSONL", true);
  str(cf, "--out-dir", "out_dir", "Output directory", true);
  integer(cf, "--min-words", "min_words", "Minimum think-region words (default 100)");
  integer(cf, "--ngram", "ngram_n", "Repetition window in tokens (default 50)");
  integer(cf, "--min-repeats", "min_repeats", "Repeats that flag a trace (default 3)");

  auto* bk = app.add_subcommand("bucket", "Split candidates into rl, sft and rejected");
  str(bk, "--in", "in", "Filtered candidates JSONL", true);
  str(bk, "--out-dir", "out_dir", "Output directory", true);
  integer(bk, "--rl-quota", "rl_quota", "Number of rl records (default 0)");

  auto* dg = app.add_subcommand("diagnose", "Diversity and complexity report");
  std::vector<std::string> inputs;
  dg->add_option("--in", inputs, "Record JSONL, optionally id=path; repeatable")->required();
  str(dg, "--store", "store", "Content store holding the images", false);
  str(dg, "--out-dir", "out_dir", "Report directory", true);
  integer(dg, "--sample-size", "sample_size", "Sample size (default 1000)");

  auto* run = app.add_subcommand("run", "Run every stage of a manifest");
  std::string run_manifest;
  run->add_option("manifest", run_manifest, "Manifest JSON")->required();

  auto* val = app.add_subcommand("validate", "Re-check anchor soundness of sft.jsonl and rl.jsonl");
  std::string dataset;
  val->add_option("dataset", dataset, "Directory holding sft.jsonl and rl.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "chartforge: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (run->parsed()) return run_pipeline(g, run_manifest);
    if (val->parsed()) return validate(dataset);
    for (CLI::App* sub : app.get_subcommands()) {
      command = sub->get_name();
      if (sub == dg) {
        Json list = Json::array();
        for (const auto& in : inputs) {
          const auto eq = in.find('=');
          if (eq == std::string::npos) {
            list.push_back({{"path", in}});
          } else {
            list.push_back({{"id", in.substr(0, eq)}, {"path", in.substr(eq + 1)}});
          }
        }
        args["inputs"] = list;
        if (g.seed) args["seed"] = *g.seed;
      }
      return run_command(g, command, args);
    }
  } catch (const std::exception& e) {
    std::cerr << "chartforge: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}
