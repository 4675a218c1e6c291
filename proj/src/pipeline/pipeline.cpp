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

#include "pipeline/pipeline.hpp"

#include <cstdlib>
#include <filesystem>

#include "common/error.hpp"
#include "diag/diagnostics.hpp"
#include "gateway/transport.hpp"
#include "pipeline/log.hpp"

namespace fs = std::filesystem;

namespace chartforge::pipeline {

using forge::ChartRecord;
using qa::QaCandidate;

std::string_view run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kInterrupted: return "interrupted";
    case RunStatus::kHalted: return "halted";
  }
  return "unknown";
}

gateway::Gateway build_gateway(const Manifest& manifest) {
  gateway::Gateway gw;
  for (const auto& [name, base] : manifest.endpoints) {
    gateway::EndpointConfig cfg = base;
    if (auto it = manifest.auth_env.find(name); it != manifest.auth_env.end()) {
      const char* token = std::getenv(it->second.c_str());
      if (!token || !*token) {
        fail(ErrorCode::kConfig, "endpoint " + name + ": environment variable " + it->second + " is not set");
      }
      cfg.auth_token = token;
    }
    auto transport = gateway::make_transport(cfg, manifest.base_dir);
    gw.add(std::make_shared<gateway::ModelEndpoint>(std::move(cfg), std::move(transport)));
  }
  return gw;
}

Engine::Engine(Manifest manifest, const RunOptions& options)
    : manifest_(std::move(manifest)), options_(options) {
  if (options_.seed) manifest_.seed = *options_.seed;
  if (options_.max_parallel) {
    if (*options_.max_parallel < 1) fail(ErrorCode::kConfig, "--max-parallel must be >= 1");
    manifest_.max_parallel = *options_.max_parallel;
  }
  if (options_.worker_cmd) manifest_.worker_cmd = *options_.worker_cmd;
  for (const auto& [name, file] : manifest_.prompt_overrides) prompts_.override_from_file(name, file);

  gateway_ = build_gateway(manifest_);
  store_ = std::make_unique<ContentStore>(manifest_.store_root);
  fs::create_directories(manifest_.output_dir);
  ledger_ = std::make_unique<RunLedger>(manifest_.output_dir / "ledger.jsonl", manifest_.canonical_ledger);

  ctx_.gateway = &gateway_;
  ctx_.prompts = &prompts_;
  ctx_.store = store_.get();
  ctx_.ledger = ledger_.get();
  ctx_.seed = manifest_.seed;
  ctx_.max_parallel = manifest_.max_parallel;
  ctx_.budget = std::make_shared<DispatchBudget>(options_.max_items);
  if (!manifest_.worker_cmd.empty()) {
    broker();
  } else if (manifest_.needs_broker()) {
    fail(ErrorCode::kConfig, "worker_cmd is required by the listed stages (set it in the manifest or pass --worker-cmd)");
  }
}

Engine::~Engine() {
  if (broker_) broker_->shutdown();
}

broker::ExecutionBroker& Engine::broker() {
  if (!broker_) {
    if (manifest_.worker_cmd.empty()) fail(ErrorCode::kConfig, "no worker_cmd configured");
    broker::BrokerConfig cfg;
    cfg.worker_cmd = manifest_.worker_cmd;
    cfg.pool_size = manifest_.worker_pool;
    broker_ = std::make_unique<broker::ExecutionBroker>(cfg);
    ctx_.broker = broker_.get();
  }
  return *broker_;
}

forge::ScoringConfig Engine::scoring_config() const {
  forge::ScoringConfig c;
  c.rollout_endpoint = manifest_.roles.rollout;
  c.embed_endpoint = manifest_.roles.embedding;
  c.rollouts = manifest_.scoring.rollouts;
  c.rpe = manifest_.scoring.rpe;
  c.render_timeout_s = manifest_.scoring.render_timeout_s;
  return c;
}

qa::QaConfig Engine::qa_config() {
  qa::QaConfig c;
  c.qa_endpoint = manifest_.roles.qa;
  c.distill_endpoint = manifest_.roles.distill;
  if (const StageSpec* s = manifest_.stage("qa-synth")) {
    c.scripts_per_chart = static_cast<int>(s->integer("scripts_per_chart", c.scripts_per_chart));
    c.script_timeout_s = s->number("script_timeout_s", c.script_timeout_s);
  }
  if (const StageSpec* s = manifest_.stage("cot-distill")) c.traces = static_cast<int>(s->integer("traces", 3));
  if (manifest_.roles.judge) c.matcher = qa::Matcher(qa::make_endpoint_judge(gateway_.at(*manifest_.roles.judge)));
  return c;
}

namespace {

Json counts_json(const StageCounts& c) {
  return {{"retained", c.retained}, {"dropped", c.dropped}, {"emitted", c.emitted}, {"failed", c.failed}};
}

std::vector<ChartRecord> load_records(const fs::path& file, const std::string& needed_by) {
  if (!fs::exists(file)) {
    fail(ErrorCode::kConfig, needed_by + " needs " + file.filename().string() +
                                 "; list the stage that produces it or place the file in the output directory");
  }
  return forge::chart_records_from_json(read_jsonl(file));
}

std::vector<QaCandidate> load_candidates(const fs::path& file, const std::string& needed_by) {
  if (!fs::exists(file)) {
    fail(ErrorCode::kConfig, needed_by + " needs " + file.filename().string() +
                                 "; list the stage that produces it or place the file in the output directory");
  }
  std::vector<QaCandidate> out;
  for (const Json& row : read_jsonl(file)) out.push_back(qa::qa_candidate_from_json(row));
  return out;
}

std::vector<Json> candidates_json(const std::vector<QaCandidate>& cs) {
  std::vector<Json> rows;
  for (const auto& c : cs) rows.push_back(qa::to_json(c));
  return rows;
}

std::vector<QaCandidate> candidates_of(const StageResult& r) {
  std::vector<QaCandidate> out;
  for (const Json& row : r.records) out.push_back(qa::qa_candidate_from_json(row));
  return out;
}

forge::HardSeedIndex index_of(const std::vector<ChartRecord>& records) {
  forge::HardSeedIndex index;
  for (const auto& r : records) {
    if (!r.embedding) fail(ErrorCode::kInvalidInput, "hard record " + r.chart_id + " has no embedding");
    index.add(r.chart_id, *r.embedding);
  }
  return index;
}

std::vector<ChartRecord> concat(std::vector<ChartRecord> a, const std::vector<ChartRecord>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return forge::dedup_by_chart_id(std::move(a));
}

class Driver {
 public:
  Driver(Engine& engine) : engine_(engine), m_(engine.manifest()), out_(m_.output_dir) {}

  RunReport run() {
    summary_["seed"] = m_.seed;
    summary_["stages"] = Json::object();
    for (const StageSpec& s : m_.stages) {
      log_info("stage " + s.name);
      bool go = true;
      if (s.name == "score") go = score(s);
      else if (s.name == "filter-hard") go = filter_hard(s);
      else if (s.name == "cold-start") go = cold_start();
      else if (s.name == "self-enhance") go = self_enhance(s);
      else if (s.name == "synth") go = synth(s);
      else if (s.name == "qa-synth") go = qa_synth();
      else if (s.name == "cot-distill") go = cot_distill();
      else if (s.name == "cot-filter") go = cot_filter(s);
      else if (s.name == "bucket") go = bucket(s);
      else if (s.name == "diagnose") go = diagnose(s);
      if (!go) break;
    }
    report_.summary = summary_;
    report_.summary["status"] = std::string(run_status_name(report_.status));
    if (!report_.message.empty()) report_.summary["message"] = report_.message;
    write_text_file(out_ / "run_summary.json", report_.summary.dump(2) + "\n");
    return report_;
  }

 private:
  // Records the stage counts; false when the run must stop here.
  bool note(const std::string& key, const StageResult& r) {
    summary_["stages"][key] = counts_json(r.counts);
    if (r.interrupted) {
      report_.status = RunStatus::kInterrupted;
      report_.message = "interrupted during " + key + "; run again to resume";
      return false;
    }
    return true;
  }

  bool halt(const std::string& message) {
    report_.status = RunStatus::kHalted;
    report_.message = message;
    log_info(message);
    return false;
  }

  std::vector<ChartRecord>& scored() {
    if (!scored_) scored_ = load_records(out_ / "scored.jsonl", "filter-hard");
    return *scored_;
  }
  std::vector<ChartRecord>& hard() {
    if (!hard_) {
      hard_ = load_records(out_ / "hard.jsonl", "cold-start");
      index_ = index_of(*hard_);
    }
    return *hard_;
  }
  std::vector<ChartRecord>& cold() {
    if (!cold_) cold_ = load_records(out_ / "cold.jsonl", "self-enhance");
    return *cold_;
  }

  bool score(const StageSpec& s) {
    auto corpus = forge::load_corpus(s.string("input", ""));
    StageResult r = forge::score_corpus(engine_.context(), engine_.scoring_config(), corpus);
    if (!note("score", r)) return false;
    write_jsonl(out_ / "scored.jsonl", r.records);
    scored_ = forge::chart_records_from_json(r.records);
    return true;
  }

  bool filter_hard(const StageSpec& s) {
    StageResult r = forge::filter_hard_stage(engine_.context(), scored(), s.number("rpe_threshold", 0.4));
    if (!note("filter-hard", r)) return false;
    hard_ = forge::chart_records_from_json(r.records);
    index_ = index_of(*hard_);
    write_jsonl(out_ / "hard.jsonl", r.records);
    write_jsonl(out_ / "hard_index.jsonl", index_.to_jsonl());
    return true;
  }

  bool cold_start() {
    forge::ColdStartConfig cfg;
    cfg.codegen_endpoint = m_.roles.codegen;
    cfg.render_timeout_s = m_.scoring.render_timeout_s;
    StageResult r = forge::cold_start(engine_.context(), cfg, hard());
    if (!note("cold-start", r)) return false;
    cold_ = forge::chart_records_from_json(r.records);
    write_jsonl(out_ / "cold.jsonl", r.records);
    return true;
  }

  bool self_enhance(const StageSpec& s) {
    const int iterations = static_cast<int>(s.integer("iterations", 2));
    const int samples = static_cast<int>(s.integer("samples_per_iteration", 100));
    forge::BoostConfig bcfg{s.number("rpe_threshold", 0.4), s.number("sim_limit", 0.65)};
    const bool grow = s.flag("grow_index", false);
    const std::string system = engine_.prompts().get(prompts::kCoderSystem);

    hard();
    forge::HardSeedIndex index = index_;
    std::vector<ChartRecord> train = cold();
    for (int i = 1; i <= iterations; ++i) {
      const std::string tag = "iter" + std::to_string(i);
      forge::export_coder_training_set(train, out_ / ("coder_train_" + tag + ".jsonl"), system);
      if (static_cast<int>(m_.roles.coder.size()) < i) {
        return halt("self-enhance: no coder endpoint for iteration " + std::to_string(i) + "; train on coder_train_" +
                    tag + ".jsonl and add the endpoint to roles.coder, then run again");
      }
      StageResult raw = forge::sample_candidates(engine_.context(), m_.roles.coder[static_cast<std::size_t>(i - 1)],
                                                 samples, i, "coder-sample." + tag);
      if (!note("coder-sample." + tag, raw)) return false;
      write_jsonl(out_ / ("raw_" + tag + ".jsonl"), raw.records);

      // Candidates of iteration i are compared against an index built only
      // from earlier iterations.
      StageResult boost = forge::boost_filter(engine_.context(), engine_.scoring_config(), bcfg,
                                              forge::chart_records_from_json(raw.records), index, i, "boost." + tag);
      if (!note("boost." + tag, boost)) return false;
      write_jsonl(out_ / ("boost_" + tag + ".jsonl"), boost.records);
      auto accepted = forge::chart_records_from_json(boost.records);
      train = concat(std::move(train), accepted);
      if (grow) {
        for (const auto& r : accepted) {
          if (!index.contains(r.chart_id)) index.add(r.chart_id, *r.embedding);
        }
      }
    }
    forge::export_coder_training_set(train, out_ / "coder_train_final.jsonl", system);
    return true;
  }

  bool synth(const StageSpec& s) {
    std::string coder;
    if (m_.roles.synth_coder) {
      coder = *m_.roles.synth_coder;
    } else if (!m_.roles.coder.empty()) {
      coder = m_.roles.coder.back();
    } else {
      return halt("synth: no coder endpoint configured; set roles.synth_coder");
    }
    const int samples = static_cast<int>(s.integer("samples", 100));
    StageResult raw = forge::sample_candidates(engine_.context(), coder, samples, 0, "coder-sample.syn");
    if (!note("coder-sample.syn", raw)) return false;
    write_jsonl(out_ / "syn_raw.jsonl", raw.records);
    const double threshold = s.number("rpe_threshold", 0.4);
    StageResult r = forge::synth_dataset(engine_.context(), engine_.scoring_config(),
                                         forge::chart_records_from_json(raw.records), threshold);
    if (!note("synth", r)) return false;
    write_jsonl(out_ / "dsyn.jsonl", r.records);
    Json manifest = {{"records", "dsyn.jsonl"},
                     {"count", r.records.size()},
                     {"candidates", raw.records.size()},
                     {"rpe_threshold", threshold},
                     {"dropped", r.counts.dropped},
                     {"failed", r.counts.failed}};
    write_text_file(out_ / "dsyn_manifest.json", manifest.dump(2) + "\n");
    dsyn_ = forge::chart_records_from_json(r.records);
    return true;
  }

  std::vector<ChartRecord> qa_charts() {
    if (dsyn_) return *dsyn_;
    if (fs::exists(out_ / "dsyn.jsonl")) return load_records(out_ / "dsyn.jsonl", "qa-synth");
    fail(ErrorCode::kConfig, "qa-synth needs dsyn.jsonl; list the synth stage or place the file in the output directory");
  }

  bool qa_synth() {
    std::vector<ChartRecord> charts = qa_charts();
    std::vector<qa::ChartInput> inputs;
    for (const auto& r : charts) {
      if (!r.code) continue;
      inputs.push_back({r.chart_id, *r.code, r.image_ref});
    }
    StageResult r = qa::qa_synth(engine_.context(), engine_.qa_config(), inputs);
    if (!note("qa-synth", r)) return false;
    pairs_ = candidates_of(r);
    write_jsonl(out_ / "pairs.jsonl", r.records);
    return true;
  }

  bool cot_distill() {
    if (!pairs_) pairs_ = load_candidates(out_ / "pairs.jsonl", "cot-distill");
    StageResult r = qa::cot_distill(engine_.context(), engine_.qa_config(), *pairs_);
    if (!note("cot-distill", r)) return false;
    distilled_ = candidates_of(r);
    write_jsonl(out_ / "distilled.jsonl", r.records);
    return true;
  }

  bool cot_filter(const StageSpec& s) {
    if (!distilled_) distilled_ = load_candidates(out_ / "distilled.jsonl", "cot-filter");
    cot::FilterOptions opts;
    opts.min_words = static_cast<std::size_t>(s.integer("min_words", static_cast<long long>(opts.min_words)));
    opts.ngram_n = static_cast<std::size_t>(s.integer("ngram_n", static_cast<long long>(opts.ngram_n)));
    opts.min_repeats = static_cast<std::size_t>(s.integer("min_repeats", static_cast<long long>(opts.min_repeats)));
    qa::CotFilterReport rep = qa::cot_filter(*distilled_, opts);
    filtered_ = rep.candidates;
    write_jsonl(out_ / "cot_filtered.jsonl", candidates_json(rep.candidates));
    write_jsonl(out_ / "traces_passed.jsonl", rep.passed);
    write_jsonl(out_ / "traces_rejected.jsonl", rep.rejected);
    Json hist = Json::object();
    for (const auto& [rule, n] : rep.histogram) hist[rule] = n;
    write_text_file(out_ / "cot_filter_histogram.json", hist.dump(2) + "\n");
    summary_["stages"]["cot-filter"] = {{"passed", rep.passed.size()}, {"rejected", rep.rejected.size()}};
    return true;
  }

  bool bucket(const StageSpec& s) {
    if (!filtered_) {
      const fs::path f = out_ / "cot_filtered.jsonl";
      filtered_ = load_candidates(fs::exists(f) ? f : out_ / "distilled.jsonl", "bucket");
    }
    const long long quota = s.integer("rl_quota", 0);
    if (quota < 0) fail(ErrorCode::kConfig, "bucket.rl_quota must be >= 0");
    qa::BucketOutput b = qa::bucket_stage(engine_.context(), *filtered_, static_cast<std::size_t>(quota));
    write_jsonl(out_ / "sft.jsonl", b.sft);
    write_jsonl(out_ / "rl.jsonl", b.rl);
    write_jsonl(out_ / "rejected.jsonl", b.rejected);
    summary_["stages"]["bucket"] = {{"sft", b.sft.size()}, {"rl", b.rl.size()}, {"rejected", b.rejected.size()}};
    return true;
  }

  bool diagnose(const StageSpec& s) {
    std::vector<diag::CorpusInput> corpora;
    auto add = [&](const std::string& id, const fs::path& file) {
      if (fs::exists(file)) corpora.push_back({id, read_jsonl(file)});
    };
    add("seed", out_ / "scored.jsonl");
    add("synth", out_ / "dsyn.jsonl");
    if (corpora.empty()) {
      log_warn("diagnose: no scored.jsonl or dsyn.jsonl to report on");
      return true;
    }
    diag::ReportOptions opts;
    opts.sample_size = static_cast<std::size_t>(s.integer("sample_size", 1000));
    opts.seed = static_cast<std::uint64_t>(m_.seed);
    diag::build_report(corpora, engine_.context().store, opts, out_ / "diagnostics");
    summary_["stages"]["diagnose"] = {{"corpora", corpora.size()}};
    return true;
  }

  Engine& engine_;
  const Manifest& m_;
  fs::path out_;
  Json summary_ = Json::object();
  RunReport report_;
  std::optional<std::vector<ChartRecord>> scored_, hard_, cold_, dsyn_;
  forge::HardSeedIndex index_;
  std::optional<std::vector<QaCandidate>> pairs_, distilled_, filtered_;
};

}  // namespace

RunReport run_pipeline(const Manifest& manifest, const RunOptions& options) {
  if (options.dry_run) {
    RunReport r;
    r.summary = plan_pipeline(manifest, options);
    r.message = "dry run";
    return r;
  }
  Engine engine(manifest, options);
  return Driver(engine).run();
}

Json plan_pipeline(const Manifest& manifest, const RunOptions& options) {
  Manifest m = manifest;
  if (options.seed) m.seed = *options.seed;
  if (options.worker_cmd) m.worker_cmd = *options.worker_cmd;
  prompts::PromptCatalog catalog;
  for (const auto& [name, file] : m.prompt_overrides) catalog.override_from_file(name, file);
  for (const auto& [name, env] : m.auth_env) {
    const char* token = std::getenv(env.c_str());
    if (!token || !*token) m.warnings.push_back("endpoint " + name + ": environment variable " + env + " is not set");
  }
  Json plan = {{"seed", m.seed}, {"output_dir", m.output_dir.string()}, {"stages", Json::array()}};
  for (const auto& s : m.stages) {
    Json entry = s.config;
    entry["name"] = s.name;
    plan["stages"].push_back(entry);
  }
  plan["endpoints"] = Json::array();
  for (const auto& [name, cfg] : m.endpoints) plan["endpoints"].push_back(name);
  plan["warnings"] = m.warnings;
  const fs::path ledger = m.output_dir / "ledger.jsonl";
  plan["ledger_lines"] = fs::exists(ledger) ? read_jsonl(ledger).size() : 0;
  return plan;
}

}  // namespace chartforge::pipeline
