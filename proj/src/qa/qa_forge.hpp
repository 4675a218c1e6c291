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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cot/cot_filter.hpp"
#include "pipeline/runner.hpp"
#include "qa/answer.hpp"

namespace chartforge::qa {

struct CotTrace {
  std::string raw_text;
  std::optional<std::string> extracted_answer;
  bool matches_gt = false;
  std::size_t token_estimate = 0;
  std::optional<std::string> error;  // transport failure; counts as a miss
  std::optional<cot::FilterVerdict> filter;
};

Json to_json(const CotTrace& t);
CotTrace cot_trace_from_json(const Json& j);

struct QaCandidate {
  std::string qa_id;
  std::string chart_id;
  int script_index = 0;
  std::string image_ref;
  std::string script;
  std::string answer_py;
  std::string question;
  std::string consistency_answer;
  bool consistent = false;
  std::vector<CotTrace> traces;
  std::optional<FailRate> rate;
};

Json to_json(const QaCandidate& c);
QaCandidate qa_candidate_from_json(const Json& j);

std::string make_qa_id(const std::string& chart_id, int script_index);

// Chart input for QA synthesis.
struct ChartInput {
  std::string chart_id;
  std::string code;
  std::string image_ref;
};
std::vector<ChartInput> chart_inputs_from_json(const std::vector<Json>& rows);

struct QaConfig {
  std::string qa_endpoint = "qa";
  std::string distill_endpoint = "distill";
  int scripts_per_chart = 2;
  int traces = 3;
  double script_timeout_s = 60.0;
  Matcher matcher;
};

// Text-only logic phase. Each throws Error(kSynthesisParse) when the reply
// lacks the expected tag.
std::string gen_answer_script(pipeline::RunContext& ctx, const QaConfig& cfg, const std::string& code,
                              const std::string& seed_label);
std::string gen_question(pipeline::RunContext& ctx, const QaConfig& cfg, const std::string& code,
                         const std::string& script, const std::string& seed_label);

struct Consistency {
  std::optional<std::string> answer;
  bool consistent = false;
};
Consistency consistency_check(pipeline::RunContext& ctx, const QaConfig& cfg, const std::string& code,
                              const std::string& question, const std::string& answer_py,
                              const std::string& seed_label);

// Executes the script through the broker; the trimmed final print.
std::string ground_truth(pipeline::RunContext& ctx, const QaConfig& cfg, const std::string& script);

// `cfg.traces` sequential chat calls with the chart image attached.
std::vector<CotTrace> distill_traces(pipeline::RunContext& ctx, const QaConfig& cfg, const Bytes& png,
                                     const std::string& question, const std::string& answer_py,
                                     const std::string& seed_label);

// scripts_per_chart candidates per chart; consistent ones are retained.
pipeline::StageResult qa_synth(pipeline::RunContext& ctx, const QaConfig& cfg, const std::vector<ChartInput>& charts,
                               const std::string& stage = "qa-synth");

// Distills traces for consistent candidates and attaches exact fail rates.
pipeline::StageResult cot_distill(pipeline::RunContext& ctx, const QaConfig& cfg,
                                  const std::vector<QaCandidate>& pairs, const std::string& stage = "cot-distill");

struct CotFilterReport {
  std::vector<QaCandidate> candidates;  // traces annotated with verdicts
  std::vector<Json> passed;             // one row per passing trace
  std::vector<Json> rejected;           // one row per failing trace
  std::map<std::string, std::size_t> histogram;  // rule -> failing traces
};
CotFilterReport cot_filter(const std::vector<QaCandidate>& candidates, const cot::FilterOptions& options = {});

struct BucketOutput {
  std::vector<Json> sft;
  std::vector<Json> rl;
  std::vector<Json> rejected;  // {qa_id, cause}
};

// Partitions by fail rate and quota. An sft candidate is supervised by its
// first trace that matches the ground truth and (when verdicts are present)
// passes the trace filter; without one it is rejected.
BucketOutput bucket_candidates(const std::vector<QaCandidate>& candidates, std::size_t rl_quota);

// bucket_candidates with ledger events (retained for sft/rl, dropped with
// cause otherwise).
BucketOutput bucket_stage(pipeline::RunContext& ctx, const std::vector<QaCandidate>& candidates,
                          std::size_t rl_quota, const std::string& stage = "bucket");

struct Violation {
  std::string file;
  std::size_t line = 0;
  std::string qa_id;
  std::string reason;
};

// Re-checks anchor soundness of sft.jsonl / rl.jsonl under `dir`: answers
// agree with the consistency answer, fail rates are exact interior values and
// sft supervision traces reach the ground truth.
std::vector<Violation> validate_dataset(const std::filesystem::path& dir);

// Judge hook backed by a chat endpoint; asks for a yes/no verdict.
JudgeHook make_endpoint_judge(gateway::ModelEndpoint& endpoint);

}  // namespace chartforge::qa
