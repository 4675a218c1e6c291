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
#include <optional>
#include <string>
#include <vector>

#include "forge/records.hpp"
#include "pipeline/runner.hpp"

namespace chartforge::forge {

struct ScoringConfig {
  std::string rollout_endpoint = "rollout";
  std::string embed_endpoint = "embedding";
  int rollouts = 8;
  rpe::RpeOptions rpe;
  double render_timeout_s = 60.0;
};

struct ScoreOutcome {
  std::optional<rpe::RpeScore> rpe;  // nullopt only under the drop-record policy
  std::vector<double> embedding;     // of the scored image itself
  std::vector<RolloutAttempt> rollouts;
};

// One rollout campaign: a single chat request for `rollouts` reconstructions
// of the image, each rendered through the broker; the image and every
// successful render are embedded in one call and scored.
ScoreOutcome score_image(pipeline::RunContext& ctx, const ScoringConfig& cfg, const Bytes& png,
                         const std::string& chart_id);

// A line of an input corpus: {"image": path} or {"image_ref": key}, with
// optional "code". Paths resolve against the corpus file's directory.
struct CorpusEntry {
  std::optional<std::string> image_path;
  std::optional<std::string> image_ref;
  std::optional<std::string> code;
};
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& jsonl);

// Emits one scored ChartRecord per distinct image.
pipeline::StageResult score_corpus(pipeline::RunContext& ctx, const ScoringConfig& cfg,
                                   const std::vector<CorpusEntry>& corpus, const std::string& stage = "score");

struct HardSplit {
  std::vector<ChartRecord> hard;
  std::vector<ChartRecord> rest;
  HardSeedIndex index;
};

// {x | rpe(x) >= threshold}, sentinel included. Throws Error(kInvalidInput)
// listing unscored ids.
HardSplit filter_hard(const std::vector<ChartRecord>& records, double threshold);

// filter_hard with one retained/dropped ledger event per record.
pipeline::StageResult filter_hard_stage(pipeline::RunContext& ctx, const std::vector<ChartRecord>& records,
                                        double threshold, const std::string& stage = "filter-hard");

struct ColdStartConfig {
  std::string codegen_endpoint = "codegen";
  double render_timeout_s = 60.0;
};

// One code inference per hard image; records whose code fails to render are
// dropped.
pipeline::StageResult cold_start(pipeline::RunContext& ctx, const ColdStartConfig& cfg,
                                 const std::vector<ChartRecord>& hard, const std::string& stage = "cold-start");

// JSONL lines {"system": coder system prompt, "output": code}. Returns the
// line count. Throws Error(kInvalidInput) for a record without code.
std::size_t export_coder_training_set(const std::vector<ChartRecord>& records, const std::filesystem::path& out,
                                      const std::string& system_prompt);

// `count` coder calls (system prompt, empty user turn), dispatched in order.
// Output is deduplicated by chart_id.
pipeline::StageResult sample_candidates(pipeline::RunContext& ctx, const std::string& coder_endpoint, int count,
                                        int iteration, const std::string& stage);

struct BoostConfig {
  double rpe_threshold = 0.4;
  double sim_limit = 0.65;
};

// Both comparisons inclusive.
bool boost_accept(const rpe::RpeScore& score, double max_sim, double rpe_threshold, double sim_limit);

// Render, score and compare every candidate against the index; keeps
// complex, non-redundant ones.
pipeline::StageResult boost_filter(pipeline::RunContext& ctx, const ScoringConfig& scoring, const BoostConfig& cfg,
                                   const std::vector<ChartRecord>& candidates, const HardSeedIndex& index,
                                   int iteration, const std::string& stage);

// Renders and scores unscored records and keeps rpe >= threshold.
pipeline::StageResult synth_dataset(pipeline::RunContext& ctx, const ScoringConfig& scoring,
                                    const std::vector<ChartRecord>& candidates, double rpe_threshold,
                                    const std::string& stage = "synth");

// First record per chart_id, order preserved.
std::vector<ChartRecord> dedup_by_chart_id(std::vector<ChartRecord> records);

}  // namespace chartforge::forge
