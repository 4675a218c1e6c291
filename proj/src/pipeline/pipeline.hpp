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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/chart_forge.hpp"
#include "pipeline/manifest.hpp"
#include "qa/qa_forge.hpp"

namespace chartforge::pipeline {

// Command-line overrides applied on top of a manifest.
struct RunOptions {
  std::optional<std::int64_t> seed;
  std::optional<int> max_parallel;
  std::optional<std::vector<std::string>> worker_cmd;
  bool dry_run = false;
  long long max_items = -1;  // dispatch budget, -1 for unlimited
};

enum class RunStatus { kCompleted, kInterrupted, kHalted };
std::string_view run_status_name(RunStatus s);

struct RunReport {
  RunStatus status = RunStatus::kCompleted;
  std::string message;
  Json summary = Json::object();
};

// Owns the runtime pieces a manifest describes: gateway, broker, store,
// ledger and prompt catalog.
class Engine {
 public:
  Engine(Manifest manifest, const RunOptions& options);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  RunContext& context() { return ctx_; }
  const Manifest& manifest() const { return manifest_; }
  const RunOptions& options() const { return options_; }
  const prompts::PromptCatalog& prompts() const { return prompts_; }

  // Starts the worker pool on first use.
  broker::ExecutionBroker& broker();

  forge::ScoringConfig scoring_config() const;
  qa::QaConfig qa_config();

 private:
  Manifest manifest_;
  RunOptions options_;
  gateway::Gateway gateway_;
  prompts::PromptCatalog prompts_;
  std::unique_ptr<ContentStore> store_;
  std::unique_ptr<RunLedger> ledger_;
  std::unique_ptr<broker::ExecutionBroker> broker_;
  RunContext ctx_;
};

// Builds the gateway alone (also used by dry runs to check auth variables).
gateway::Gateway build_gateway(const Manifest& manifest);

// Runs every listed stage in order, resuming from the ledger in the output
// directory. Stages whose inputs were produced by an unlisted stage read that
// stage's output file instead.
RunReport run_pipeline(const Manifest& manifest, const RunOptions& options);

// Validates the manifest and describes what a run would do without touching
// endpoints, workers or output files.
Json plan_pipeline(const Manifest& manifest, const RunOptions& options);

}  // namespace chartforge::pipeline
