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

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "pipeline/context.hpp"

namespace chartforge::pipeline {

struct Outcome {
  std::string record_id;
  Action action = Action::kEmitted;
  std::string cause;
  Json record;  // null unless the record flows to the stage output
  Json detail;
};

// One unit of parallel work producing one terminal outcome per listed id.
struct WorkItem {
  std::vector<std::string> record_ids;
};

struct StageCounts {
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::size_t emitted = 0;
  std::size_t failed = 0;
  std::size_t reused = 0;   // items already terminal before this run
  std::size_t executed = 0; // items processed by this run
};

struct StageResult {
  std::vector<Json> records;  // retained + emitted records, in item order
  StageCounts counts;
  bool interrupted = false;
};

// Receives the item index and the ids already terminal in the ledger (which
// must not be produced again).
using ItemFn = std::function<std::vector<Outcome>(std::size_t index, const std::set<std::string>& done)>;

// Runs every item not yet terminal with up to `parallelism` threads. Outcomes
// are committed to the ledger in item order regardless of completion order,
// so ledgers of repeated runs are identical. Item-level failures (transport,
// protocol, render, scripted gaps) become `failed` events; any other error
// aborts the stage after in-flight items finish.
StageResult run_stage(RunContext& ctx, const std::string& stage, const std::vector<WorkItem>& items,
                      const ItemFn& fn, int parallelism);

inline WorkItem single(std::string id) { return WorkItem{{std::move(id)}}; }

}  // namespace chartforge::pipeline
