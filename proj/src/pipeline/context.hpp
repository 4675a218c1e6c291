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

#include <atomic>
#include <cstdint>
#include <memory>

#include "broker/broker.hpp"
#include "gateway/endpoint.hpp"
#include "pipeline/ledger.hpp"
#include "pipeline/store.hpp"
#include "prompts/catalog.hpp"

namespace chartforge::pipeline {

// Caps how many pending work items a run may start. Once spent, stages stop
// dispatching, let in-flight items finish and report an interruption; used to
// exercise resume.
class DispatchBudget {
 public:
  explicit DispatchBudget(long long limit = -1) : unlimited_(limit < 0), remaining_(limit) {}
  bool take();
  bool exhausted() const { return exhausted_.load(); }

 private:
  bool unlimited_;
  std::atomic<long long> remaining_;
  std::atomic<bool> exhausted_{false};
};

// Everything a stage needs; owned by the caller.
struct RunContext {
  gateway::Gateway* gateway = nullptr;
  broker::ExecutionBroker* broker = nullptr;
  const prompts::PromptCatalog* prompts = nullptr;
  ContentStore* store = nullptr;
  RunLedger* ledger = nullptr;
  std::int64_t seed = 0;
  int max_parallel = 4;
  std::shared_ptr<DispatchBudget> budget = std::make_shared<DispatchBudget>();

  gateway::ModelEndpoint& endpoint(const std::string& name) const { return gateway->at(name); }
};

// Deterministic per-call seed derived from the run seed and a label.
std::int64_t derive_seed(std::int64_t run_seed, std::string_view label);

}  // namespace chartforge::pipeline
