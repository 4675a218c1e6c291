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
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common/jsonl.hpp"

namespace chartforge::pipeline {

// retained/dropped/emitted close a (stage, record_id); failed does not, so a
// resumed run retries it.
enum class Action { kRetained, kDropped, kFailed, kEmitted };
std::string_view action_name(Action action);
std::optional<Action> parse_action(std::string_view name);
inline bool is_terminal(Action a) { return a != Action::kFailed; }

struct LedgerEvent {
  std::string stage;
  std::string record_id;
  Action action = Action::kEmitted;
  std::string cause;
  long long ts = 0;  // unix milliseconds; 0 in canonical mode
  Json record;       // stage output for this record, null when none
  Json detail;       // free-form diagnostics, null when none
};

Json to_json(const LedgerEvent& e);
LedgerEvent ledger_event_from_json(const Json& j);

// Append-only JSONL event log doubling as the checkpoint: a terminal event
// carries the record the stage produced, so a resumed run rebuilds stage
// outputs without repeating work. Thread-safe.
class RunLedger {
 public:
  // Loads any existing file. A malformed line halts with Error(kIntegrity)
  // naming its position.
  RunLedger(std::filesystem::path file, bool canonical);

  // Throws Error(kIntegrity) on a second terminal event for one
  // (stage, record_id).
  void append(LedgerEvent event);
  void append_all(std::vector<LedgerEvent> events);

  std::optional<LedgerEvent> terminal(const std::string& stage, const std::string& record_id) const;
  std::vector<LedgerEvent> events() const;
  std::size_t size() const;
  bool canonical() const { return canonical_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  void append_locked(LedgerEvent& event);

  std::filesystem::path file_;
  bool canonical_;
  mutable std::mutex mutex_;
  std::vector<LedgerEvent> events_;
  std::map<std::pair<std::string, std::string>, std::size_t> terminal_;
  std::ofstream out_;
};

}  // namespace chartforge::pipeline
