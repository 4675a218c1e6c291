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

#include "pipeline/ledger.hpp"

#include <chrono>

#include "common/error.hpp"

namespace fs = std::filesystem;

namespace chartforge::pipeline {

std::string_view action_name(Action action) {
  switch (action) {
    case Action::kRetained: return "retained";
    case Action::kDropped: return "dropped";
    case Action::kFailed: return "failed";
    case Action::kEmitted: return "emitted";
  }
  return "failed";
}

std::optional<Action> parse_action(std::string_view name) {
  if (name == "retained") return Action::kRetained;
  if (name == "dropped") return Action::kDropped;
  if (name == "failed") return Action::kFailed;
  if (name == "emitted") return Action::kEmitted;
  return std::nullopt;
}

Json to_json(const LedgerEvent& e) {
  Json j = {{"stage", e.stage},
            {"record_id", e.record_id},
            {"action", action_name(e.action)},
            {"cause", e.cause},
            {"ts", e.ts}};
  if (!e.record.is_null()) j["record"] = e.record;
  if (!e.detail.is_null()) j["detail"] = e.detail;
  return j;
}

LedgerEvent ledger_event_from_json(const Json& j) {
  LedgerEvent e;
  e.stage = j.at("stage").get<std::string>();
  e.record_id = j.at("record_id").get<std::string>();
  auto action = parse_action(j.at("action").get<std::string>());
  if (!action) fail(ErrorCode::kIntegrity, "unknown action '" + j.at("action").get<std::string>() + "'");
  e.action = *action;
  e.cause = j.value("cause", "");
  e.ts = j.value("ts", 0LL);
  if (j.contains("record")) e.record = j["record"];
  if (j.contains("detail")) e.detail = j["detail"];
  return e;
}

RunLedger::RunLedger(fs::path file, bool canonical) : file_(std::move(file)), canonical_(canonical) {
  if (fs::exists(file_)) {
    std::ifstream in(file_, std::ios::binary);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string where = file_.string() + ":" + std::to_string(lineno);
      if (line.empty()) fail(ErrorCode::kIntegrity, where + ": empty ledger line");
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kIntegrity, where + ": corrupt ledger line");
      LedgerEvent e;
      try {
        e = ledger_event_from_json(j);
      } catch (const Json::exception& ex) {
        fail(ErrorCode::kIntegrity, where + ": " + ex.what());
      } catch (const Error& ex) {
        fail(ErrorCode::kIntegrity, where + ": " + ex.what());
      }
      try {
        append_locked(e);
      } catch (const Error& ex) {
        fail(ErrorCode::kIntegrity, where + ": " + ex.what());
      }
    }
  } else if (!file_.parent_path().empty()) {
    fs::create_directories(file_.parent_path());
  }
  out_.open(file_, std::ios::app | std::ios::binary);
  if (!out_) fail(ErrorCode::kIo, "cannot open ledger " + file_.string());
}

void RunLedger::append_locked(LedgerEvent& event) {
  if (is_terminal(event.action)) {
    auto key = std::make_pair(event.stage, event.record_id);
    if (terminal_.count(key)) {
      fail(ErrorCode::kIntegrity,
           "duplicate terminal action for " + event.stage + "/" + event.record_id);
    }
    terminal_[key] = events_.size();
  }
  events_.push_back(event);
}

void RunLedger::append(LedgerEvent event) {
  std::vector<LedgerEvent> one;
  one.push_back(std::move(event));
  append_all(std::move(one));
}

void RunLedger::append_all(std::vector<LedgerEvent> events) {
  std::lock_guard lock(mutex_);
  for (auto& e : events) {
    if (canonical_) {
      e.ts = 0;
    } else if (e.ts == 0) {
      e.ts = std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
                 .count();
    }
    append_locked(e);
    out_ << canonical_dump(to_json(e)) << '\n';
  }
  out_.flush();
  if (!out_) fail(ErrorCode::kIo, "cannot append to ledger " + file_.string());
}

std::optional<LedgerEvent> RunLedger::terminal(const std::string& stage, const std::string& record_id) const {
  std::lock_guard lock(mutex_);
  auto it = terminal_.find({stage, record_id});
  if (it == terminal_.end()) return std::nullopt;
  return events_[it->second];
}

std::vector<LedgerEvent> RunLedger::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::size_t RunLedger::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

}  // namespace chartforge::pipeline
