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

#include <optional>
#include <string>
#include <string_view>

#include "common/digest.hpp"

// Newline-delimited JSON spoken between the broker and sandbox workers.
//   request:  {"task_id":str,"kind":"render"|"script","code":str,"timeout_s":num}
//   response: {"task_id":str,"status":str,"stdout":str,"stderr":str,
//              "artifact_b64":str?,"wall_ms":num}
namespace chartforge::broker {

enum class TaskKind { kRender, kScript };
enum class ExecStatus { kOk, kExecError, kTimeout, kWorkerCrash };

std::string_view kind_name(TaskKind kind);
std::string_view status_name(ExecStatus status);
std::optional<ExecStatus> parse_status(std::string_view name);

inline constexpr double kDefaultTimeoutS = 60.0;

struct ExecutionTask {
  std::string task_id;
  TaskKind kind = TaskKind::kScript;
  std::string code;
  double timeout_s = kDefaultTimeoutS;
};

struct WorkerResponse {
  std::string task_id;
  ExecStatus status = ExecStatus::kOk;
  std::string stdout_text;
  std::string stderr_text;
  std::optional<std::string> artifact_b64;
  double wall_ms = 0;
};

// Single line, no trailing newline.
std::string encode_request(const ExecutionTask& task);
std::string encode_response(const WorkerResponse& response);

// Throw Error(kProtocol) with a parse note.
ExecutionTask decode_request(std::string_view line);
WorkerResponse decode_response(std::string_view line);

}  // namespace chartforge::broker
