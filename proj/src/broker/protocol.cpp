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

#include "broker/protocol.hpp"

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace chartforge::broker {

std::string_view kind_name(TaskKind kind) { return kind == TaskKind::kRender ? "render" : "script"; }

std::string_view status_name(ExecStatus status) {
  switch (status) {
    case ExecStatus::kOk: return "ok";
    case ExecStatus::kExecError: return "exec_error";
    case ExecStatus::kTimeout: return "timeout";
    case ExecStatus::kWorkerCrash: return "worker_crash";
  }
  return "worker_crash";
}

std::optional<ExecStatus> parse_status(std::string_view name) {
  if (name == "ok") return ExecStatus::kOk;
  if (name == "exec_error") return ExecStatus::kExecError;
  if (name == "timeout") return ExecStatus::kTimeout;
  if (name == "worker_crash") return ExecStatus::kWorkerCrash;
  return std::nullopt;
}

std::string encode_request(const ExecutionTask& task) {
  Json j = {{"task_id", task.task_id},
            {"kind", kind_name(task.kind)},
            {"code", task.code},
            {"timeout_s", task.timeout_s}};
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string encode_response(const WorkerResponse& r) {
  Json j = {{"task_id", r.task_id},
            {"status", status_name(r.status)},
            {"stdout", r.stdout_text},
            {"stderr", r.stderr_text},
            {"wall_ms", r.wall_ms}};
  if (r.artifact_b64) j["artifact_b64"] = *r.artifact_b64;
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

ExecutionTask decode_request(std::string_view line) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kProtocol, "request line is not a JSON object");
  try {
    ExecutionTask task;
    task.task_id = j.at("task_id").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "render") {
      task.kind = TaskKind::kRender;
    } else if (kind == "script") {
      task.kind = TaskKind::kScript;
    } else {
      fail(ErrorCode::kProtocol, "unknown task kind '" + kind + "'");
    }
    task.code = j.at("code").get<std::string>();
    task.timeout_s = j.value("timeout_s", kDefaultTimeoutS);
    return task;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kProtocol, std::string("bad request field: ") + e.what());
  }
}

WorkerResponse decode_response(std::string_view line) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kProtocol, "response line is not a JSON object");
  try {
    WorkerResponse r;
    r.task_id = j.at("task_id").get<std::string>();
    auto status = parse_status(j.at("status").get<std::string>());
    if (!status) fail(ErrorCode::kProtocol, "unknown status '" + j["status"].get<std::string>() + "'");
    r.status = *status;
    r.stdout_text = j.value("stdout", "");
    r.stderr_text = j.value("stderr", "");
    if (j.contains("artifact_b64") && j["artifact_b64"].is_string()) {
      r.artifact_b64 = j["artifact_b64"].get<std::string>();
    }
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kProtocol, std::string("bad response field: ") + e.what());
  }
}

}  // namespace chartforge::broker
