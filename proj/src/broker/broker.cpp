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

#include "broker/broker.hpp"

#include <chrono>

#include "common/png.hpp"
#include "common/text.hpp"

namespace chartforge::broker {
namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

ExecutionBroker::ExecutionBroker(BrokerConfig config) : config_(std::move(config)) {
  if (config_.pool_size < 1) fail(ErrorCode::kConfig, "worker pool size must be >= 1");
  if (config_.worker_cmd.empty()) fail(ErrorCode::kConfig, "worker command is empty");
  for (int i = 0; i < config_.pool_size; ++i) {
    idle_.push_back(std::make_unique<WorkerProcess>(config_.worker_cmd));
  }
}

ExecutionBroker::~ExecutionBroker() { shutdown(); }

void ExecutionBroker::shutdown() {
  std::vector<std::unique_ptr<WorkerProcess>> doomed;
  {
    std::lock_guard lock(mutex_);
    shut_down_ = true;
    doomed.swap(idle_);
  }
  available_.notify_all();
  doomed.clear();
}

std::unique_ptr<WorkerProcess> ExecutionBroker::acquire() {
  std::unique_lock lock(mutex_);
  available_.wait(lock, [&] { return shut_down_ || !idle_.empty(); });
  if (shut_down_) fail(ErrorCode::kUnavailable, "execution broker is shut down");
  auto worker = std::move(idle_.back());
  idle_.pop_back();
  ++checked_out_;
  return worker;
}

void ExecutionBroker::release(std::unique_ptr<WorkerProcess> worker) {
  {
    std::lock_guard lock(mutex_);
    --checked_out_;
    if (shut_down_) return;
    idle_.push_back(std::move(worker));
  }
  available_.notify_one();
}

std::string ExecutionBroker::next_task_id() { return "task-" + std::to_string(++task_counter_); }

ExecutionResult ExecutionBroker::submit(const ExecutionTask& input) {
  ExecutionTask task = input;
  if (task.code.empty()) fail(ErrorCode::kInvalidInput, "task code is empty");
  if (task.code.size() > kMaxCodeBytes) fail(ErrorCode::kInvalidInput, "task code exceeds 1 MiB");
  if (!(task.timeout_s > 0)) fail(ErrorCode::kInvalidInput, "task timeout must be > 0");
  if (task.task_id.empty()) task.task_id = next_task_id();

  auto worker = acquire();
  ++submitted_;
  ExecutionResult result;
  result.task_id = task.task_id;
  result.kind = task.kind;

  const auto started = Clock::now();
  const auto deadline = started + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(task.timeout_s + config_.grace_s));
  bool replace = false;
  std::optional<WorkerResponse> response;

  if (!worker->running() || !worker->write_line(encode_request(task))) {
    result.status = ExecStatus::kWorkerCrash;
    result.note = "worker unavailable before task start";
    replace = true;
  } else {
    std::string line;
    switch (worker->read_line(deadline, line)) {
      case WorkerProcess::ReadOutcome::kLine:
        try {
          response = decode_response(line);
          if (response->task_id != task.task_id) {
            result.status = ExecStatus::kWorkerCrash;
            result.note = "worker answered task '" + response->task_id + "'";
            response.reset();
            replace = true;
          }
        } catch (const Error& e) {
          result.status = ExecStatus::kWorkerCrash;
          result.note = std::string("unparseable worker response: ") + e.what();
          replace = true;
        }
        break;
      case WorkerProcess::ReadOutcome::kEof:
        result.status = ExecStatus::kWorkerCrash;
        result.note = "worker exited mid-task";
        replace = true;
        break;
      case WorkerProcess::ReadOutcome::kDeadline:
        result.status = ExecStatus::kTimeout;
        result.note = "killed after wall-clock deadline";
        replace = true;
        break;
    }
  }
  result.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();

  if (response) {
    result.status = response->status;
    result.stdout_tail = text::tail(response->stdout_text, kTailBytes);
    result.stderr_tail = text::tail(response->stderr_text, kTailBytes);
    if (result.status == ExecStatus::kOk && task.kind == TaskKind::kRender) {
      try {
        if (!response->artifact_b64) fail(ErrorCode::kProtocol, "render finished without image.png");
        Bytes png = base64_decode(*response->artifact_b64);
        decode_png(png);
        result.artifact = std::move(png);
      } catch (const Error& e) {
        result.status = ExecStatus::kExecError;
        result.note = e.what();
      }
    }
    if (result.status == ExecStatus::kOk && task.kind == TaskKind::kScript) {
      result.final_print = std::string(text::last_nonempty_line(response->stdout_text));
    }
  }

  if (replace) {
    worker->kill();
    try {
      worker = std::make_unique<WorkerProcess>(config_.worker_cmd);
      ++replaced_;
    } catch (const Error&) {
      worker.reset();
    }
  }
  if (worker) {
    release(std::move(worker));
  } else {
    std::lock_guard lock(mutex_);
    --checked_out_;
  }
  ++resolved_;
  return result;
}

Bytes ExecutionBroker::render_chart(const std::string& code, std::optional<double> timeout_s) {
  ExecutionResult r = submit({"", TaskKind::kRender, code, timeout_s.value_or(config_.default_timeout_s)});
  if (r.status != ExecStatus::kOk) {
    throw ExecutionFailure(r.status, "render failed (" + std::string(status_name(r.status)) + "): " +
                                         (r.note.empty() ? text::tail(r.stderr_tail, 300) : r.note));
  }
  return std::move(*r.artifact);
}

std::string ExecutionBroker::run_script(const std::string& code, std::optional<double> timeout_s) {
  ExecutionResult r = submit({"", TaskKind::kScript, code, timeout_s.value_or(config_.default_timeout_s)});
  if (r.status != ExecStatus::kOk) {
    throw ExecutionFailure(r.status, "script failed (" + std::string(status_name(r.status)) + "): " +
                                         (r.note.empty() ? text::tail(r.stderr_tail, 300) : r.note));
  }
  std::string answer(text::trim(*r.final_print));
  if (answer.empty()) fail(ErrorCode::kProtocol, "script printed nothing");
  return answer;
}

int ExecutionBroker::live_workers() {
  std::lock_guard lock(mutex_);
  int live = checked_out_;
  for (auto& w : idle_) {
    if (w->running()) ++live;
  }
  return live;
}

BrokerStats ExecutionBroker::stats() const { return {submitted_.load(), resolved_.load(), replaced_.load()}; }

}  // namespace chartforge::broker
