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
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "broker/protocol.hpp"
#include "broker/subprocess.hpp"
#include "common/error.hpp"

namespace chartforge::broker {

inline constexpr std::size_t kTailBytes = 8 * 1024;
inline constexpr std::size_t kMaxCodeBytes = 1024 * 1024;

struct ExecutionResult {
  std::string task_id;
  TaskKind kind = TaskKind::kScript;
  ExecStatus status = ExecStatus::kWorkerCrash;
  std::string stdout_tail;
  std::string stderr_tail;
  std::optional<Bytes> artifact;           // render + ok: decodable PNG
  std::optional<std::string> final_print;  // script + ok: last nonempty stdout line
  long long wall_ms = 0;
  std::string note;  // broker-side explanation for non-ok outcomes
};

// A render or script that did not finish with status ok.
class ExecutionFailure : public Error {
 public:
  ExecutionFailure(ExecStatus status, const std::string& message)
      : Error(ErrorCode::kRenderFailure, message), status_(status) {}
  ExecStatus status() const noexcept { return status_; }

 private:
  ExecStatus status_;
};

struct BrokerConfig {
  std::vector<std::string> worker_cmd;
  int pool_size = 2;
  double grace_s = 2.0;
  double default_timeout_s = kDefaultTimeoutS;
};

struct BrokerStats {
  long long submitted = 0;
  long long resolved = 0;
  long long replaced_workers = 0;
};

// Fixed-size pool of sandbox workers, one task in flight per worker. submit()
// blocks until a worker is free and the task resolves or its deadline
// (timeout_s + grace) passes; a worker that times out, crashes or breaks
// protocol is killed and replaced before submit() returns. Thread-safe.
class ExecutionBroker {
 public:
  explicit ExecutionBroker(BrokerConfig config);
  ~ExecutionBroker();
  ExecutionBroker(const ExecutionBroker&) = delete;
  ExecutionBroker& operator=(const ExecutionBroker&) = delete;

  ExecutionResult submit(const ExecutionTask& task);

  // PNG bytes of a successful render; ExecutionFailure otherwise.
  Bytes render_chart(const std::string& code, std::optional<double> timeout_s = {});
  // Trimmed final printed line; ExecutionFailure on non-ok, Error(kProtocol)
  // when the script printed nothing.
  std::string run_script(const std::string& code, std::optional<double> timeout_s = {});

  void shutdown();
  int live_workers();
  BrokerStats stats() const;
  const BrokerConfig& config() const { return config_; }

 private:
  std::unique_ptr<WorkerProcess> acquire();
  void release(std::unique_ptr<WorkerProcess> worker);
  std::string next_task_id();

  BrokerConfig config_;
  mutable std::mutex mutex_;
  std::condition_variable available_;
  std::vector<std::unique_ptr<WorkerProcess>> idle_;
  int checked_out_ = 0;
  bool shut_down_ = false;
  std::atomic<long long> submitted_{0};
  std::atomic<long long> resolved_{0};
  std::atomic<long long> replaced_{0};
  std::atomic<long long> task_counter_{0};
};

}  // namespace chartforge::broker
