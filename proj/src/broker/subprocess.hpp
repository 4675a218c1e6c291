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

#include <sys/types.h>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace chartforge::broker {

// A child process whose stdin/stdout are connected to us over a Unix socket
// pair. The child leads its own process group so kill() reaches anything it
// spawned. stderr is discarded.
class WorkerProcess {
 public:
  explicit WorkerProcess(const std::vector<std::string>& argv);
  ~WorkerProcess();
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  // False when the peer has gone away.
  bool write_line(const std::string& line);

  enum class ReadOutcome { kLine, kEof, kDeadline };
  ReadOutcome read_line(std::chrono::steady_clock::time_point deadline, std::string& line);

  void kill();
  bool running();
  pid_t pid() const { return pid_; }

 private:
  void reap(bool block);

  pid_t pid_ = -1;
  int fd_ = -1;
  bool reaped_ = false;
  std::string buffer_;
};

}  // namespace chartforge::broker
