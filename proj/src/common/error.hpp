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

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartforge {

enum class ErrorCode {
  kInvalidInput,
  kConfig,
  kIo,
  kTransport,
  kProtocol,
  kAuth,
  kUnavailable,
  kScriptedGap,
  kSynthesisParse,
  kRenderFailure,
  kIntegrity,
  kInterrupted,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the engine. The code is what callers branch on;
// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Transport failure after retries; carries the last HTTP status (0 when the
// request never produced one, e.g. connect failure or client timeout).
class TransportError : public Error {
 public:
  TransportError(ErrorCode code, int last_status, const std::string& message)
      : Error(code, message), last_status_(last_status) {}

  int last_status() const noexcept { return last_status_; }

 private:
  int last_status_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace chartforge
