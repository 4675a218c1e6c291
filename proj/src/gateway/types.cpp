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

#include "gateway/types.hpp"

#include <algorithm>

namespace chartforge::gateway {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

bool Message::has_image() const {
  return std::any_of(parts.begin(), parts.end(),
                     [](const ContentPart& p) { return std::holds_alternative<ImagePart>(p); });
}

bool ChatRequest::has_image() const {
  return std::any_of(messages.begin(), messages.end(), [](const Message& m) { return m.has_image(); });
}

int RetryPolicy::delay_ms(int retry) const {
  long long delay = base_backoff_ms;
  for (int i = 1; i < retry && delay < max_backoff_ms; ++i) delay *= 2;
  return static_cast<int>(std::min<long long>(delay, max_backoff_ms));
}

namespace presets {

SamplingParams rollout() { return {1.0, 1.0, 0, 8192}; }
SamplingParams coder() { return {1.0, 0.95, 20, 8192}; }
SamplingParams reasoning() { return {0.6, 0.95, 20, 32768}; }
SamplingParams codegen() { return {0.6, 0.95, 20, 8192}; }

}  // namespace presets

}  // namespace chartforge::gateway
