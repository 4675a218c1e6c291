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

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "common/digest.hpp"

namespace chartforge::gateway {

enum class Role { kSystem, kUser, kAssistant };

std::string_view role_name(Role role);

struct ImagePart {
  Bytes data;
  std::string media_type = "image/png";
};

using ContentPart = std::variant<std::string, ImagePart>;

struct Message {
  Role role = Role::kUser;
  std::vector<ContentPart> parts;

  static Message system(std::string text) { return {Role::kSystem, {std::move(text)}}; }
  static Message user(std::string text) { return {Role::kUser, {std::move(text)}}; }
  bool has_image() const;
};

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  int top_k = 0;  // 0 disables top-k
  int max_tokens = 8192;
};

struct ChatRequest {
  std::vector<Message> messages;
  SamplingParams sampling;
  int n_samples = 1;
  std::optional<std::int64_t> seed;

  bool has_image() const;
};

// One embedding input: raw image bytes or a text.
struct EmbedInput {
  std::variant<std::string, ImagePart> value;

  static EmbedInput text(std::string s) { return {std::move(s)}; }
  static EmbedInput image(Bytes png) { return {ImagePart{std::move(png), "image/png"}}; }
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

struct RetryPolicy {
  int max_attempts = 4;
  int base_backoff_ms = 500;
  int max_backoff_ms = 30000;

  // Delay before retry number `retry` (1-based): base * 2^(retry-1), capped.
  int delay_ms(int retry) const;
};

struct EndpointConfig {
  std::string name;
  std::string base_url;
  std::string model_id;
  std::optional<std::string> auth_token;
  int max_parallel = 4;
  RetryPolicy retry;
  double timeout_s = 600.0;
  int embed_batch_size = 32;
  // Mock-only knobs, ignored for HTTP endpoints.
  bool mock_strict = false;
  int mock_dim = 16;
  std::string mock_call_log;
};

// Sampling presets used by the pipeline stages.
namespace presets {
SamplingParams rollout();     // image -> code reconstructions
SamplingParams coder();       // large-scale chart code sampling
SamplingParams reasoning();   // QA synthesis and CoT distillation
SamplingParams codegen();     // cold-start code inference
}  // namespace presets

}  // namespace chartforge::gateway
