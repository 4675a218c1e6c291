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
#include <filesystem>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "common/jsonl.hpp"
#include "gateway/transport.hpp"

namespace chartforge::gateway {

// One scripted rule. Requests are matched against their "match text": every
// text part plus the decoded bytes of every image part (chat), or one input's
// text/decoded bytes (embeddings). `index` matches the n-th request (0-based)
// seen on that route. `regex` capture groups can be spliced into responses.
//
// Response texts may contain {seed} (the request seed, 0 when absent), {n}
// (the choice index) and {1}..{9} (regex captures). With select "seed" the
// choice for completion i is texts[(seed + i) mod size] instead of the
// rule's running cursor, so the reply depends only on the request.
struct MockRule {
  std::optional<std::string> substring;
  std::optional<std::string> regex_source;
  std::optional<std::regex> regex;
  std::optional<long long> index;
  bool select_by_seed = false;
  std::optional<std::string> route;  // "chat" | "embed"; inferred from respond when absent

  std::vector<std::string> texts;
  std::vector<std::vector<double>> vectors;
  std::optional<int> http_status;
  int delay_ms = 0;
  int repeat = 0;  // uses before the rule is exhausted; 0 = unlimited
};

class MockScript {
 public:
  static MockScript parse(const Json& doc);
  static MockScript load(const std::filesystem::path& path);

  const std::vector<MockRule>& rules() const { return rules_; }

 private:
  std::vector<MockRule> rules_;
};

struct MockOptions {
  bool strict = false;    // unmatched request -> scripted-gap error
  int fallback_dim = 16;  // dimension of content-derived fallback vectors
  std::filesystem::path call_log;  // optional; one line appended per request
};

struct MockStats {
  long long chat_requests = 0;
  long long embed_requests = 0;
  int max_in_flight = 0;
};

// In-process endpoint speaking the chat/embedding wire protocol from a
// script. Deterministic for a fixed script and request sequence per rule.
class MockBackend : public Transport {
 public:
  explicit MockBackend(MockScript script, MockOptions options = {});

  HttpReply post(std::string_view route, const std::string& body,
                 const EndpointConfig& config) override;

  MockStats stats() const;
  std::vector<Json> request_log() const;

  // Content-derived unit vector used when no rule matches in lenient mode.
  static std::vector<double> fallback_vector(std::string_view content, int dim);

 private:
  struct RuleState {
    MockRule rule;
    long long uses = 0;
    long long cursor = 0;
  };

  HttpReply handle_chat(const Json& request, long long index, int& delay_ms);
  HttpReply handle_embed(const Json& request, long long index, int& delay_ms);
  // First non-exhausted rule, in script order, serving `route` and matching.
  RuleState* find_rule(std::string_view route, const std::string& match_text, long long index,
                       std::smatch* groups = nullptr);
  void append_call_log(std::string_view route, const std::string& body);

  MockOptions options_;
  mutable std::mutex mutex_;
  std::vector<RuleState> rules_;
  long long chat_count_ = 0;
  long long embed_count_ = 0;
  std::vector<Json> log_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

// Counts lines of a mock call log (0 when the file does not exist).
long long count_mock_calls(const std::filesystem::path& call_log);

}  // namespace chartforge::gateway
