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

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "gateway/transport.hpp"
#include "gateway/types.hpp"

namespace chartforge::gateway {

struct RetryEvent {
  int attempt = 0;  // attempt that failed, 1-based
  int status = 0;
  int delay_ms = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Client for one named endpoint. Shareable across threads; at most
// max_parallel requests are in flight at once. Transient failures (429, 5xx,
// no response) are retried with capped exponential backoff.
class ModelEndpoint {
 public:
  ModelEndpoint(EndpointConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  // Returns exactly request.n_samples completions.
  std::vector<std::string> chat(const ChatRequest& request);

  // One vector per input, in input order; requests are batched by
  // embed_batch_size.
  std::vector<EmbeddingVector> embed(const std::vector<EmbedInput>& inputs);

  const EndpointConfig& config() const { return config_; }
  std::vector<RetryEvent> retry_log() const;
  Transport& transport() { return *transport_; }

 private:
  std::string send(std::string_view route, const std::string& body);

  EndpointConfig config_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::counting_semaphore<> slots_;
  mutable std::mutex mutex_;
  std::vector<RetryEvent> retry_log_;
  std::size_t embedding_dim_ = 0;
};

// Throws Error(kInvalidInput) describing the first violated invariant.
void validate_chat_request(const ChatRequest& request);

// Named endpoints for a run.
class Gateway {
 public:
  void add(std::shared_ptr<ModelEndpoint> endpoint);
  // Throws Error(kConfig) for an unknown name.
  ModelEndpoint& at(const std::string& name) const;
  bool contains(const std::string& name) const { return endpoints_.count(name) > 0; }
  const std::map<std::string, std::shared_ptr<ModelEndpoint>>& endpoints() const { return endpoints_; }

 private:
  std::map<std::string, std::shared_ptr<ModelEndpoint>> endpoints_;
};

}  // namespace chartforge::gateway
