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

#include "gateway/endpoint.hpp"

#include <thread>

#include "common/error.hpp"
#include "gateway/wire.hpp"

namespace chartforge::gateway {
namespace {

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& slots) : slots_(slots) { slots_.acquire(); }
  ~SlotGuard() { slots_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& slots_;
};

}  // namespace

void validate_chat_request(const ChatRequest& request) {
  if (request.messages.empty()) fail(ErrorCode::kInvalidInput, "chat request needs at least one message");
  for (const Message& m : request.messages) {
    if (m.parts.empty()) fail(ErrorCode::kInvalidInput, "chat message without content parts");
    if (m.has_image() && m.role != Role::kUser) {
      fail(ErrorCode::kInvalidInput, "image parts are only allowed in user messages");
    }
  }
  if (request.sampling.temperature < 0) fail(ErrorCode::kInvalidInput, "temperature must be >= 0");
  if (!(request.sampling.top_p > 0 && request.sampling.top_p <= 1)) {
    fail(ErrorCode::kInvalidInput, "top_p must lie in (0, 1]");
  }
  if (request.sampling.top_k < 0) fail(ErrorCode::kInvalidInput, "top_k must be >= 0");
  if (request.n_samples < 1) fail(ErrorCode::kInvalidInput, "n_samples must be >= 1");
}

ModelEndpoint::ModelEndpoint(EndpointConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      slots_(config_.max_parallel) {
  if (config_.max_parallel < 1) fail(ErrorCode::kConfig, config_.name + ": max_parallel must be >= 1");
  if (config_.retry.max_attempts < 1) fail(ErrorCode::kConfig, config_.name + ": max_attempts must be >= 1");
  if (config_.embed_batch_size < 1) fail(ErrorCode::kConfig, config_.name + ": embed_batch_size must be >= 1");
}

std::string ModelEndpoint::send(std::string_view route, const std::string& body) {
  int last_status = 0;
  std::string last_body;
  for (int attempt = 1;; ++attempt) {
    HttpReply reply;
    {
      SlotGuard slot(slots_);
      reply = transport_->post(route, body, config_);
    }
    if (reply.status >= 200 && reply.status < 300) return std::move(reply.body);
    last_status = reply.status;
    last_body = std::move(reply.body);
    if (reply.status == 401 || reply.status == 403) {
      throw TransportError(ErrorCode::kAuth, reply.status,
                           config_.name + ": authentication rejected (HTTP " + std::to_string(reply.status) + ")");
    }
    if (!retryable(reply.status)) break;
    if (attempt >= config_.retry.max_attempts) break;
    const int delay = config_.retry.delay_ms(attempt);
    {
      std::lock_guard lock(mutex_);
      retry_log_.push_back({attempt, reply.status, delay});
    }
    sleeper_(std::chrono::milliseconds(delay));
  }
  throw TransportError(ErrorCode::kTransport, last_status,
                       config_.name + ": request failed (last status " + std::to_string(last_status) +
                           "): " + last_body.substr(0, 200));
}

std::vector<std::string> ModelEndpoint::chat(const ChatRequest& request) {
  validate_chat_request(request);
  const std::string body = wire::chat_request_body(config_.model_id, request).dump();
  return wire::parse_chat_response(send(wire::kChatRoute, body), request.n_samples);
}

std::vector<EmbeddingVector> ModelEndpoint::embed(const std::vector<EmbedInput>& inputs) {
  if (inputs.empty()) fail(ErrorCode::kInvalidInput, "embedding request needs at least one input");
  std::vector<EmbeddingVector> out;
  out.reserve(inputs.size());
  const auto batch = static_cast<std::size_t>(config_.embed_batch_size);
  for (std::size_t start = 0; start < inputs.size(); start += batch) {
    std::vector<EmbedInput> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                  inputs.begin() + static_cast<std::ptrdiff_t>(std::min(inputs.size(), start + batch)));
    const std::string body = wire::embed_request_body(config_.model_id, chunk).dump();
    auto vectors = wire::parse_embed_response(send(wire::kEmbedRoute, body), chunk.size());
    for (auto& v : vectors) {
      {
        std::lock_guard lock(mutex_);
        if (embedding_dim_ == 0) embedding_dim_ = v.size();
        if (v.empty() || v.size() != embedding_dim_) {
          fail(ErrorCode::kProtocol, config_.name + ": embedding dimension " + std::to_string(v.size()) +
                                         " differs from " + std::to_string(embedding_dim_));
        }
      }
      out.push_back({std::move(v), config_.model_id});
    }
  }
  return out;
}

std::vector<RetryEvent> ModelEndpoint::retry_log() const {
  std::lock_guard lock(mutex_);
  return retry_log_;
}

void Gateway::add(std::shared_ptr<ModelEndpoint> endpoint) {
  const std::string name = endpoint->config().name;
  endpoints_[name] = std::move(endpoint);
}

ModelEndpoint& Gateway::at(const std::string& name) const {
  auto it = endpoints_.find(name);
  if (it == endpoints_.end()) fail(ErrorCode::kConfig, "unknown endpoint '" + name + "'");
  return *it->second;
}

}  // namespace chartforge::gateway
