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

#include "gateway/wire.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace chartforge::gateway::wire {

std::string data_url(const ImagePart& image) {
  return "data:" + image.media_type + ";base64," + base64_encode(image.data);
}

std::optional<ImagePart> parse_data_url(std::string_view url) {
  if (!url.starts_with("data:")) return std::nullopt;
  std::size_t marker = url.find(";base64,");
  if (marker == std::string_view::npos) return std::nullopt;
  ImagePart part;
  part.media_type = std::string(url.substr(5, marker - 5));
  part.data = base64_decode(url.substr(marker + 8));
  return part;
}

Json chat_request_body(const std::string& model, const ChatRequest& request) {
  Json messages = Json::array();
  for (const Message& m : request.messages) {
    Json msg;
    msg["role"] = role_name(m.role);
    if (m.parts.size() == 1 && std::holds_alternative<std::string>(m.parts[0])) {
      msg["content"] = std::get<std::string>(m.parts[0]);
    } else {
      Json parts = Json::array();
      for (const ContentPart& part : m.parts) {
        if (const auto* t = std::get_if<std::string>(&part)) {
          parts.push_back({{"type", "text"}, {"text", *t}});
        } else {
          parts.push_back({{"type", "image_url"},
                           {"image_url", {{"url", data_url(std::get<ImagePart>(part))}}}});
        }
      }
      msg["content"] = std::move(parts);
    }
    messages.push_back(std::move(msg));
  }
  Json body = {
      {"model", model},
      {"messages", std::move(messages)},
      {"temperature", request.sampling.temperature},
      {"top_p", request.sampling.top_p},
      {"max_tokens", request.sampling.max_tokens},
      {"n", request.n_samples},
  };
  if (request.sampling.top_k > 0) body["top_k"] = request.sampling.top_k;
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

std::vector<std::string> parse_chat_response(const std::string& body, int expected) {
  Json doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array()) {
    fail(ErrorCode::kProtocol, "chat response lacks a choices array");
  }
  std::vector<std::pair<long long, std::string>> indexed;
  long long position = 0;
  for (const Json& choice : doc["choices"]) {
    const Json* content = nullptr;
    if (choice.contains("message") && choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
    if (!content || !content->is_string()) fail(ErrorCode::kProtocol, "chat choice without string content");
    long long index = choice.value("index", position);
    indexed.emplace_back(index, content->get<std::string>());
    ++position;
  }
  if (static_cast<int>(indexed.size()) != expected) {
    fail(ErrorCode::kProtocol, "expected " + std::to_string(expected) + " choices, got " +
                                   std::to_string(indexed.size()));
  }
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> texts;
  texts.reserve(indexed.size());
  for (auto& [_, text] : indexed) texts.push_back(std::move(text));
  return texts;
}

Json embed_request_body(const std::string& model, const std::vector<EmbedInput>& inputs) {
  Json input = Json::array();
  for (const EmbedInput& in : inputs) {
    if (const auto* t = std::get_if<std::string>(&in.value)) {
      input.push_back(*t);
    } else {
      input.push_back(data_url(std::get<ImagePart>(in.value)));
    }
  }
  return {{"model", model}, {"input", std::move(input)}};
}

std::vector<std::vector<double>> parse_embed_response(const std::string& body, std::size_t expected) {
  Json doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
    fail(ErrorCode::kProtocol, "embedding response lacks a data array");
  }
  std::vector<std::pair<long long, std::vector<double>>> indexed;
  long long position = 0;
  for (const Json& item : doc["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array()) {
      fail(ErrorCode::kProtocol, "embedding item without an embedding array");
    }
    std::vector<double> values;
    for (const Json& v : item["embedding"]) {
      if (!v.is_number()) fail(ErrorCode::kProtocol, "non-numeric embedding entry");
      double d = v.get<double>();
      if (!std::isfinite(d)) fail(ErrorCode::kProtocol, "non-finite embedding entry");
      values.push_back(d);
    }
    indexed.emplace_back(item.value("index", position), std::move(values));
    ++position;
  }
  if (indexed.size() != expected) {
    fail(ErrorCode::kProtocol, "expected " + std::to_string(expected) + " embeddings, got " +
                                   std::to_string(indexed.size()));
  }
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<double>> out;
  for (auto& [_, v] : indexed) out.push_back(std::move(v));
  return out;
}

}  // namespace chartforge::gateway::wire
