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

#include <string>
#include <vector>

#include "common/jsonl.hpp"
#include "gateway/types.hpp"

// Chat-completions-compatible JSON bodies. Images travel as base64 data URLs
// inside image_url content parts.
namespace chartforge::gateway::wire {

inline constexpr std::string_view kChatRoute = "/chat/completions";
inline constexpr std::string_view kEmbedRoute = "/embeddings";

std::string data_url(const ImagePart& image);
// Returns nullopt when `url` is not a base64 data URL.
std::optional<ImagePart> parse_data_url(std::string_view url);

Json chat_request_body(const std::string& model, const ChatRequest& request);
// Throws Error(kProtocol) unless the body holds exactly `expected` string
// completions.
std::vector<std::string> parse_chat_response(const std::string& body, int expected);

Json embed_request_body(const std::string& model, const std::vector<EmbedInput>& inputs);
std::vector<std::vector<double>> parse_embed_response(const std::string& body, std::size_t expected);

}  // namespace chartforge::gateway::wire
