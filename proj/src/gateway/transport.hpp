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

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "gateway/types.hpp"

namespace chartforge::gateway {

struct HttpReply {
  int status = 0;  // 0: no HTTP response (connect failure, timeout)
  std::string body;
};

// Moves one JSON body to an endpoint route and returns the raw reply.
// Implementations must be safe to call concurrently.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(std::string_view route, const std::string& body,
                         const EndpointConfig& config) = 0;
};

class HttpTransport : public Transport {
 public:
  HttpReply post(std::string_view route, const std::string& body,
                 const EndpointConfig& config) override;
};

// "mock:<script path>" selects the scripted backend (path relative to
// base_dir); anything else is treated as an HTTP base URL.
std::shared_ptr<Transport> make_transport(const EndpointConfig& config,
                                          const std::filesystem::path& base_dir);

}  // namespace chartforge::gateway
