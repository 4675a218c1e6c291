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

#include <httplib.h>

#include "common/error.hpp"
#include "gateway/mock_backend.hpp"
#include "gateway/transport.hpp"

namespace chartforge::gateway {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path, no trailing slash
};

SplitUrl split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) fail(ErrorCode::kConfig, "endpoint URL without scheme: " + url);
  std::size_t path = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, path);
  out.prefix = path == std::string::npos ? "" : url.substr(path);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

}  // namespace

HttpReply HttpTransport::post(std::string_view route, const std::string& body,
                              const EndpointConfig& config) {
  SplitUrl url = split_url(config.base_url);
  httplib::Client client(url.origin);
  const auto seconds = static_cast<time_t>(config.timeout_s);
  const auto micros = static_cast<time_t>((config.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (config.auth_token) headers.emplace("Authorization", "Bearer " + *config.auth_token);
  auto result = client.Post(url.prefix + std::string(route), headers, body, "application/json");
  if (!result) return {0, httplib::to_string(result.error())};
  return {result->status, result->body};
}

std::shared_ptr<Transport> make_transport(const EndpointConfig& config,
                                          const std::filesystem::path& base_dir) {
  if (config.base_url.starts_with("mock:")) {
    std::filesystem::path script = config.base_url.substr(5);
    if (script.is_relative()) script = base_dir / script;
    MockOptions options;
    options.strict = config.mock_strict;
    options.fallback_dim = config.mock_dim;
    if (!config.mock_call_log.empty()) {
      std::filesystem::path log = config.mock_call_log;
      options.call_log = log.is_relative() ? base_dir / log : log;
    }
    return std::make_shared<MockBackend>(MockScript::load(script), options);
  }
  return std::make_shared<HttpTransport>();
}

}  // namespace chartforge::gateway
