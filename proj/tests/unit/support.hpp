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
#include <memory>
#include <random>
#include <string>

#include "gateway/endpoint.hpp"
#include "gateway/mock_backend.hpp"

namespace chartforge::testing {

// Fresh directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cf") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::shared_ptr<gateway::ModelEndpoint> mock_endpoint(const std::string& name, const std::string& script,
                                                             gateway::MockOptions options = {}) {
  gateway::EndpointConfig c;
  c.name = name;
  c.base_url = "mock:inline";
  c.model_id = name;
  c.max_parallel = 4;
  c.retry = {1, 1, 1};
  auto backend = std::make_shared<gateway::MockBackend>(gateway::MockScript::parse(Json::parse(script)), options);
  return std::make_shared<gateway::ModelEndpoint>(c, backend, [](std::chrono::milliseconds) {});
}

}  // namespace chartforge::testing
