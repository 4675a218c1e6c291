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
#include <span>
#include <string>

#include "common/digest.hpp"

namespace chartforge::pipeline {

// Blobs keyed by the hex SHA-256 of their bytes, laid out as
// <root>/<first two hex chars>/<key>. Puts are idempotent and atomic.
class ContentStore {
 public:
  explicit ContentStore(std::filesystem::path root);

  std::string put(std::span<const std::uint8_t> bytes);
  // Throws Error(kIo) for a missing key, Error(kIntegrity) when the blob no
  // longer hashes to its key.
  Bytes get(const std::string& key) const;
  bool contains(const std::string& key) const;
  std::filesystem::path path_of(const std::string& key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace chartforge::pipeline
