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

#include "pipeline/store.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "common/error.hpp"

namespace fs = std::filesystem;

namespace chartforge::pipeline {
namespace {

bool valid_key(const std::string& key) {
  if (key.size() != 64) return false;
  for (char c : key) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

ContentStore::ContentStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create store root " + root_.string() + ": " + ec.message());
}

fs::path ContentStore::path_of(const std::string& key) const {
  if (!valid_key(key)) fail(ErrorCode::kInvalidInput, "malformed store key '" + key + "'");
  return root_ / key.substr(0, 2) / key;
}

bool ContentStore::contains(const std::string& key) const { return fs::exists(path_of(key)); }

std::string ContentStore::put(std::span<const std::uint8_t> bytes) {
  const std::string key = sha256_hex(bytes);
  const fs::path target = path_of(key);
  if (fs::exists(target)) return key;
  fs::create_directories(target.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  fs::path tmp = target;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::kIo, "cannot publish " + target.string() + ": " + ec.message());
  return key;
}

Bytes ContentStore::get(const std::string& key) const {
  const fs::path p = path_of(key);
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "store has no blob " + key);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (sha256_hex(data) != key) fail(ErrorCode::kIntegrity, "store blob " + key + " does not match its key");
  return data;
}

}  // namespace chartforge::pipeline
