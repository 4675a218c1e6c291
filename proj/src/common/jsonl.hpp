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
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chartforge {

using Json = nlohmann::json;

// Compact, key-sorted serialization. nlohmann's default object type is
// ordered by key and doubles print as shortest round-trip decimals, so the
// same value always yields the same bytes.
std::string canonical_dump(const Json& value);

// Reads every line; blank lines are skipped. Throws Error(kIo) when the file
// cannot be opened and Error(kInvalidInput) naming file:line on bad JSON.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Writes atomically (temp file + rename). Parent directories are created.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace chartforge
