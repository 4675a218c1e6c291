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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge::text {

std::string_view trim(std::string_view s);
std::string ascii_lower(std::string_view s);

// Splits on Unicode whitespace (UTF-8 input). Runs of separators never
// produce empty tokens.
std::vector<std::string_view> split_whitespace(std::string_view s);

// Trim, ASCII case-fold and collapse internal whitespace runs to one space.
std::string normalize_answer(std::string_view s);

// Content of the last <tag>...</tag> pair, untrimmed.
std::optional<std::string> last_tagged(std::string_view s, std::string_view tag);

// Body of the first ``` fenced block (language tag line dropped).
std::optional<std::string> first_fenced_block(std::string_view s);

// Chart code from a completion: first fenced block, else the whole completion
// when it carries an import statement, else nothing.
std::optional<std::string> extract_code(std::string_view completion);

std::string_view last_nonempty_line(std::string_view s);

// Last max_bytes bytes of s.
std::string tail(std::string_view s, std::size_t max_bytes);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace chartforge::text
