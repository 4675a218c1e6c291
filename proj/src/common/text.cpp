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

#include "common/text.hpp"

#include <cstdint>

namespace chartforge::text {
namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Returns the byte length of the whitespace sequence at s[i], or 0.
std::size_t whitespace_at(std::string_view s, std::size_t i) {
  auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return is_ascii_space(c) ? 1 : 0;
  auto byte = [&](std::size_t k) -> std::uint32_t {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  std::uint32_t cp = 0;
  std::size_t len = 0;
  if ((c & 0xE0) == 0xC0) {
    cp = ((c & 0x1Fu) << 6) | (byte(1) & 0x3Fu);
    len = 2;
  } else if ((c & 0xF0) == 0xE0) {
    cp = ((c & 0x0Fu) << 12) | ((byte(1) & 0x3Fu) << 6) | (byte(2) & 0x3Fu);
    len = 3;
  } else {
    return 0;
  }
  switch (cp) {
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return len;
    default:
      return (cp >= 0x2000 && cp <= 0x200A) ? len : 0;
  }
}

}  // namespace

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
  std::size_t e = s.size();
  while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < s.size()) {
    std::size_t ws = whitespace_at(s, i);
    if (ws > 0) {
      if (start != std::string_view::npos) {
        tokens.push_back(s.substr(start, i - start));
        start = std::string_view::npos;
      }
      i += ws;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) tokens.push_back(s.substr(start));
  return tokens;
}

std::string normalize_answer(std::string_view s) {
  std::string out;
  for (std::string_view token : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out += ascii_lower(token);
  }
  return out;
}

std::optional<std::string> last_tagged(std::string_view s, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::size_t close_pos = s.rfind(close);
  if (close_pos == std::string_view::npos) return std::nullopt;
  std::size_t open_pos = s.rfind(open, close_pos);
  if (open_pos == std::string_view::npos) return std::nullopt;
  std::size_t begin = open_pos + open.size();
  return std::string(s.substr(begin, close_pos - begin));
}

std::optional<std::string> first_fenced_block(std::string_view s) {
  std::size_t open = s.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  std::size_t line_end = s.find('\n', open);
  if (line_end == std::string_view::npos) return std::nullopt;
  std::size_t close = s.find("```", line_end + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(line_end + 1, close - line_end - 1));
}

std::optional<std::string> extract_code(std::string_view completion) {
  if (auto block = first_fenced_block(completion)) {
    if (!trim(*block).empty()) return block;
    return std::nullopt;
  }
  std::size_t pos = 0;
  while (pos < completion.size()) {
    std::size_t end = completion.find('\n', pos);
    if (end == std::string_view::npos) end = completion.size();
    std::string_view line = trim(completion.substr(pos, end - pos));
    if (line.starts_with("import ") || (line.starts_with("from ") &&
                                        line.find(" import ") != std::string_view::npos)) {
      return std::string(trim(completion));
    }
    pos = end + 1;
  }
  return std::nullopt;
}

std::string_view last_nonempty_line(std::string_view s) {
  std::size_t end = s.size();
  while (end > 0) {
    std::size_t start = s.rfind('\n', end - 1);
    std::size_t b = (start == std::string_view::npos) ? 0 : start + 1;
    std::string_view line = trim(s.substr(b, end - b));
    if (!line.empty()) return line;
    if (start == std::string_view::npos) break;
    end = start;
  }
  return {};
}

std::string tail(std::string_view s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return std::string(s);
  return std::string(s.substr(s.size() - max_bytes));
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace chartforge::text
