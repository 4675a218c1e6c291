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

#include "prompts/catalog.hpp"

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace chartforge::prompts {

std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, value] : values) {
        if (tmpl.compare(i, key.size(), key) == 0) {
          out += value;
          i += key.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

PromptCatalog::PromptCatalog() {
  for (const auto& [name, text] : packaged_templates()) templates_.emplace(name, text);
}

void PromptCatalog::override_text(const std::string& name, std::string text) {
  auto it = templates_.find(name);
  if (it == templates_.end()) fail(ErrorCode::kConfig, "unknown prompt template '" + name + "'");
  it->second = std::move(text);
}

void PromptCatalog::override_from_file(const std::string& name, const std::filesystem::path& file) {
  override_text(name, read_text_file(file));
}

const std::string& PromptCatalog::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) fail(ErrorCode::kConfig, "unknown prompt template '" + std::string(name) + "'");
  return it->second;
}

std::string PromptCatalog::render(std::string_view name,
                                  const std::map<std::string, std::string, std::less<>>& values) const {
  return fill(get(name), values);
}

std::vector<std::string> PromptCatalog::names() const {
  std::vector<std::string> out;
  for (const auto& [name, text] : templates_) out.push_back(name);
  return out;
}

}  // namespace chartforge::prompts
