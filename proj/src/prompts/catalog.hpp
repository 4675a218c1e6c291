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
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge::prompts {

// Template names (file stems under prompts/).
inline constexpr std::string_view kRollout = "rollout";
inline constexpr std::string_view kCodegen = "codegen";
inline constexpr std::string_view kCoderSystem = "coder_system";
inline constexpr std::string_view kQaScript = "qa_script";
inline constexpr std::string_view kQaQuestion = "qa_question";
inline constexpr std::string_view kQaConsistency = "qa_consistency";
inline constexpr std::string_view kCotDistill = "cot_distill";

// Placeholders as they appear in the templates.
inline constexpr std::string_view kChartCode = "{chart code}";
inline constexpr std::string_view kScriptCode = "{generated_python_code}";
inline constexpr std::string_view kGeneratedQuestion = "{generated_question}";
inline constexpr std::string_view kQuestion = "{question}";

// Compiled-in copies of prompts/*.txt (generated at build time).
const std::map<std::string, std::string>& packaged_templates();

// Single-pass substitution: text inserted for one placeholder is never
// scanned for further placeholders.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values);

class PromptCatalog {
 public:
  PromptCatalog();

  // Replaces a template with the contents of a file. Throws Error(kConfig)
  // for unknown names and Error(kIo) for unreadable files.
  void override_from_file(const std::string& name, const std::filesystem::path& file);
  void override_text(const std::string& name, std::string text);

  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const std::map<std::string, std::string, std::less<>>& values) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace chartforge::prompts
