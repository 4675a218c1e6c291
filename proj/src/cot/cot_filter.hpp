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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge::cot {

enum class Rule { kTemplate, kLength, kNgram };
std::string_view rule_name(Rule rule);

struct RuleFailure {
  Rule rule;
  std::string detail;
};

struct FilterVerdict {
  std::vector<RuleFailure> failures;
  bool passed() const { return failures.empty(); }
};

struct FilterOptions {
  std::size_t min_words = 100;
  std::size_t ngram_n = 50;
  std::size_t min_repeats = 3;
};

// Exactly one <think>...</think> region, followed somewhere by a complete
// <answer>...</answer> pair.
std::optional<RuleFailure> validate_template(std::string_view text);

// Content between the first <think> and the following </think>; nullopt when
// the pair is missing.
std::optional<std::string_view> think_region(std::string_view text);

std::optional<RuleFailure> validate_length(std::string_view text, std::size_t min_words = 100);

struct NgramHit {
  std::size_t first_offset = 0;  // token index of the first occurrence
  std::size_t count = 0;         // multiplicity, overlapping occurrences included
};

// Most frequent whitespace-token n-gram among those occurring at least
// min_repeats times (earliest first occurrence on ties). Throws
// Error(kInvalidInput) for n == 0.
std::optional<NgramHit> find_repeated_ngram(std::string_view text, std::size_t n = 50,
                                            std::size_t min_repeats = 3);
bool ngram_repetition_flag(std::string_view text, std::size_t n = 50, std::size_t min_repeats = 3);

FilterVerdict filter_trace(std::string_view text, const FilterOptions& options = {});

}  // namespace chartforge::cot
