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

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge::qa {

// Deterministic answer comparison: trim, case-fold, collapse whitespace; when
// both sides are decimal numbers carrying the same unit suffix, compare with
// relative tolerance 1e-4 (absolute 1e-9 near zero); otherwise compare the
// normalized strings. Symmetric and reflexive.
bool match(std::string_view a, std::string_view b);

struct ParsedNumber {
  double value = 0;
  std::string suffix;  // normalized unit text after the number, possibly empty
};
std::optional<ParsedNumber> parse_number(std::string_view normalized);

// Optional second opinion consulted only when the deterministic rule says no.
using JudgeHook = std::function<bool(std::string_view a, std::string_view b)>;

class Matcher {
 public:
  Matcher() = default;
  explicit Matcher(JudgeHook judge) : judge_(std::move(judge)) {}
  bool operator()(std::string_view a, std::string_view b) const;

 private:
  JudgeHook judge_;
};

// Answer of a reasoning trace: the <answer> tag right after the last
// "Therefore, the final answer is", else the last <answer> tag anywhere.
std::optional<std::string> extract_final_answer(std::string_view completion);

// Exact fail rate r = failures / 3 over exactly three traces.
struct FailRate {
  int failures = 0;
  static constexpr int kTraces = 3;
  double value() const { return static_cast<double>(failures) / kTraces; }
  bool interior() const { return failures > 0 && failures < kTraces; }
};

// Throws Error(kInvalidInput) unless exactly three flags are given.
FailRate fail_rate(const std::vector<bool>& trace_matches);

enum class Bucket { kRejected, kSft, kRl };
std::string_view bucket_name(Bucket b);

struct BucketInput {
  std::string qa_id;
  bool consistent = true;
  FailRate rate;
};

// Rejects inconsistent candidates and r in {0, 1}; the rl_quota candidates
// with the highest r go to rl (ties by qa_id ascending), the rest to sft.
// Result is index-aligned with the input.
std::vector<Bucket> bucket(const std::vector<BucketInput>& candidates, std::size_t rl_quota);

}  // namespace chartforge::qa
