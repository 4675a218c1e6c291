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

#include "qa/answer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "common/error.hpp"
#include "common/text.hpp"

namespace chartforge::qa {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::optional<ParsedNumber> parse_number(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  const std::size_t int_start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  std::size_t digits = i - int_start;
  if (i < s.size() && s[i] == '.') {
    ++i;
    const std::size_t frac_start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    digits += i - frac_start;
  }
  if (digits == 0) return std::nullopt;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    const std::size_t exp_start = j;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j > exp_start) i = j;
  }
  ParsedNumber out;
  out.value = std::strtod(std::string(s.substr(0, i)).c_str(), nullptr);
  if (!std::isfinite(out.value)) return std::nullopt;
  out.suffix = std::string(text::trim(s.substr(i)));
  return out;
}

bool match(std::string_view a, std::string_view b) {
  const std::string na = text::normalize_answer(a);
  const std::string nb = text::normalize_answer(b);
  if (na == nb) return true;
  auto pa = parse_number(na);
  auto pb = parse_number(nb);
  if (!pa || !pb || pa->suffix != pb->suffix) return false;
  const double diff = std::fabs(pa->value - pb->value);
  const double scale = std::max(std::fabs(pa->value), std::fabs(pb->value));
  return diff <= std::max(1e-9, 1e-4 * scale);
}

bool Matcher::operator()(std::string_view a, std::string_view b) const {
  if (match(a, b)) return true;
  return judge_ ? judge_(a, b) : false;
}

std::optional<std::string> extract_final_answer(std::string_view completion) {
  constexpr std::string_view kLead = "Therefore, the final answer is";
  auto lead = completion.rfind(kLead);
  if (lead != std::string_view::npos) {
    if (auto tagged = text::last_tagged(completion.substr(lead), "answer")) {
      return std::string(text::trim(*tagged));
    }
  }
  if (auto tagged = text::last_tagged(completion, "answer")) return std::string(text::trim(*tagged));
  return std::nullopt;
}

FailRate fail_rate(const std::vector<bool>& trace_matches) {
  if (trace_matches.size() != FailRate::kTraces) {
    fail(ErrorCode::kInvalidInput,
         "fail rate needs exactly 3 traces, got " + std::to_string(trace_matches.size()));
  }
  FailRate r;
  r.failures = static_cast<int>(std::count(trace_matches.begin(), trace_matches.end(), false));
  return r;
}

std::string_view bucket_name(Bucket b) {
  switch (b) {
    case Bucket::kRejected: return "rejected";
    case Bucket::kSft: return "sft";
    case Bucket::kRl: return "rl";
  }
  return "rejected";
}

std::vector<Bucket> bucket(const std::vector<BucketInput>& candidates, std::size_t rl_quota) {
  std::vector<Bucket> out(candidates.size(), Bucket::kRejected);
  std::vector<std::size_t> retained;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].consistent && candidates[i].rate.interior()) retained.push_back(i);
  }
  std::stable_sort(retained.begin(), retained.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = candidates[x];
    const auto& b = candidates[y];
    if (a.rate.failures != b.rate.failures) return a.rate.failures > b.rate.failures;
    return a.qa_id < b.qa_id;
  });
  for (std::size_t k = 0; k < retained.size(); ++k) out[retained[k]] = k < rl_quota ? Bucket::kRl : Bucket::kSft;
  return out;
}

}  // namespace chartforge::qa
