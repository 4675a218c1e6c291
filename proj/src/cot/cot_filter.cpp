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

#include "cot/cot_filter.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "common/error.hpp"
#include "common/text.hpp"

namespace chartforge::cot {
namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::size_t count_of(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

}  // namespace

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::kTemplate: return "template";
    case Rule::kLength: return "length";
    case Rule::kNgram: return "ngram";
  }
  return "template";
}

std::optional<std::string_view> think_region(std::string_view text) {
  auto open = text.find(kThinkOpen);
  if (open == std::string_view::npos) return std::nullopt;
  auto body = open + kThinkOpen.size();
  auto close = text.find(kThinkClose, body);
  if (close == std::string_view::npos) return std::nullopt;
  return text.substr(body, close - body);
}

std::optional<RuleFailure> validate_template(std::string_view text) {
  const std::size_t opens = count_of(text, kThinkOpen);
  const std::size_t closes = count_of(text, kThinkClose);
  if (opens != 1 || closes != 1) {
    return RuleFailure{Rule::kTemplate, "expected one <think> and one </think>, found " + std::to_string(opens) +
                                            " and " + std::to_string(closes)};
  }
  const auto close = text.find(kThinkClose);
  if (close < text.find(kThinkOpen)) return RuleFailure{Rule::kTemplate, "</think> precedes <think>"};
  const auto after = close + kThinkClose.size();
  const auto answer = text.find(kAnswerOpen, after);
  if (answer == std::string_view::npos) return RuleFailure{Rule::kTemplate, "no <answer> after </think>"};
  if (text.find(kAnswerClose, answer + kAnswerOpen.size()) == std::string_view::npos) {
    return RuleFailure{Rule::kTemplate, "unterminated <answer>"};
  }
  return std::nullopt;
}

std::optional<RuleFailure> validate_length(std::string_view text, std::size_t min_words) {
  auto think = think_region(text);
  const std::size_t words = think ? text::split_whitespace(*think).size() : 0;
  if (words >= min_words) return std::nullopt;
  return RuleFailure{Rule::kLength, "think region has " + std::to_string(words) + " words, need " +
                                        std::to_string(min_words)};
}

std::optional<NgramHit> find_repeated_ngram(std::string_view text, std::size_t n, std::size_t min_repeats) {
  if (n == 0) fail(ErrorCode::kInvalidInput, "n-gram size must be >= 1");
  const auto tokens = text::split_whitespace(text);
  if (tokens.size() < n) return std::nullopt;

  std::unordered_map<std::string_view, std::uint32_t> vocab;
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (auto t : tokens) ids.push_back(vocab.emplace(t, std::uint32_t(vocab.size())).first->second);

  // Polynomial rolling hash mod 2^64.
  constexpr std::uint64_t kBase = 0x100000001b3ULL;
  std::uint64_t top = 1;
  for (std::size_t i = 1; i < n; ++i) top *= kBase;
  const std::size_t windows = ids.size() - n + 1;
  std::vector<std::uint64_t> hashes(windows);
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < n; ++i) h = h * kBase + ids[i] + 1;
  hashes[0] = h;
  for (std::size_t i = 1; i < windows; ++i) {
    h = (h - (ids[i - 1] + 1) * top) * kBase + ids[i + n - 1] + 1;
    hashes[i] = h;
  }

  auto same = [&](std::size_t a, std::size_t b) {
    return std::equal(ids.begin() + a, ids.begin() + a + n, ids.begin() + b);
  };

  // Each hash bucket holds the distinct windows seen so far (first offset,
  // running count); collisions are split by exact comparison.
  struct Cls {
    std::size_t first;
    std::size_t count;
  };
  std::unordered_map<std::uint64_t, std::vector<Cls>> buckets;
  buckets.reserve(windows);
  for (std::size_t i = 0; i < windows; ++i) {
    auto& classes = buckets[hashes[i]];
    auto it = std::find_if(classes.begin(), classes.end(), [&](const Cls& c) { return same(c.first, i); });
    if (it == classes.end()) {
      classes.push_back({i, 1});
    } else {
      ++it->count;
    }
  }

  std::optional<NgramHit> best;
  for (const auto& [hash, classes] : buckets) {
    for (const Cls& c : classes) {
      if (c.count < min_repeats) continue;
      if (!best || c.count > best->count || (c.count == best->count && c.first < best->first_offset)) {
        best = NgramHit{c.first, c.count};
      }
    }
  }
  return best;
}

bool ngram_repetition_flag(std::string_view text, std::size_t n, std::size_t min_repeats) {
  return find_repeated_ngram(text, n, min_repeats).has_value();
}

FilterVerdict filter_trace(std::string_view text, const FilterOptions& options) {
  FilterVerdict v;
  if (auto f = validate_template(text)) v.failures.push_back(std::move(*f));
  if (auto f = validate_length(text, options.min_words)) v.failures.push_back(std::move(*f));
  if (auto hit = find_repeated_ngram(text, options.ngram_n, options.min_repeats)) {
    v.failures.push_back({Rule::kNgram, std::to_string(options.ngram_n) + "-gram at token " +
                                            std::to_string(hit->first_offset) + " occurs " +
                                            std::to_string(hit->count) + " times"});
  }
  return v;
}

}  // namespace chartforge::cot
