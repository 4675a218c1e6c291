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
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "common/jsonl.hpp"
#include "rpe/rpe.hpp"

namespace chartforge::forge {

enum class ChartSource { kExternal, kColdStart, kCoderSample };
std::string_view source_name(ChartSource s);
ChartSource parse_source(std::string_view name);

// One reconstruction attempt of a scoring campaign.
struct RolloutAttempt {
  std::string status;  // "ok", "no_code", or a broker status
  std::optional<std::string> code_id;
  std::optional<std::string> image_ref;
};

struct ChartRecord {
  std::string chart_id;  // content id of the code, or of the image for external charts
  ChartSource source = ChartSource::kExternal;
  std::optional<std::string> code;
  std::string image_ref;  // store key; empty until rendered
  std::optional<std::vector<double>> embedding;
  std::optional<rpe::RpeScore> rpe;
  std::optional<double> max_sim_to_hard;
  int iteration = 0;
  std::optional<std::string> parent;  // chart the record was derived from
  std::vector<RolloutAttempt> rollouts;
};

Json to_json(const ChartRecord& r);
ChartRecord chart_record_from_json(const Json& j);
std::vector<ChartRecord> chart_records_from_json(const std::vector<Json>& rows);
std::vector<Json> to_json(const std::vector<ChartRecord>& records);

Json to_json(const rpe::RpeScore& s);
rpe::RpeScore rpe_score_from_json(const Json& j);

// I_hard embeddings: the reference set for similarity dedup.
class HardSeedIndex {
 public:
  // Throws Error(kInvalidInput) on a duplicate id or mismatched dimension.
  void add(const std::string& chart_id, std::vector<double> embedding);
  bool contains(const std::string& chart_id) const;
  // Exact brute-force maximum cosine similarity; nullopt for an empty index.
  std::optional<double> max_cosine(const std::vector<double>& v) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<std::pair<std::string, std::vector<double>>>& entries() const { return entries_; }

  std::vector<Json> to_jsonl() const;
  static HardSeedIndex from_jsonl(const std::vector<Json>& rows);

 private:
  std::vector<std::pair<std::string, std::vector<double>>> entries_;
  std::set<std::string> ids_;
};

// Cosine similarity; 0 when either vector has zero norm.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace chartforge::forge
