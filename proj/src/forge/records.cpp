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

#include "forge/records.hpp"

#include <cmath>

#include "common/error.hpp"

namespace chartforge::forge {

std::string_view source_name(ChartSource s) {
  switch (s) {
    case ChartSource::kExternal: return "external_corpus";
    case ChartSource::kColdStart: return "cold_start";
    case ChartSource::kCoderSample: return "coder_sample";
  }
  return "external_corpus";
}

ChartSource parse_source(std::string_view name) {
  if (name == "external_corpus") return ChartSource::kExternal;
  if (name == "cold_start") return ChartSource::kColdStart;
  if (name == "coder_sample") return ChartSource::kCoderSample;
  fail(ErrorCode::kInvalidInput, "unknown chart source '" + std::string(name) + "'");
}

Json to_json(const rpe::RpeScore& s) {
  Json j = {{"sentinel", s.sentinel},
            {"valid_count", s.valid_count},
            {"attempted_count", s.attempted_count},
            {"few_valid", s.few_valid()}};
  j["value"] = s.sentinel ? Json(nullptr) : Json(s.value);
  return j;
}

rpe::RpeScore rpe_score_from_json(const Json& j) {
  rpe::RpeScore s;
  s.sentinel = j.value("sentinel", false);
  s.valid_count = j.at("valid_count").get<std::size_t>();
  s.attempted_count = j.at("attempted_count").get<std::size_t>();
  if (s.sentinel) {
    s.value = std::numeric_limits<double>::infinity();
  } else {
    s.value = j.at("value").get<double>();
  }
  return s;
}

Json to_json(const ChartRecord& r) {
  Json j = {{"chart_id", r.chart_id},
            {"source", source_name(r.source)},
            {"image_ref", r.image_ref},
            {"iteration", r.iteration}};
  if (r.code) j["code"] = *r.code;
  if (r.embedding) j["embedding"] = *r.embedding;
  if (r.rpe) j["rpe"] = to_json(*r.rpe);
  if (r.max_sim_to_hard) j["max_sim_to_hard"] = *r.max_sim_to_hard;
  if (r.parent) j["parent"] = *r.parent;
  if (!r.rollouts.empty()) {
    Json rows = Json::array();
    for (const auto& a : r.rollouts) {
      Json row = {{"status", a.status}};
      if (a.code_id) row["code_id"] = *a.code_id;
      if (a.image_ref) row["image_ref"] = *a.image_ref;
      rows.push_back(std::move(row));
    }
    j["rollouts"] = std::move(rows);
  }
  return j;
}

ChartRecord chart_record_from_json(const Json& j) {
  try {
    ChartRecord r;
    r.chart_id = j.at("chart_id").get<std::string>();
    r.source = parse_source(j.value("source", "external_corpus"));
    r.image_ref = j.value("image_ref", "");
    r.iteration = j.value("iteration", 0);
    if (j.contains("code")) r.code = j["code"].get<std::string>();
    if (j.contains("embedding")) r.embedding = j["embedding"].get<std::vector<double>>();
    if (j.contains("rpe")) r.rpe = rpe_score_from_json(j["rpe"]);
    if (j.contains("max_sim_to_hard")) r.max_sim_to_hard = j["max_sim_to_hard"].get<double>();
    if (j.contains("parent")) r.parent = j["parent"].get<std::string>();
    if (j.contains("rollouts")) {
      for (const auto& row : j["rollouts"]) {
        RolloutAttempt a;
        a.status = row.at("status").get<std::string>();
        if (row.contains("code_id")) a.code_id = row["code_id"].get<std::string>();
        if (row.contains("image_ref")) a.image_ref = row["image_ref"].get<std::string>();
        r.rollouts.push_back(std::move(a));
      }
    }
    return r;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("malformed chart record: ") + e.what());
  }
}

std::vector<ChartRecord> chart_records_from_json(const std::vector<Json>& rows) {
  std::vector<ChartRecord> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(chart_record_from_json(row));
  return out;
}

std::vector<Json> to_json(const std::vector<ChartRecord>& records) {
  std::vector<Json> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_json(r));
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::kInvalidInput, "cosine of vectors with different dimensions");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void HardSeedIndex::add(const std::string& chart_id, std::vector<double> embedding) {
  if (contains(chart_id)) fail(ErrorCode::kInvalidInput, "hard index already holds " + chart_id);
  if (!entries_.empty() && entries_.front().second.size() != embedding.size()) {
    fail(ErrorCode::kInvalidInput, "hard index dimension mismatch for " + chart_id);
  }
  ids_.insert(chart_id);
  entries_.emplace_back(chart_id, std::move(embedding));
}

bool HardSeedIndex::contains(const std::string& chart_id) const { return ids_.count(chart_id) > 0; }

std::optional<double> HardSeedIndex::max_cosine(const std::vector<double>& v) const {
  std::optional<double> best;
  for (const auto& [id, e] : entries_) {
    const double c = cosine(v, e);
    if (!best || c > *best) best = c;
  }
  return best;
}

std::vector<Json> HardSeedIndex::to_jsonl() const {
  std::vector<Json> rows;
  for (const auto& [id, v] : entries_) rows.push_back({{"chart_id", id}, {"embedding", v}});
  return rows;
}

HardSeedIndex HardSeedIndex::from_jsonl(const std::vector<Json>& rows) {
  HardSeedIndex index;
  for (const auto& row : rows) {
    index.add(row.at("chart_id").get<std::string>(), row.at("embedding").get<std::vector<double>>());
  }
  return index;
}

}  // namespace chartforge::forge
