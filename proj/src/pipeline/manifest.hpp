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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common/jsonl.hpp"
#include "gateway/types.hpp"
#include "rpe/rpe.hpp"

namespace chartforge::pipeline {

// Stage names accepted in a manifest, in pipeline order.
inline const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> names = {"score",     "filter-hard", "cold-start",  "self-enhance", "synth",
                                                 "qa-synth",  "cot-distill", "cot-filter",  "bucket",       "diagnose"};
  return names;
}

struct ScoringParams {
  int rollouts = 8;
  rpe::RpeOptions rpe;
  double render_timeout_s = 60.0;
};

struct StageSpec {
  std::string name;
  Json config = Json::object();  // stage-specific keys, already validated

  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
};

struct Roles {
  std::string rollout = "rollout";
  std::string embedding = "embedding";
  std::string codegen = "codegen";
  std::vector<std::string> coder;  // one per self-enhancement iteration
  std::optional<std::string> synth_coder;
  std::string qa = "qa";
  std::string distill = "distill";
  std::optional<std::string> judge;
};

struct Manifest {
  std::filesystem::path base_dir;  // directory of the manifest file
  std::int64_t seed = 0;
  std::filesystem::path output_dir;
  std::filesystem::path store_root;
  std::vector<std::string> worker_cmd;
  int worker_pool = 4;
  int max_parallel = 4;
  bool canonical_ledger = false;
  std::map<std::string, std::filesystem::path> prompt_overrides;
  std::map<std::string, gateway::EndpointConfig> endpoints;
  std::map<std::string, std::string> auth_env;  // endpoint -> variable holding its token
  Roles roles;
  ScoringParams scoring;
  std::vector<StageSpec> stages;
  std::vector<std::string> warnings;

  const StageSpec* stage(const std::string& name) const;
  bool needs_broker() const;
};

// Strict parse + validation. Errors are Error(kConfig) with a line/column or
// field path.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& file);

}  // namespace chartforge::pipeline
