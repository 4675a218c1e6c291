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

#include "pipeline/manifest.hpp"

#include <set>

#include "common/error.hpp"
#include "pipeline/log.hpp"

namespace fs = std::filesystem;

namespace chartforge::pipeline {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorCode::kConfig, "manifest " + where + ": " + what);
}

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) bad(where, "unknown field '" + key + "'");
  }
}

double get_number(const Json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) bad(where + "." + key, "expected a number");
  return obj[key].get<double>();
}

long long get_integer(const Json& obj, const std::string& key, const std::string& where, long long fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) bad(where + "." + key, "expected an integer");
  return obj[key].get<long long>();
}

bool get_bool(const Json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) bad(where + "." + key, "expected true or false");
  return obj[key].get<bool>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& where,
                       const std::optional<std::string>& fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    bad(where, "missing required field '" + key + "'");
  }
  if (!obj[key].is_string()) bad(where + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

const std::map<std::string, std::set<std::string>>& stage_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"score", {"input"}},
      {"filter-hard", {"rpe_threshold"}},
      {"cold-start", {}},
      {"self-enhance", {"iterations", "samples_per_iteration", "rpe_threshold", "sim_limit", "grow_index"}},
      {"synth", {"samples", "rpe_threshold"}},
      {"qa-synth", {"scripts_per_chart", "script_timeout_s"}},
      {"cot-distill", {"traces"}},
      {"cot-filter", {"min_words", "ngram_n", "min_repeats"}},
      {"bucket", {"rl_quota"}},
      {"diagnose", {"sample_size"}},
  };
  return keys;
}

gateway::EndpointConfig parse_endpoint(const std::string& name, const Json& j, const fs::path& base,
                                       std::map<std::string, std::string>& auth_env) {
  const std::string where = "endpoints." + name;
  check_keys(j, where,
             {"base_url", "model_id", "auth_env", "max_parallel", "retry", "timeout_s", "embed_batch_size",
              "mock_strict", "mock_dim", "mock_call_log"});
  gateway::EndpointConfig c;
  c.name = name;
  c.base_url = get_string(j, "base_url", where);
  c.model_id = get_string(j, "model_id", where);
  if (j.contains("auth_env")) auth_env[name] = get_string(j, "auth_env", where);
  c.max_parallel = static_cast<int>(get_integer(j, "max_parallel", where, c.max_parallel));
  if (c.max_parallel < 1) bad(where + ".max_parallel", "must be >= 1");
  if (j.contains("retry")) {
    const Json& r = j["retry"];
    check_keys(r, where + ".retry", {"max_attempts", "base_backoff_ms", "max_backoff_ms"});
    c.retry.max_attempts = static_cast<int>(get_integer(r, "max_attempts", where + ".retry", c.retry.max_attempts));
    c.retry.base_backoff_ms =
        static_cast<int>(get_integer(r, "base_backoff_ms", where + ".retry", c.retry.base_backoff_ms));
    c.retry.max_backoff_ms = static_cast<int>(get_integer(r, "max_backoff_ms", where + ".retry", c.retry.max_backoff_ms));
    if (c.retry.max_attempts < 1) bad(where + ".retry.max_attempts", "must be >= 1");
    if (c.retry.base_backoff_ms < 0 || c.retry.max_backoff_ms < 0) bad(where + ".retry", "backoff must be >= 0");
  }
  c.timeout_s = get_number(j, "timeout_s", where, c.timeout_s);
  if (!(c.timeout_s > 0)) bad(where + ".timeout_s", "must be > 0");
  c.embed_batch_size = static_cast<int>(get_integer(j, "embed_batch_size", where, c.embed_batch_size));
  if (c.embed_batch_size < 1) bad(where + ".embed_batch_size", "must be >= 1");
  c.mock_strict = get_bool(j, "mock_strict", where, false);
  c.mock_dim = static_cast<int>(get_integer(j, "mock_dim", where, c.mock_dim));
  if (j.contains("mock_call_log")) c.mock_call_log = resolve(base, get_string(j, "mock_call_log", where)).string();
  return c;
}

void require_unit(const StageSpec& s, const std::string& key, double fallback) {
  const double v = s.number(key, fallback);
  if (v < 0 || v > 1) bad("stage '" + s.name + "'." + key, "must lie in [0, 1]");
}

}  // namespace

double StageSpec::number(const std::string& key, double fallback) const {
  return config.contains(key) ? config[key].get<double>() : fallback;
}
long long StageSpec::integer(const std::string& key, long long fallback) const {
  return config.contains(key) ? config[key].get<long long>() : fallback;
}
bool StageSpec::flag(const std::string& key, bool fallback) const {
  return config.contains(key) ? config[key].get<bool>() : fallback;
}
std::string StageSpec::string(const std::string& key, const std::string& fallback) const {
  return config.contains(key) ? config[key].get<std::string>() : fallback;
}

const StageSpec* Manifest::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool Manifest::needs_broker() const {
  for (const auto& s : stages) {
    if (s.name == "score" || s.name == "cold-start" || s.name == "self-enhance" || s.name == "synth" ||
        s.name == "qa-synth") {
      return true;
    }
  }
  return false;
}

Manifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::kConfig, "manifest line " + std::to_string(line) + ", column " + std::to_string(col) +
                                 ": invalid JSON (" + e.what() + ")");
  }

  check_keys(doc, "root",
             {"description", "seed", "output_dir", "store_root", "worker_cmd", "worker_pool", "max_parallel",
              "canonical_ledger", "prompt_overrides", "endpoints", "roles", "scoring", "stages"});
  Manifest m;
  m.base_dir = base_dir;
  if (!doc.contains("seed")) bad("root", "missing required field 'seed' (runs must be reproducible)");
  m.seed = get_integer(doc, "seed", "root", 0);
  m.output_dir = resolve(base_dir, get_string(doc, "output_dir", "root", std::string("out")));
  m.store_root = doc.contains("store_root") ? resolve(base_dir, get_string(doc, "store_root", "root"))
                                            : m.output_dir / "store";
  if (doc.contains("worker_cmd")) {
    const Json& w = doc["worker_cmd"];
    if (w.is_string()) {
      m.worker_cmd = {w.get<std::string>()};
    } else if (w.is_array() && !w.empty() && std::all_of(w.begin(), w.end(), [](const Json& x) { return x.is_string(); })) {
      m.worker_cmd = w.get<std::vector<std::string>>();
    } else {
      bad("worker_cmd", "expected a string or a nonempty list of strings");
    }
    // A relative program path with a directory part is relative to the manifest.
    if (m.worker_cmd[0].find('/') != std::string::npos) m.worker_cmd[0] = resolve(base_dir, m.worker_cmd[0]).string();
  }
  m.worker_pool = static_cast<int>(get_integer(doc, "worker_pool", "root", m.worker_pool));
  if (m.worker_pool < 1) bad("worker_pool", "must be >= 1");
  m.max_parallel = static_cast<int>(get_integer(doc, "max_parallel", "root", m.max_parallel));
  if (m.max_parallel < 1) bad("max_parallel", "must be >= 1");
  m.canonical_ledger = get_bool(doc, "canonical_ledger", "root", false);

  if (doc.contains("prompt_overrides")) {
    const Json& p = doc["prompt_overrides"];
    if (!p.is_object()) bad("prompt_overrides", "expected an object");
    for (const auto& [name, path] : p.items()) {
      if (!path.is_string()) bad("prompt_overrides." + name, "expected a file path");
      m.prompt_overrides[name] = resolve(base_dir, path.get<std::string>());
    }
  }

  if (doc.contains("endpoints")) {
    if (!doc["endpoints"].is_object()) bad("endpoints", "expected an object");
    for (const auto& [name, e] : doc["endpoints"].items()) m.endpoints[name] = parse_endpoint(name, e, base_dir, m.auth_env);
  }

  if (doc.contains("roles")) {
    const Json& r = doc["roles"];
    check_keys(r, "roles", {"rollout", "embedding", "codegen", "coder", "synth_coder", "qa", "distill", "judge"});
    m.roles.rollout = get_string(r, "rollout", "roles", m.roles.rollout);
    m.roles.embedding = get_string(r, "embedding", "roles", m.roles.embedding);
    m.roles.codegen = get_string(r, "codegen", "roles", m.roles.codegen);
    m.roles.qa = get_string(r, "qa", "roles", m.roles.qa);
    m.roles.distill = get_string(r, "distill", "roles", m.roles.distill);
    if (r.contains("coder")) {
      if (r["coder"].is_string()) {
        m.roles.coder = {r["coder"].get<std::string>()};
      } else if (r["coder"].is_array() &&
                 std::all_of(r["coder"].begin(), r["coder"].end(), [](const Json& x) { return x.is_string(); })) {
        m.roles.coder = r["coder"].get<std::vector<std::string>>();
      } else {
        bad("roles.coder", "expected an endpoint name or a list of them");
      }
    }
    if (r.contains("synth_coder")) m.roles.synth_coder = get_string(r, "synth_coder", "roles");
    if (r.contains("judge")) m.roles.judge = get_string(r, "judge", "roles");
  }

  if (doc.contains("scoring")) {
    const Json& s = doc["scoring"];
    check_keys(s, "scoring", {"rollouts", "zero_valid_policy", "spectrum_mode", "render_timeout_s"});
    m.scoring.rollouts = static_cast<int>(get_integer(s, "rollouts", "scoring", m.scoring.rollouts));
    if (m.scoring.rollouts < 1) bad("scoring.rollouts", "must be >= 1");
    if (s.contains("zero_valid_policy")) {
      auto p = rpe::parse_zero_valid_policy(get_string(s, "zero_valid_policy", "scoring"));
      if (!p) bad("scoring.zero_valid_policy", "expected 'sentinel-max' or 'drop-record'");
      m.scoring.rpe.zero_valid = *p;
    }
    if (s.contains("spectrum_mode")) {
      auto p = rpe::parse_spectrum_mode(get_string(s, "spectrum_mode", "scoring"));
      if (!p) bad("scoring.spectrum_mode", "expected 'gram-eigenvalues' or 'centered-singular-values'");
      m.scoring.rpe.spectrum = *p;
    }
    m.scoring.render_timeout_s = get_number(s, "render_timeout_s", "scoring", m.scoring.render_timeout_s);
    if (!(m.scoring.render_timeout_s > 0)) bad("scoring.render_timeout_s", "must be > 0");
  }

  if (!doc.contains("stages") || !doc["stages"].is_array()) bad("root", "missing 'stages' list");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc["stages"].size(); ++i) {
    const Json& s = doc["stages"][i];
    const std::string where = "stages[" + std::to_string(i) + "]";
    if (!s.is_object()) bad(where, "expected an object");
    StageSpec spec;
    spec.name = get_string(s, "name", where);
    auto keys = stage_keys().find(spec.name);
    if (keys == stage_keys().end()) bad(where + ".name", "unknown stage '" + spec.name + "'");
    if (!seen.insert(spec.name).second) bad(where + ".name", "stage '" + spec.name + "' listed twice");
    std::set<std::string> allowed = keys->second;
    allowed.insert("name");
    check_keys(s, where, allowed);
    for (const auto& [key, value] : s.items()) {
      if (key == "name") continue;
      if (key == "input") {
        if (!value.is_string()) bad(where + ".input", "expected a file path");
        spec.config[key] = resolve(base_dir, value.get<std::string>()).string();
      } else if (key == "grow_index") {
        if (!value.is_boolean()) bad(where + "." + key, "expected true or false");
        spec.config[key] = value;
      } else {
        if (!value.is_number()) bad(where + "." + key, "expected a number");
        spec.config[key] = value;
      }
    }
    m.stages.push_back(std::move(spec));
  }
  // Stages run in pipeline order whatever order they are listed in.
  std::stable_sort(m.stages.begin(), m.stages.end(), [](const StageSpec& a, const StageSpec& b) {
    const auto& order = known_stages();
    return std::find(order.begin(), order.end(), a.name) < std::find(order.begin(), order.end(), b.name);
  });

  if (const StageSpec* s = m.stage("score"); s && !s->config.contains("input")) {
    bad("stage 'score'", "missing required field 'input'");
  }
  for (const auto& s : m.stages) {
    for (const std::string key : {"rpe_threshold", "sim_limit"}) {
      if (s.config.contains(key)) require_unit(s, key, 0);
    }
  }
  if (const StageSpec* s = m.stage("cot-distill"); s && s->integer("traces", 3) != 3) {
    bad("stage 'cot-distill'.traces", "fail rates are defined over exactly 3 traces");
  }
  if (const StageSpec* s = m.stage("self-enhance")) {
    if (s->integer("iterations", 2) < 1) bad("stage 'self-enhance'.iterations", "must be >= 1");
    if (s->integer("samples_per_iteration", 100) < 0) bad("stage 'self-enhance'.samples_per_iteration", "must be >= 0");
  }

  auto need = [&](const std::string& role, const std::string& endpoint) {
    if (!m.endpoints.count(endpoint)) {
      bad("roles." + role, "endpoint '" + endpoint + "' is not defined under 'endpoints'");
    }
  };
  if (m.stage("score") || m.stage("self-enhance") || m.stage("synth")) {
    need("rollout", m.roles.rollout);
    need("embedding", m.roles.embedding);
  }
  if (m.stage("cold-start")) need("codegen", m.roles.codegen);
  for (const auto& c : m.roles.coder) need("coder", c);
  if (m.roles.synth_coder) need("synth_coder", *m.roles.synth_coder);
  if (m.stage("qa-synth")) need("qa", m.roles.qa);
  if (m.stage("cot-distill")) need("distill", m.roles.distill);
  if (m.roles.judge) need("judge", *m.roles.judge);

  const double ceiling = rpe::max_finite_score(static_cast<std::size_t>(m.scoring.rollouts));
  for (const auto& s : m.stages) {
    if (!(s.name == "filter-hard" || s.name == "self-enhance" || s.name == "synth")) continue;
    const double t = s.number("rpe_threshold", 0.4);
    if (t > ceiling) {
      m.warnings.push_back("stage '" + s.name + "': rpe_threshold " + std::to_string(t) +
                           " exceeds the largest finite score reachable with " + std::to_string(m.scoring.rollouts) +
                           " rollouts (" + std::to_string(ceiling) + "); only all-failed (sentinel) charts can pass");
    }
  }
  return m;
}

Manifest load_manifest(const fs::path& file) {
  std::string text;
  try {
    text = read_text_file(file);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, std::string("cannot read manifest: ") + e.what());
  }
  Manifest m = parse_manifest(text, fs::absolute(file).parent_path());
  for (const auto& w : m.warnings) log_warn(w);
  return m;
}

}  // namespace chartforge::pipeline
