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

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "chartforge/chartforge.h"

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  cf_free_string(s);
  return out;
}

struct Scratch {
  fs::path path;
  Scratch() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cf-capi-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write(const fs::path& file, const std::string& text) { std::ofstream(file) << text; }

int cli(const std::string& args) {
  const std::string cmd = std::string(CHARTFORGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(cf_version()).size() > 0);
  CHECK(std::string(cf_status_name(CF_OK)) == "ok");
  CHECK(std::string(cf_status_name(CF_ERR_CONFIG)) == "config");
  CHECK(std::string(cf_status_name(CF_ERR_INTEGRITY)) == "integrity");
}

TEST_CASE("rpe through the C API") {
  const double eye[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  double v = -1;
  int sentinel = -1, dropped = -1;
  REQUIRE(cf_rpe(8, eye, 3, 3, CF_ZERO_VALID_SENTINEL, &v, &sentinel, &dropped) == CF_OK);
  CHECK(std::fabs(v - std::log(2.0) / 3.0) < 1e-9);
  CHECK(sentinel == 0);

  REQUIRE(cf_rpe(8, nullptr, 0, 3, CF_ZERO_VALID_SENTINEL, &v, &sentinel, &dropped) == CF_OK);
  CHECK(sentinel == 1);
  CHECK(std::isinf(v));
  REQUIRE(cf_rpe(8, nullptr, 0, 3, CF_ZERO_VALID_DROP, &v, &sentinel, &dropped) == CF_OK);
  CHECK(dropped == 1);

  CHECK(cf_rpe(8, eye, 3, 0, CF_ZERO_VALID_SENTINEL, &v, &sentinel, &dropped) == CF_ERR_INVALID_INPUT);
  CHECK(std::string(cf_last_error()).find("dim") != std::string::npos);
  const double bad[3] = {NAN, 0, 0};
  CHECK(cf_rpe(8, bad, 1, 3, CF_ZERO_VALID_SENTINEL, &v, &sentinel, &dropped) == CF_ERR_INVALID_INPUT);

  double sigma[3];
  double h = 0;
  REQUIRE(cf_gram_spectrum(eye, 3, 3, sigma, &h) == CF_OK);
  CHECK(std::fabs(h - std::log(2.0)) < 1e-12);
  CHECK(sigma[2] == 0.0);
}

TEST_CASE("text helpers through the C API") {
  int flagged = -1;
  REQUIRE(cf_ngram_flag("a b c a b c a b c", 3, 3, &flagged) == CF_OK);
  CHECK(flagged == 1);
  REQUIRE(cf_ngram_flag("a b c a b c", 3, 3, &flagged) == CF_OK);
  CHECK(flagged == 0);
  CHECK(cf_ngram_flag("x", 0, 3, &flagged) == CF_ERR_INVALID_INPUT);

  char* verdict = nullptr;
  REQUIRE(cf_filter_trace("no template", 100, 50, 3, &verdict) == CF_OK);
  const Json v = Json::parse(take(verdict));
  CHECK(v["passed"] == false);
  CHECK(v["failures"][0]["rule"] == "template");

  CHECK(cf_answers_match("3.14159", "3.1416") == 1);
  CHECK(cf_answers_match("1", "2") == 0);
  CHECK(cf_answers_match(nullptr, "2") == 0);

  const double same[6] = {1, 2, 1, 2, 1, 2};
  double spread = -1;
  REQUIRE(cf_embedding_spread(same, 3, 2, 1000, 0, &spread) == CF_OK);
  CHECK(std::fabs(spread) < 1e-12);
}

TEST_CASE("commands and contexts") {
  char* out = nullptr;
  CHECK(cf_command(nullptr, "score", "{}", &out) == CF_ERR_CONFIG);
  CHECK(cf_command(nullptr, "nope", "{}", &out) == CF_ERR_CONFIG);
  CHECK(cf_command(nullptr, "bucket", "[1]", &out) == CF_ERR_CONFIG);

  Scratch s;
  write(s.path / "bad.json", "{\"seed\": 1,\n \"extra\": true, \"stages\": []}");
  cf_context* ctx = nullptr;
  CHECK(cf_context_open((s.path / "bad.json").c_str(), nullptr, &ctx) == CF_ERR_CONFIG);
  CHECK(ctx == nullptr);
  CHECK(std::string(cf_last_error()).find("extra") != std::string::npos);

  write(s.path / "m.json", R"({"seed": 9, "output_dir": "o", "stages": [{"name": "cot-filter"}, {"name": "bucket"}]})");
  CHECK(cf_context_open((s.path / "m.json").c_str(), R"({"bogus": 1})", &ctx) == CF_ERR_CONFIG);
  char* plan = nullptr;
  REQUIRE(cf_validate_manifest((s.path / "m.json").c_str(), &plan) == CF_OK);
  CHECK(Json::parse(take(plan)).dump().find("bucket") != std::string::npos);
  CHECK_FALSE(fs::exists(s.path / "o"));

  write(s.path / "cands.jsonl", "");
  REQUIRE(cf_context_open((s.path / "m.json").c_str(), "{}", &ctx) == CF_OK);
  const std::string args = Json{{"in", (s.path / "cands.jsonl").string()}, {"out_dir", (s.path / "b").string()}}.dump();
  REQUIRE(cf_command(ctx, "bucket", args.c_str(), &out) == CF_OK);
  CHECK(Json::parse(take(out))["sft"] == 0);
  cf_context_close(ctx);
  CHECK(fs::exists(s.path / "b" / "rl.jsonl"));
}

TEST_CASE("CLI exit codes") {
  Scratch s;
  CHECK(cli("") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("--help") == 0);
  CHECK(cli("filter-hard --in x") == 2);

  write(s.path / "bad.json", "{\"seed\": 1, \"stages\": [");
  CHECK(cli("run " + (s.path / "bad.json").string()) == 2);

  write(s.path / "m.json", R"({"seed": 9, "output_dir": "o",
    "endpoints": {"rollout": {"base_url": "mock:r.json", "model_id": "r"},
                  "embedding": {"base_url": "mock:e.json", "model_id": "e"}},
    "stages": [{"name": "score", "input": "c.jsonl"}]})");
  CHECK(cli("--dry-run run " + (s.path / "m.json").string()) == 0);
  write(s.path / "r.json", "[]");
  write(s.path / "e.json", "[]");
  CHECK(cli("run " + (s.path / "m.json").string()) == 2);  // no worker command

  CHECK(cli("validate " + s.path.string()) == 1);
  write(s.path / "sft.jsonl", "");
  write(s.path / "rl.jsonl", "");
  CHECK(cli("validate " + s.path.string()) == 0);
  write(s.path / "rl.jsonl", "{\"qa_id\": \"x\"}\n");
  CHECK(cli("validate " + s.path.string()) == 1);
}
