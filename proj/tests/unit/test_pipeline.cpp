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

#include <atomic>
#include <fstream>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "gateway/wire.hpp"
#include "pipeline/context.hpp"
#include "pipeline/ledger.hpp"
#include "pipeline/manifest.hpp"
#include "pipeline/runner.hpp"
#include "pipeline/store.hpp"
#include "unit/support.hpp"

using namespace chartforge;
using namespace chartforge::pipeline;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInternal;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

void append_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::app | std::ios::binary);
  out << text;
}

std::vector<WorkItem> items(int n) {
  std::vector<WorkItem> out;
  for (int i = 0; i < n; ++i) out.push_back(single("r" + std::to_string(i)));
  return out;
}

ItemFn emit_all(std::atomic<int>& calls) {
  return [&calls](std::size_t i, const std::set<std::string>&) {
    ++calls;
    return std::vector<Outcome>{{"r" + std::to_string(i), Action::kEmitted, "", Json{{"i", i}}, {}}};
  };
}

const char* kMinimalManifest = R"({
  "seed": 3,
  "endpoints": {"qa": {"base_url": "mock:q.json", "model_id": "m"}},
  "stages": [{"name": "bucket"}, {"name": "cot-filter"}]
})";

}  // namespace

TEST_CASE("content store is idempotent and detects tampering") {
  testing::TempDir dir("store");
  ContentStore store(dir.path());
  const Bytes data = {1, 2, 3, 4};
  const std::string key = store.put(data);
  CHECK(key == sha256_hex(data));
  CHECK(store.put(data) == key);
  CHECK(store.contains(key));
  CHECK(store.get(key) == data);
  CHECK(store.path_of(key).parent_path().filename() == key.substr(0, 2));

  append_text(store.path_of(key), "x");
  CHECK(code_of([&] { store.get(key); }) == ErrorCode::kIntegrity);
  CHECK(code_of([&] { store.get(std::string(64, 'a')); }) == ErrorCode::kIo);
  CHECK(code_of([&] { store.get("../etc"); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("ledger persists terminal events and rejects duplicates") {
  testing::TempDir dir("ledger");
  const auto file = dir / "ledger.jsonl";
  {
    RunLedger ledger(file, true);
    ledger.append({"s", "a", Action::kFailed, "timeout", 0, {}, {}});
    ledger.append({"s", "a", Action::kRetained, "", 0, Json{{"x", 1}}, {}});
    ledger.append({"s", "b", Action::kDropped, "low", 0, {}, {}});
    CHECK(code_of([&] { ledger.append({"s", "b", Action::kRetained, "", 0, {}, {}}); }) == ErrorCode::kIntegrity);
    ledger.append({"t", "b", Action::kEmitted, "", 0, {}, {}});
  }
  RunLedger reopened(file, true);
  CHECK(reopened.size() == 4);
  REQUIRE(reopened.terminal("s", "a").has_value());
  CHECK(reopened.terminal("s", "a")->record == Json{{"x", 1}});
  CHECK(reopened.terminal("s", "b")->action == Action::kDropped);
  CHECK_FALSE(reopened.terminal("s", "c").has_value());
  for (const auto& e : reopened.events()) CHECK(e.ts == 0);

  const LedgerEvent e{"s", "z", Action::kDropped, "c", 17, Json{{"k", "v"}}, Json{{"d", 2}}};
  CHECK(to_json(ledger_event_from_json(to_json(e))) == to_json(e));
}

TEST_CASE("a corrupt ledger line halts with its position") {
  testing::TempDir dir("ledger");
  const auto file = dir / "ledger.jsonl";
  { RunLedger(file, true).append({"s", "a", Action::kEmitted, "", 0, {}, {}}); }
  append_text(file, "{\"stage\": \"s\", \"record_id\n");
  const std::string msg = message_of([&] { RunLedger again(file, true); });
  CHECK(msg.find("ledger.jsonl:2") != std::string::npos);
  CHECK(code_of([&] { RunLedger again(file, true); }) == ErrorCode::kIntegrity);
}

TEST_CASE("a duplicate terminal line in the file is an integrity error") {
  testing::TempDir dir("ledger");
  const auto file = dir / "ledger.jsonl";
  { RunLedger(file, true).append({"s", "a", Action::kEmitted, "", 0, {}, {}}); }
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  append_text(file, line + "\n");
  CHECK(code_of([&] { RunLedger again(file, true); }) == ErrorCode::kIntegrity);
}

TEST_CASE("runner commits in item order and resumes after an interruption") {
  testing::TempDir dir("runner");
  std::atomic<int> calls{0};
  StageResult first;
  {
    RunLedger ledger(dir / "ledger.jsonl", true);
    RunContext ctx;
    ctx.ledger = &ledger;
    ctx.budget = std::make_shared<DispatchBudget>(10);
    first = run_stage(ctx, "stage", items(20), emit_all(calls), 4);
    CHECK(first.interrupted);
    CHECK(calls == 10);
    CHECK(first.records.size() == 10);
    const auto events = ledger.events();
    for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].record_id == "r" + std::to_string(i));
  }
  RunLedger ledger(dir / "ledger.jsonl", true);
  RunContext ctx;
  ctx.ledger = &ledger;
  calls = 0;
  const auto second = run_stage(ctx, "stage", items(20), emit_all(calls), 4);
  CHECK_FALSE(second.interrupted);
  CHECK(calls == 10);
  CHECK(second.counts.reused == 10);
  REQUIRE(second.records.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(second.records[i]["i"] == i);

  calls = 0;
  const auto third = run_stage(ctx, "stage", items(20), emit_all(calls), 4);
  CHECK(calls == 0);
  CHECK(third.records == second.records);
}

TEST_CASE("item-level failures are retried on the next run") {
  testing::TempDir dir("runner");
  RunLedger ledger(dir / "ledger.jsonl", true);
  RunContext ctx;
  ctx.ledger = &ledger;
  bool broken = true;
  auto fn = [&](std::size_t i, const std::set<std::string>&) {
    if (broken && i == 1) fail(ErrorCode::kTransport, "connection reset");
    return std::vector<Outcome>{{"r" + std::to_string(i), Action::kRetained, "", Json(i), {}}};
  };
  auto r = run_stage(ctx, "s", items(3), fn, 2);
  CHECK(r.counts.failed == 1);
  CHECK(r.records.size() == 2);
  broken = false;
  r = run_stage(ctx, "s", items(3), fn, 2);
  CHECK(r.counts.reused == 2);
  CHECK(r.records.size() == 3);

  auto fatal = [](std::size_t, const std::set<std::string>&) -> std::vector<Outcome> {
    fail(ErrorCode::kIntegrity, "bad");
  };
  CHECK(code_of([&] { run_stage(ctx, "t", items(3), fatal, 2); }) == ErrorCode::kIntegrity);
}

TEST_CASE("derived seeds are stable and label dependent") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") >= 0);
  const std::string digest = sha256_hex(std::string("7:rollout:x"));
  CHECK(derive_seed(7, "rollout:x") == static_cast<std::int64_t>(std::stoull(digest.substr(0, 12), nullptr, 16)));
}

TEST_CASE("manifest parsing") {
  const auto m = parse_manifest(kMinimalManifest, "/base");
  CHECK(m.seed == 3);
  CHECK(m.output_dir == std::filesystem::path("/base/out"));
  CHECK(m.store_root == std::filesystem::path("/base/out/store"));
  REQUIRE(m.stages.size() == 2);
  CHECK(m.stages[0].name == "cot-filter");
  CHECK(m.stages[1].name == "bucket");
  CHECK_FALSE(m.needs_broker());
}

TEST_CASE("manifest errors") {
  auto msg = [](const std::string& text) { return message_of([&] { parse_manifest(text, "."); }); };
  CHECK(code_of([] { parse_manifest("{\"seed\": 1,\n  \"stages\": [}", "."); }) == ErrorCode::kConfig);
  CHECK(msg("{\"seed\": 1,\n  \"stages\": [}").find("line 2") != std::string::npos);
  CHECK(msg(R"({"stages": []})").find("seed") != std::string::npos);
  CHECK(msg(R"({"seed": 1, "stages": [], "colour": 1})").find("'colour'") != std::string::npos);
  CHECK(msg(R"({"seed": 1, "stages": [{"name": "bucket", "quota": 3}]})").find("'quota'") != std::string::npos);
  CHECK(msg(R"({"seed": 1, "stages": [{"name": "paint"}]})").find("paint") != std::string::npos);
  CHECK_FALSE(msg(R"({"seed": 1, "stages": [{"name": "filter-hard", "rpe_threshold": 1.5}]})").empty());
  CHECK_FALSE(msg(R"({"seed": 1, "stages": [{"name": "cot-distill", "traces": 4}]})").empty());
  CHECK_FALSE(msg(R"({"seed": 1, "stages": [{"name": "bucket"}, {"name": "bucket"}]})").empty());
  CHECK_FALSE(msg(R"({"seed": 1, "stages": [{"name": "cot-distill"}]})").empty());
}

TEST_CASE("a threshold above the attainable range warns") {
  const auto m = parse_manifest(R"({"seed": 1, "stages": [{"name": "filter-hard", "rpe_threshold": 0.4}]})", ".");
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].find("0.4") != std::string::npos);
  CHECK(parse_manifest(R"({"seed": 1, "stages": [{"name": "filter-hard", "rpe_threshold": 0.2}]})", ".")
            .warnings.empty());
}

TEST_CASE("mock regex captures and seed selection") {
  auto ep = testing::mock_endpoint(
      "m", R"js([{"match": {"regex": "id=(\\w+)"}, "respond": {"select": "seed", "texts": ["A{1}-{seed}-{n}", "B{1}"]}}])js",
      {true});
  gateway::ChatRequest req;
  req.messages.push_back(gateway::Message::user("please id=xy7 now"));
  req.seed = 4;
  req.n_samples = 3;
  const auto first = ep->chat(req);
  CHECK(first == std::vector<std::string>{"Axy7-4-0", "Bxy7", "Axy7-4-2"});
  CHECK(ep->chat(req) == first);
  req.seed = 5;
  CHECK(ep->chat(req)[0] == "Bxy7");
  req.messages[0] = gateway::Message::user("no identifier");
  CHECK_THROWS_AS(ep->chat(req), Error);
}
