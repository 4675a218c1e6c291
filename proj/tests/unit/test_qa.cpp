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

#include <fstream>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/png.hpp"
#include "pipeline/ledger.hpp"
#include "pipeline/store.hpp"
#include "prompts/catalog.hpp"
#include "qa/answer.hpp"
#include "qa/qa_forge.hpp"
#include "unit/support.hpp"

using namespace chartforge;
using namespace chartforge::qa;

namespace {

std::vector<bool> pattern(int bits) { return {(bits & 4) != 0, (bits & 2) != 0, (bits & 1) != 0}; }

std::string pattern_name(int bits) {
  std::string s;
  for (bool b : pattern(bits)) s += b ? '1' : '0';
  return s;
}

std::string trace(const std::string& answer) {
  return "<think>\nlook at the bars\n</think>\nTherefore, the final answer is <answer>" + answer + "</answer>";
}

QaCandidate candidate(const std::string& id, int failures, bool consistent = true) {
  QaCandidate c;
  c.qa_id = id;
  c.chart_id = "chart-" + id;
  c.image_ref = "img";
  c.question = "q " + id;
  c.answer_py = "42";
  c.consistency_answer = "42";
  c.consistent = consistent;
  for (int j = 0; j < 3; ++j) {
    CotTrace t;
    t.raw_text = trace(j < 3 - failures ? "42" : "7");
    t.matches_gt = j < 3 - failures;
    c.traces.push_back(t);
  }
  c.rate = FailRate{failures};
  return c;
}

void write_rows(const std::filesystem::path& file, const std::vector<Json>& rows) { write_jsonl(file, rows); }

}  // namespace

TEST_CASE("answer matching") {
  CHECK(match("Apple ", "apple"));
  CHECK(match("  New   York", "new york"));
  CHECK(match("3.14159", "3.1416"));
  CHECK(match("1e3", "1000"));
  CHECK(match("50%", "50 %"));
  CHECK(match("0", "0.0000000001"));
  CHECK_FALSE(match("12", "13"));
  CHECK_FALSE(match("12 kg", "12 lb"));
  CHECK_FALSE(match("3.14", "3.15"));
  CHECK_FALSE(match("north", "south"));
  for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{{"2.5", "2.50"}, {"x", "X "}, {"1", "2"}}) {
    CHECK(match(a, b) == match(b, a));
    CHECK(match(a, a));
  }
}

TEST_CASE("judge hook is consulted only after a deterministic miss") {
  int calls = 0;
  Matcher m([&](std::string_view, std::string_view) {
    ++calls;
    return true;
  });
  CHECK(m("5", "5.0"));
  CHECK(calls == 0);
  CHECK(m("five", "5"));
  CHECK(calls == 1);
  CHECK_FALSE(Matcher{}("five", "5"));
}

TEST_CASE("final answer extraction") {
  CHECK(extract_final_answer(trace("12")) == "12");
  CHECK(extract_final_answer("<answer>1</answer> then <answer>2</answer>") == "2");
  CHECK(extract_final_answer("<answer>9</answer> Therefore, the final answer is <answer> 3 </answer>") == "3");
  CHECK_FALSE(extract_final_answer("no tags here").has_value());
}

TEST_CASE("fail rate is exact over every trace pattern") {
  for (int bits = 0; bits < 8; ++bits) {
    const FailRate r = fail_rate(pattern(bits));
    const int matches = __builtin_popcount(bits);
    CHECK(r.failures == 3 - matches);
    CHECK(r.value() == static_cast<double>(3 - matches) / 3.0);
    CHECK(r.interior() == (matches == 1 || matches == 2));
  }
  CHECK_THROWS_AS(fail_rate({true, false}), Error);
  CHECK_THROWS_AS(fail_rate({true, false, true, true}), Error);
}

TEST_CASE("bucketing keeps the strict interior and fills rl by rate then id") {
  std::vector<BucketInput> in;
  for (int bits = 0; bits < 8; ++bits) in.push_back({"q" + pattern_name(bits), true, fail_rate(pattern(bits))});
  in.push_back({"qbad", false, FailRate{1}});
  for (std::size_t quota : {0u, 1u, 2u, 3u, 4u, 6u, 10u}) {
    const auto out = bucket(in, quota);
    std::size_t rl = 0, sft = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (!in[i].consistent || !in[i].rate.interior()) {
        CHECK(out[i] == Bucket::kRejected);
        continue;
      }
      CHECK(out[i] != Bucket::kRejected);
      (out[i] == Bucket::kRl ? rl : sft)++;
    }
    CHECK(rl == std::min<std::size_t>(quota, 6));
    CHECK(rl + sft == 6);
  }
  // Two failures (one match): q001, q010, q100. Quota 2 takes the first two ids.
  const auto out = bucket(in, 2);
  CHECK(out[1] == Bucket::kRl);
  CHECK(out[2] == Bucket::kRl);
  CHECK(out[4] == Bucket::kSft);
  CHECK(out[3] == Bucket::kSft);
}

TEST_CASE("bucket is independent of input order") {
  std::vector<BucketInput> in = {{"b", true, FailRate{2}}, {"a", true, FailRate{2}}, {"c", true, FailRate{1}}};
  std::vector<BucketInput> rev(in.rbegin(), in.rend());
  auto x = bucket(in, 1);
  auto y = bucket(rev, 1);
  CHECK(x[1] == Bucket::kRl);
  CHECK(y[1] == Bucket::kRl);
  CHECK(x[0] == Bucket::kSft);
}

TEST_CASE("distilled fail rates follow scripted trace patterns") {
  testing::TempDir dir("qa");
  pipeline::ContentStore store(dir / "store");
  pipeline::RunLedger ledger(dir / "ledger.jsonl", true);
  RgbImage img{2, 2, std::vector<std::uint8_t>(12, 200)};
  const std::string ref = store.put(encode_png(img));

  // One rule per candidate; its cursor hands trace j the j-th scripted reply.
  Json script = Json::array();
  std::vector<QaCandidate> pairs;
  for (int bits = 0; bits < 8; ++bits) {
    const std::string id = "p" + pattern_name(bits);
    Json texts = Json::array();
    for (bool hit : pattern(bits)) texts.push_back(trace(hit ? "42.0" : "41"));
    script.push_back({{"match", {{"substring", "PATTERN " + id}}}, {"respond", {{"texts", texts}}}});
    QaCandidate c;
    c.qa_id = id;
    c.chart_id = "c";
    c.image_ref = ref;
    c.question = "PATTERN " + id + " what is the value?";
    c.answer_py = "42";
    c.consistency_answer = "42";
    c.consistent = true;
    pairs.push_back(c);
  }
  QaCandidate inconsistent = pairs[0];
  inconsistent.qa_id = "skip";
  inconsistent.consistent = false;
  pairs.push_back(inconsistent);

  gateway::Gateway gw;
  gw.add(testing::mock_endpoint("distill", script.dump(), {true}));
  prompts::PromptCatalog catalog;
  pipeline::RunContext ctx;
  ctx.gateway = &gw;
  ctx.prompts = &catalog;
  ctx.store = &store;
  ctx.ledger = &ledger;
  ctx.seed = 5;

  QaConfig cfg;
  const auto result = cot_distill(ctx, cfg, pairs);
  REQUIRE(result.records.size() == 8);
  CHECK(result.counts.dropped == 1);
  std::vector<QaCandidate> distilled;
  for (const Json& row : result.records) distilled.push_back(qa_candidate_from_json(row));
  for (const auto& c : distilled) {
    int bits = std::stoi(c.qa_id.substr(1), nullptr, 2);
    const int matches = __builtin_popcount(bits);
    REQUIRE(c.rate.has_value());
    CHECK(c.rate->failures == 3 - matches);
    for (std::size_t j = 0; j < 3; ++j) CHECK(c.traces[j].matches_gt == pattern(bits)[j]);
  }

  const auto out = bucket_candidates(distilled, 2);
  CHECK(out.rl.size() == 2);
  CHECK(out.sft.size() == 4);
  CHECK(out.rejected.size() == 2);
  CHECK(out.rl[0]["qa_id"] == "p001");
  CHECK(out.rl[1]["qa_id"] == "p010");
  for (const Json& row : out.sft) CHECK(extract_final_answer(row["cot_trace"].get<std::string>()) == "42.0");

  // The fail-rate stage is resumable: a second pass reuses every record.
  const auto again = cot_distill(ctx, cfg, pairs);
  CHECK(again.counts.reused == 9);
  CHECK(again.records == result.records);

  CHECK_THROWS_AS(
      [&] {
        QaConfig bad;
        bad.traces = 4;
        cot_distill(ctx, bad, pairs);
      }(),
      Error);
}

TEST_CASE("sft supervision skips filtered traces") {
  QaCandidate c = candidate("a", 1);
  c.traces[0].filter = cot::FilterVerdict{{{cot::Rule::kLength, "short"}}};
  c.traces[1].filter = cot::FilterVerdict{};
  c.traces[2].filter = cot::FilterVerdict{};
  auto out = bucket_candidates({c}, 0);
  REQUIRE(out.sft.size() == 1);
  CHECK(out.sft[0]["provenance"]["trace_index"] == 1);

  c.traces[1].filter = cot::FilterVerdict{{{cot::Rule::kNgram, "loop"}}};
  out = bucket_candidates({c}, 0);
  CHECK(out.sft.empty());
  REQUIRE(out.rejected.size() == 1);
  CHECK(out.rejected[0]["cause"] == "cot_filter");
}

TEST_CASE("validate accepts sound data and catches a corrupted answer") {
  testing::TempDir dir("validate");
  auto out = bucket_candidates({candidate("a", 1), candidate("b", 2), candidate("c", 0), candidate("d", 1)}, 1);
  write_rows(dir / "sft.jsonl", out.sft);
  write_rows(dir / "rl.jsonl", out.rl);
  CHECK(validate_dataset(dir.path()).empty());

  auto sft = out.sft;
  sft[1]["answer"] = "43";
  write_rows(dir / "sft.jsonl", sft);
  auto v = validate_dataset(dir.path());
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].line == 2);
  CHECK(v[0].qa_id == sft[1]["qa_id"]);

  auto rl = out.rl;
  rl[0]["provenance"]["fail_count"] = 3;
  write_rows(dir / "sft.jsonl", out.sft);
  write_rows(dir / "rl.jsonl", rl);
  CHECK_FALSE(validate_dataset(dir.path()).empty());

  std::filesystem::remove(dir / "rl.jsonl");
  v = validate_dataset(dir.path());
  REQUIRE(v.size() == 1);
  CHECK(v[0].reason == "missing file");
}

TEST_CASE("candidate JSON round trip") {
  QaCandidate c = candidate("x", 2);
  c.traces[1].error = "timeout";
  c.traces[2].extracted_answer = "7";
  c.traces[0].filter = cot::FilterVerdict{{{cot::Rule::kTemplate, "missing think"}}};
  const Json j = to_json(c);
  CHECK(to_json(qa_candidate_from_json(j)) == j);
  CHECK(make_qa_id("abc", 1) != make_qa_id("abc", 2));
}
