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

#include <cmath>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "forge/chart_forge.hpp"
#include "forge/records.hpp"
#include "unit/support.hpp"

using namespace chartforge;
using namespace chartforge::forge;

namespace {

rpe::RpeScore score(double v) { return {v, false, 5, 8}; }

ChartRecord scored(const std::string& id, std::optional<rpe::RpeScore> s) {
  ChartRecord r;
  r.chart_id = id;
  r.image_ref = "ref-" + id;
  r.embedding = std::vector<double>{1.0, static_cast<double>(id.size()), 0.0};
  r.rpe = s;
  return r;
}

}  // namespace

TEST_CASE("filter_hard keeps exactly the records at or above the threshold") {
  std::vector<ChartRecord> records = {scored("a", score(0.21)), scored("b", score(0.385)),
                                      scored("c", score(0.45)), scored("d", rpe::RpeScore::max_difficulty(8)),
                                      scored("e", score(0.0))};
  for (double t : {0.39, 0.40, 0.41}) {
    const auto split = filter_hard(records, t);
    REQUIRE(split.hard.size() == 2);
    CHECK(split.hard[0].chart_id == "c");
    CHECK(split.hard[1].chart_id == "d");
    CHECK(split.rest.size() == 3);
    CHECK(split.index.size() == 2);
    CHECK(split.index.contains("d"));
  }
  // Inclusive at the boundary.
  records.push_back(scored("f", score(0.40)));
  CHECK(filter_hard(records, 0.40).hard.size() == 3);
  CHECK(filter_hard(records, std::nextafter(0.40, 1.0)).hard.size() == 2);

  records.push_back(scored("g", std::nullopt));
  CHECK_THROWS_AS(filter_hard(records, 0.4), Error);
}

TEST_CASE("boost acceptance boundaries are inclusive") {
  CHECK(boost_accept(score(0.40), 0.65, 0.4, 0.65));
  CHECK(boost_accept(score(0.50), 0.10, 0.4, 0.65));
  CHECK_FALSE(boost_accept(score(0.40), 0.66, 0.4, 0.65));
  CHECK_FALSE(boost_accept(score(std::nextafter(0.40, 0.0)), 0.1, 0.4, 0.65));
  CHECK_FALSE(boost_accept(score(0.40), std::nextafter(0.65, 1.0), 0.4, 0.65));
  CHECK(boost_accept(rpe::RpeScore::max_difficulty(8), 0.65, 0.4, 0.65));
  CHECK_FALSE(boost_accept(rpe::RpeScore::max_difficulty(8), 0.66, 0.4, 0.65));
}

TEST_CASE("cosine and the hard seed index") {
  CHECK(cosine({1, 0}, {0, 1}) == doctest::Approx(0.0));
  CHECK(cosine({1, 1}, {2, 2}) == doctest::Approx(1.0));
  CHECK(cosine({0, 0}, {1, 1}) == 0.0);

  HardSeedIndex idx;
  CHECK_FALSE(idx.max_cosine({1, 0}).has_value());
  idx.add("x", {1, 0, 0});
  idx.add("y", {0.6, 0.8, 0});
  CHECK(*idx.max_cosine({0, 1, 0}) == doctest::Approx(0.8));
  CHECK(*idx.max_cosine({0, 0, 1}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(idx.add("x", {0, 0, 1}), Error);
  CHECK_THROWS_AS(idx.add("z", {0, 1}), Error);

  const auto back = HardSeedIndex::from_jsonl(idx.to_jsonl());
  CHECK(back.size() == 2);
  CHECK(back.entries() == idx.entries());
}

TEST_CASE("chart record JSON round trip") {
  ChartRecord r = scored("abc", rpe::RpeScore::max_difficulty(8));
  r.source = ChartSource::kCoderSample;
  r.code = "import matplotlib";
  r.max_sim_to_hard = 0.5;
  r.iteration = 2;
  r.parent = "p";
  r.rollouts.push_back({"ok", "cid", "iref"});
  r.rollouts.push_back({"no_code", std::nullopt, std::nullopt});
  const Json j = to_json(r);
  CHECK(to_json(chart_record_from_json(j)) == j);
  CHECK(std::isinf(chart_record_from_json(j).rpe->value));

  ChartRecord plain = scored("p", score(0.25));
  CHECK(to_json(chart_record_from_json(to_json(plain))) == to_json(plain));
}

TEST_CASE("dedup keeps the first record per chart") {
  std::vector<ChartRecord> in = {scored("a", score(0.1)), scored("b", score(0.2)), scored("a", score(0.3))};
  auto out = dedup_by_chart_id(in);
  REQUIRE(out.size() == 2);
  CHECK(out[0].rpe->value == 0.1);
  CHECK(out[1].chart_id == "b");
}

TEST_CASE("coder training export") {
  testing::TempDir dir("export");
  ChartRecord a = scored("a", score(0.5));
  a.code = "print(1)";
  ChartRecord b = scored("b", score(0.5));
  b.code = "print(2)";
  CHECK(export_coder_training_set({a, b}, dir / "train.jsonl", "SYSTEM") == 2);
  const auto rows = read_jsonl(dir / "train.jsonl");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["system"] == "SYSTEM");
  CHECK(rows[1]["output"] == "print(2)");
  CHECK_THROWS_AS(export_coder_training_set({scored("c", score(0.5))}, dir / "x.jsonl", "S"), Error);
}
