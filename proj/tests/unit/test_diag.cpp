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
#include <fstream>

#include "common/error.hpp"
#include "common/png.hpp"
#include "diag/diagnostics.hpp"
#include "forge/records.hpp"
#include "pipeline/store.hpp"
#include "unit/support.hpp"

using namespace chartforge;
using namespace chartforge::diag;

namespace {

RgbImage filled(std::uint32_t w, std::uint32_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img{w, h, {}};
  for (std::uint32_t i = 0; i < w * h; ++i) img.pixels.insert(img.pixels.end(), {r, g, b});
  return img;
}

RgbImage quarters() {
  RgbImage img = filled(4, 4, 0, 0, 0);
  const std::uint8_t colors[4][3] = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 255, 255}};
  for (std::uint32_t y = 0; y < 4; ++y) {
    for (std::uint32_t x = 0; x < 4; ++x) {
      const auto* c = colors[(y / 2) * 2 + x / 2];
      std::copy(c, c + 3, img.pixels.begin() + 3 * (y * 4 + x));
    }
  }
  return img;
}

}  // namespace

TEST_CASE("color entropy") {
  CHECK(color_entropy(filled(8, 8, 12, 200, 7)) == 0.0);
  RgbImage half = filled(10, 10, 255, 255, 255);
  for (std::size_t i = 0; i < half.pixels.size() / 2; ++i) half.pixels[i] = 0;
  CHECK(std::fabs(color_entropy(half) - std::log(2.0)) < 1e-6);
  CHECK(std::fabs(color_entropy(quarters()) - std::log(4.0)) < 1e-12);
  // Colors inside one 32-wide bin are indistinguishable.
  RgbImage near = filled(2, 1, 0, 0, 0);
  near.pixels[3] = 31;
  CHECK(color_entropy(near) == 0.0);
  CHECK(color_entropy(encode_png(quarters())) == color_entropy(quarters()));
  CHECK_THROWS_AS(color_entropy(std::vector<std::uint8_t>{1, 2, 3}), Error);
}

TEST_CASE("embedding spread") {
  CHECK(embedding_spread({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(embedding_spread({{1, 0}, {0, 1}}) == doctest::Approx(1.0));
  CHECK(embedding_spread({{1, 0}, {-1, 0}}) == doctest::Approx(2.0));
  // Mean over the three pairs: 1 - 0, 1 - 0, 1 - 1.
  CHECK(embedding_spread({{1, 0}, {0, 1}, {0, 2}}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(embedding_spread({{1, 0}}), Error);
}

TEST_CASE("seeded sample") {
  const auto all = seeded_sample(5, 10, 1);
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
  const auto s = seeded_sample(100, 10, 42);
  CHECK(s.size() == 10);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  CHECK(seeded_sample(100, 10, 42) == s);
  CHECK(seeded_sample(100, 10, 43) != s);
}

TEST_CASE("corpus report") {
  testing::TempDir dir("diag");
  pipeline::ContentStore store(dir / "store");
  std::vector<Json> records;
  for (int i = 0; i < 3; ++i) {
    forge::ChartRecord r;
    r.chart_id = "c" + std::to_string(i);
    r.image_ref = store.put(encode_png(i == 0 ? quarters() : filled(4, 4, 9, 9, 9)));
    r.embedding = std::vector<double>{1.0, static_cast<double>(i)};
    r.rpe = i == 2 ? rpe::RpeScore::max_difficulty(8) : rpe::RpeScore{0.1 * (i + 1), false, 5, 8};
    records.push_back(forge::to_json(r));
  }
  const auto reports = build_report({{"a", records}, {"b", {records[1]}}}, &store, {}, dir / "report");
  REQUIRE(reports.size() == 2);
  const auto& a = reports[0];
  CHECK(a.record_count == 3);
  CHECK(a.rpe_sentinel_count == 1);
  CHECK(*a.rpe_mean == doctest::Approx(0.15));
  CHECK(*a.color_entropy_mean == doctest::Approx(std::log(4.0) / 3.0));
  CHECK(a.embedding_spread.has_value());
  CHECK_FALSE(reports[1].embedding_spread.has_value());
  for (const char* f : {"report.json", "embeddings.csv", "comparison.txt", "comparison.csv"}) {
    CHECK(std::filesystem::exists(dir / "report" / f));
  }
}
