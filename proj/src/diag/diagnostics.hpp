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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/jsonl.hpp"
#include "common/png.hpp"

namespace chartforge::pipeline {
class ContentStore;
}

namespace chartforge::diag {

// Shannon entropy (nats) of the 8x8x8 quantized color histogram.
double color_entropy(const RgbImage& image);
double color_entropy(std::span<const std::uint8_t> png);

// Mean of (1 - cosine) over all pairs of a seeded sample of at most
// sample_size vectors. Throws Error(kInvalidInput) for fewer than 2 vectors.
double embedding_spread(const std::vector<std::vector<double>>& vectors, std::size_t sample_size = 1000,
                        std::uint64_t seed = 0);

// Indices of a seeded uniform sample without replacement, in ascending order
// (all indices when n <= k). Same result on every platform.
std::vector<std::size_t> seeded_sample(std::size_t n, std::size_t k, std::uint64_t seed);

struct CorpusReport {
  std::string corpus_id;
  std::size_t record_count = 0;
  std::size_t sample_size = 0;
  std::optional<double> rpe_mean;    // finite scores in the sample
  std::optional<double> rpe_median;
  std::size_t rpe_sentinel_count = 0;
  std::optional<double> color_entropy_mean;
  std::optional<double> embedding_spread;
  std::vector<std::string> warnings;
};

Json to_json(const CorpusReport& r);

struct CorpusInput {
  std::string corpus_id;
  std::vector<Json> records;  // ChartRecord JSON
};

struct ReportOptions {
  std::size_t sample_size = 1000;
  std::uint64_t seed = 0;
};

CorpusReport build_corpus_report(const CorpusInput& corpus, const pipeline::ContentStore* store,
                                 const ReportOptions& options);

// Writes report.json, embeddings.csv, comparison.txt and comparison.csv into
// out_dir and returns the reports.
std::vector<CorpusReport> build_report(const std::vector<CorpusInput>& corpora, const pipeline::ContentStore* store,
                                       const ReportOptions& options, const std::filesystem::path& out_dir);

}  // namespace chartforge::diag
