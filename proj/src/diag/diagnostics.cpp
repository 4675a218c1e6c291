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

#include "diag/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "common/error.hpp"
#include "forge/records.hpp"
#include "pipeline/store.hpp"

namespace fs = std::filesystem;

namespace chartforge::diag {

double color_entropy(const RgbImage& image) {
  const std::size_t pixels = static_cast<std::size_t>(image.width) * image.height;
  if (pixels == 0 || image.pixels.size() < pixels * 3) fail(ErrorCode::kInvalidInput, "empty or truncated image");
  std::array<std::size_t, 512> hist{};
  for (std::size_t i = 0; i < pixels; ++i) {
    const std::uint8_t* p = &image.pixels[i * 3];
    ++hist[(p[0] >> 5) * 64 + (p[1] >> 5) * 8 + (p[2] >> 5)];
  }
  double h = 0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double q = static_cast<double>(count) / static_cast<double>(pixels);
    h -= q * std::log(q);
  }
  return h <= 0 ? 0.0 : h;
}

double color_entropy(std::span<const std::uint8_t> png) { return color_entropy(decode_png(png)); }

std::vector<std::size_t> seeded_sample(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= k) return idx;
  // Partial Fisher-Yates with explicit modulo draws; std::shuffle and the
  // standard distributions are not portable across library vendors.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double embedding_spread(const std::vector<std::vector<double>>& vectors, std::size_t sample_size,
                        std::uint64_t seed) {
  if (vectors.size() < 2) fail(ErrorCode::kInvalidInput, "embedding spread needs at least 2 vectors");
  if (sample_size < 2) fail(ErrorCode::kInvalidInput, "embedding spread sample size must be >= 2");
  const auto idx = seeded_sample(vectors.size(), sample_size, seed);
  double total = 0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const auto& u = vectors[idx[a]];
      const auto& v = vectors[idx[b]];
      const double c = u == v ? 1.0 : std::clamp(forge::cosine(u, v), -1.0, 1.0);
      total += 1.0 - c;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

Json to_json(const CorpusReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return {{"corpus_id", r.corpus_id},
          {"record_count", r.record_count},
          {"sample_size", r.sample_size},
          {"rpe_mean", opt(r.rpe_mean)},
          {"rpe_median", opt(r.rpe_median)},
          {"rpe_sentinel_count", r.rpe_sentinel_count},
          {"color_entropy_mean", opt(r.color_entropy_mean)},
          {"embedding_spread", opt(r.embedding_spread)},
          {"warnings", r.warnings}};
}

CorpusReport build_corpus_report(const CorpusInput& corpus, const pipeline::ContentStore* store,
                                 const ReportOptions& options) {
  CorpusReport report;
  report.corpus_id = corpus.corpus_id;
  report.record_count = corpus.records.size();
  if (corpus.records.empty()) {
    report.warnings.push_back("empty corpus");
    return report;
  }
  const auto sample = seeded_sample(corpus.records.size(), options.sample_size, options.seed);
  report.sample_size = sample.size();

  std::vector<double> finite;
  std::vector<double> entropies;
  std::vector<std::vector<double>> vectors;
  std::size_t missing_images = 0;
  for (std::size_t i : sample) {
    const forge::ChartRecord r = forge::chart_record_from_json(corpus.records[i]);
    if (r.rpe) {
      if (r.rpe->sentinel) {
        ++report.rpe_sentinel_count;
      } else {
        finite.push_back(r.rpe->value);
      }
    }
    if (r.embedding) vectors.push_back(*r.embedding);
    if (store && !r.image_ref.empty() && store->contains(r.image_ref)) {
      entropies.push_back(color_entropy(store->get(r.image_ref)));
    } else {
      ++missing_images;
    }
  }
  if (!finite.empty()) {
    double sum = 0;
    for (double v : finite) sum += v;
    report.rpe_mean = sum / static_cast<double>(finite.size());
    std::sort(finite.begin(), finite.end());
    const std::size_t m = finite.size();
    report.rpe_median = m % 2 ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);
  }
  if (!entropies.empty()) {
    double sum = 0;
    for (double v : entropies) sum += v;
    report.color_entropy_mean = sum / static_cast<double>(entropies.size());
  }
  if (missing_images) report.warnings.push_back(std::to_string(missing_images) + " records without a stored image");
  if (vectors.size() >= 2) {
    try {
      report.embedding_spread = embedding_spread(vectors, vectors.size(), options.seed);
    } catch (const Error& e) {
      report.warnings.push_back(std::string("embedding spread unavailable: ") + e.what());
    }
  } else {
    report.warnings.push_back("fewer than 2 embeddings");
  }
  return report;
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

std::string csv_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

std::vector<CorpusReport> build_report(const std::vector<CorpusInput>& corpora, const pipeline::ContentStore* store,
                                       const ReportOptions& options, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<CorpusReport> reports;
  Json doc = Json::array();
  for (const auto& c : corpora) {
    reports.push_back(build_corpus_report(c, store, options));
    doc.push_back(to_json(reports.back()));
  }
  write_text_file(out_dir / "report.json", doc.dump(2) + "\n");

  std::size_t dim = 0;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (const auto& c : corpora) {
    for (const auto& rec : c.records) {
      if (!rec.contains("embedding")) continue;
      auto v = rec["embedding"].get<std::vector<double>>();
      dim = std::max(dim, v.size());
      rows.emplace_back(c.corpus_id + ":" + rec.value("chart_id", ""), std::move(v));
    }
  }
  std::ostringstream csv;
  csv << "id,dim";
  for (std::size_t i = 0; i < dim; ++i) csv << ",v" << i;
  csv << '\n';
  for (const auto& [id, v] : rows) {
    csv << id << ',' << v.size();
    for (std::size_t i = 0; i < dim; ++i) csv << ',' << (i < v.size() ? csv_double(v[i]) : "");
    csv << '\n';
  }
  write_text_file(out_dir / "embeddings.csv", csv.str());

  const std::vector<std::string> header = {"corpus", "records", "sample", "rpe_mean", "rpe_median",
                                           "sentinel", "color_entropy", "emb_spread"};
  std::vector<std::vector<std::string>> table = {header};
  for (const auto& r : reports) {
    table.push_back({r.corpus_id, std::to_string(r.record_count), std::to_string(r.sample_size), fmt(r.rpe_mean),
                     fmt(r.rpe_median), std::to_string(r.rpe_sentinel_count), fmt(r.color_entropy_mean),
                     fmt(r.embedding_spread)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream txt, ccsv;
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      txt << (i ? "  " : "") << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      ccsv << (i ? "," : "") << row[i];
    }
    txt << '\n';
    ccsv << '\n';
  }
  write_text_file(out_dir / "comparison.txt", txt.str());
  write_text_file(out_dir / "comparison.csv", ccsv.str());
  return reports;
}

}  // namespace chartforge::diag
