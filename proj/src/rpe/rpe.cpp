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

#include "rpe/rpe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "rpe/jacobi.hpp"

namespace chartforge::rpe {
namespace {
constexpr double kEigenNoiseFloor = 1e-12;
}

std::optional<SpectrumMode> parse_spectrum_mode(std::string_view name) {
  if (name == "gram-eigenvalues") return SpectrumMode::kGramEigenvalues;
  if (name == "centered-singular-values") return SpectrumMode::kCenteredSingularValues;
  return std::nullopt;
}

std::optional<ZeroValidPolicy> parse_zero_valid_policy(std::string_view name) {
  if (name == "sentinel-max") return ZeroValidPolicy::kSentinelMax;
  if (name == "drop-record") return ZeroValidPolicy::kDropRecord;
  return std::nullopt;
}

Matrix center_rows(const Matrix& m) {
  if (m.empty()) fail(ErrorCode::kInvalidInput, "cannot center an empty embedding matrix");
  const std::size_t k = m.rows();
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    auto r = m.row(i);
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += r[c];
  }
  for (double& v : mean) v /= static_cast<double>(k);
  Matrix out = m;
  for (std::size_t i = 0; i < k; ++i) {
    auto r = out.row(i);
    for (std::size_t c = 0; c < out.cols(); ++c) r[c] -= mean[c];
  }
  return out;
}

SpectralSummary gram_spectrum(const Matrix& centered, SpectrumMode mode) {
  if (!centered.all_finite()) fail(ErrorCode::kInvalidInput, "embedding matrix has non-finite entries");
  SpectralSummary summary;
  if (centered.empty()) return summary;

  std::vector<double> values = symmetric_eigenvalues(gram(centered));
  // Centering leaves at least one exact zero eigenvalue; the solver returns
  // it as rounding noise of order eps * top. Values that small are zero.
  const double top = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  const double noise = kEigenNoiseFloor * top;
  for (double& v : values) {
    v = v <= noise ? 0.0 : v;
    if (mode == SpectrumMode::kCenteredSingularValues) v = std::sqrt(v);
  }
  // Clamping can break ordering only among values that were ~0.
  std::sort(values.begin(), values.end(), std::greater<>());
  summary.singular_values = values;

  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  const double degenerate = 1e-12 * std::max(1.0, centered.frobenius_norm_squared());
  if (total <= degenerate) return summary;

  summary.mass_distribution.reserve(values.size());
  double entropy = 0.0;
  for (double v : values) {
    const double p = v / total;
    summary.mass_distribution.push_back(p);
    if (p > 0.0) entropy -= p * std::log(p);
  }
  summary.entropy = std::max(entropy, 0.0);
  return summary;
}

std::optional<RpeScore> rollout_posterior_entropy(std::size_t attempted, const Matrix* embeddings,
                                                  const RpeOptions& options) {
  const std::size_t valid = embeddings ? embeddings->rows() : 0;
  if (attempted < 1) fail(ErrorCode::kInvalidInput, "attempted rollout count must be >= 1");
  if (attempted < valid) {
    fail(ErrorCode::kInvalidInput, "more embeddings (" + std::to_string(valid) +
                                       ") than attempted rollouts (" + std::to_string(attempted) + ")");
  }
  if (valid == 0) {
    if (options.zero_valid == ZeroValidPolicy::kDropRecord) return std::nullopt;
    return RpeScore::max_difficulty(attempted);
  }

  // Canonical row order so the score is bit-identical under row shuffles.
  std::vector<std::size_t> order(valid);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = embeddings->row(a);
    auto rb = embeddings->row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  Matrix sorted(valid, embeddings->cols());
  for (std::size_t i = 0; i < valid; ++i) {
    auto src = embeddings->row(order[i]);
    std::copy(src.begin(), src.end(), sorted.row(i).begin());
  }

  const SpectralSummary summary = gram_spectrum(center_rows(sorted), options.spectrum);
  RpeScore score;
  score.value = summary.entropy / static_cast<double>(valid);
  score.valid_count = valid;
  score.attempted_count = attempted;
  return score;
}

double max_finite_score(std::size_t attempted) {
  double best = 0.0;
  for (std::size_t k = 3; k <= attempted; ++k) {
    best = std::max(best, std::log(static_cast<double>(k - 1)) / static_cast<double>(k));
  }
  return best;
}

}  // namespace chartforge::rpe
