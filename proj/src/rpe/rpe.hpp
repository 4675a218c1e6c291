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

#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "rpe/matrix.hpp"

namespace chartforge::rpe {

// Which nonnegative spectrum feeds the mass distribution.
enum class SpectrumMode {
  kGramEigenvalues,         // eigenvalues of G = Vc Vc^T (default)
  kCenteredSingularValues,  // singular values of Vc, i.e. sqrt of the above
};

// What a record with zero successful reconstructions scores.
enum class ZeroValidPolicy {
  kSentinelMax,  // maximum difficulty, ordered above every finite score
  kDropRecord,   // no score; the caller drops the record
};

std::optional<SpectrumMode> parse_spectrum_mode(std::string_view name);
std::optional<ZeroValidPolicy> parse_zero_valid_policy(std::string_view name);

struct SpectralSummary {
  std::vector<double> singular_values;    // nonincreasing, >= 0, length K
  std::vector<double> mass_distribution;  // empty when the total mass is degenerate
  double entropy = 0.0;                   // nats
};

struct RpeScore {
  double value = 0.0;  // +inf for the sentinel
  bool sentinel = false;
  std::size_t valid_count = 0;
  std::size_t attempted_count = 0;

  static RpeScore max_difficulty(std::size_t attempted) {
    return {std::numeric_limits<double>::infinity(), true, 0, attempted};
  }

  // Inclusive threshold test; the sentinel clears every finite threshold.
  bool at_least(double threshold) const { return sentinel || value >= threshold; }

  // Few successful rollouts drive the score to 0 even though most attempts
  // failed. Surfaced in record metadata.
  bool few_valid() const { return valid_count >= 1 && valid_count <= 2 && valid_count < attempted_count; }
};

struct RpeOptions {
  SpectrumMode spectrum = SpectrumMode::kGramEigenvalues;
  ZeroValidPolicy zero_valid = ZeroValidPolicy::kSentinelMax;
};

// Subtracts the column-wise mean from every row. Throws on an empty matrix.
Matrix center_rows(const Matrix& m);

// Spectrum, normalized mass and entropy of the Gram matrix of an already
// centered matrix. Throws Error(kInvalidInput) on non-finite entries.
SpectralSummary gram_spectrum(const Matrix& centered,
                              SpectrumMode mode = SpectrumMode::kGramEigenvalues);

// Failure-normalized spectral entropy. `embeddings` holds one row per
// successfully executed rollout; nullptr or an empty matrix means every
// rollout failed. Returns nullopt only under ZeroValidPolicy::kDropRecord.
std::optional<RpeScore> rollout_posterior_entropy(std::size_t attempted, const Matrix* embeddings,
                                                  const RpeOptions& options = {});

// Largest finite score attainable with `attempted` rollouts: the entropy of a
// rank-(K-1) spectrum is at most ln(K-1), so the score is at most
// max over K of ln(K-1)/K.
double max_finite_score(std::size_t attempted);

}  // namespace chartforge::rpe
