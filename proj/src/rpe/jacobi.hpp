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

#include <vector>

#include "rpe/matrix.hpp"

namespace chartforge::rpe {

struct JacobiOptions {
  // Sweeps stop once the off-diagonal Frobenius norm falls below
  // tolerance * ||A||_F.
  double tolerance = 1e-12;
  int max_sweeps = 64;
};

// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, sorted
// nonincreasing. Intended for the small K x K Gram matrices (K <= ~16).
// Throws Error(kInvalidInput) for non-square input.
std::vector<double> symmetric_eigenvalues(Matrix a, const JacobiOptions& options = {});

}  // namespace chartforge::rpe
