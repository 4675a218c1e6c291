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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "common/error.hpp"
#include "rpe/jacobi.hpp"
#include "rpe/rpe.hpp"

using namespace chartforge;
using namespace chartforge::rpe;

namespace {

Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

double score(std::size_t attempted, const Matrix& m) {
  return rollout_posterior_entropy(attempted, &m)->value;
}

}  // namespace

TEST_CASE("center_rows subtracts the column mean") {
  Matrix two = Matrix::from_rows({{1, 0}, {0, 1}});
  Matrix c = center_rows(two);
  CHECK(c(0, 0) == doctest::Approx(0.5));
  CHECK(c(0, 1) == doctest::Approx(-0.5));
  CHECK(c(1, 0) == doctest::Approx(-0.5));
  CHECK(c(1, 1) == doctest::Approx(0.5));

  Matrix single = Matrix::from_rows({{3, 7}});
  Matrix cs = center_rows(single);
  CHECK(cs(0, 0) == 0.0);
  CHECK(cs(0, 1) == 0.0);
}

TEST_CASE("center_rows matches the explicit projector product on identity-3") {
  // Oracle: (I - (1/K) 1 1^T) V with V = I, multiplied out term by term.
  const std::size_t k = 3;
  Matrix v = identity(k);
  Matrix expected(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double sum = 0.0;
      for (std::size_t l = 0; l < k; ++l) {
        double proj = (i == l ? 1.0 : 0.0) - 1.0 / static_cast<double>(k);
        sum += proj * v(l, j);
      }
      expected(i, j) = sum;
    }
  Matrix c = center_rows(v);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) CHECK(c(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-15));
  CHECK(c(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(c(0, 1) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("center_rows column sums vanish") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m = random_matrix(rng, 1 + trial % 8, 5);
    Matrix c = center_rows(m);
    double max_abs = 0.0;
    for (double v : m.data()) max_abs = std::max(max_abs, std::abs(v));
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < c.rows(); ++i) sum += c(i, j);
      CHECK(std::abs(sum) <= 1e-10 * static_cast<double>(c.rows()) * max_abs);
    }
  }
}

TEST_CASE("center_rows rejects an empty matrix") {
  Matrix empty;
  CHECK_THROWS_AS(center_rows(empty), Error);
}

TEST_CASE("Jacobi eigenvalues of a known symmetric matrix") {
  // [[2,1],[1,2]] has eigenvalues 3 and 1.
  Matrix a = Matrix::from_rows({{2, 1}, {1, 2}});
  auto ev = symmetric_eigenvalues(a);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-14));

  // Hilbert-like 4x4 from the classic Jacobi test matrix.
  Matrix pascal = Matrix::from_rows({{1, 1, 1, 1}, {1, 2, 3, 4}, {1, 3, 6, 10}, {1, 4, 10, 20}});
  auto pv = symmetric_eigenvalues(pascal);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(pascal));
  auto ov = oracle.eigenvalues();
  for (int i = 0; i < 4; ++i) CHECK(pv[i] == doctest::Approx(ov(3 - i)).epsilon(1e-12));
}

TEST_CASE("gram_spectrum of the centered identity-3") {
  SpectralSummary s = gram_spectrum(center_rows(identity(3)));
  REQUIRE(s.singular_values.size() == 3);
  CHECK(s.singular_values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.singular_values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(s.singular_values[2]) < 1e-12);
  REQUIRE(s.mass_distribution.size() == 3);
  CHECK(s.mass_distribution[0] == doctest::Approx(0.5));
  CHECK(s.mass_distribution[1] == doctest::Approx(0.5));
  CHECK(std::abs(s.mass_distribution[2]) < 1e-12);
  CHECK(s.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gram_spectrum degenerate cases") {
  std::mt19937_64 rng(11);
  Matrix two = random_matrix(rng, 2, 16);
  CHECK(gram_spectrum(center_rows(two)).entropy == doctest::Approx(0.0).epsilon(1e-12));

  Matrix zero(4, 8);
  SpectralSummary s = gram_spectrum(zero);
  CHECK(s.entropy == 0.0);
  CHECK(s.mass_distribution.empty());

  Matrix bad = Matrix::from_rows({{0, std::nan("")}});
  CHECK_THROWS_AS(gram_spectrum(bad), Error);
}

TEST_CASE("rollout_posterior_entropy examples") {
  Matrix id3 = identity(3);
  auto r = rollout_posterior_entropy(8, &id3);
  REQUIRE(r);
  CHECK(r->value == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-12));
  CHECK(std::abs(r->value - 0.231049) < 1e-6);
  CHECK(r->valid_count == 3);
  CHECK(r->attempted_count == 8);

  Matrix one = Matrix::from_rows({{0.3, 0.1, 0.9}});
  auto r1 = rollout_posterior_entropy(8, &one);
  CHECK(r1->value == 0.0);
  CHECK(r1->few_valid());

  auto r0 = rollout_posterior_entropy(8, nullptr);
  REQUIRE(r0);
  CHECK(r0->sentinel);
  CHECK(r0->at_least(0.4));
  CHECK(r0->at_least(1e300));

  RpeOptions drop;
  drop.zero_valid = ZeroValidPolicy::kDropRecord;
  CHECK_FALSE(rollout_posterior_entropy(8, nullptr, drop).has_value());

  CHECK_THROWS_AS(rollout_posterior_entropy(2, &id3), Error);
  CHECK_THROWS_AS(rollout_posterior_entropy(0, nullptr), Error);
}

TEST_CASE("eigenvalues of G equal squared singular values of Vc (independent SVD oracle)") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> krange(1, 8), drange(4, 64);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix v = random_matrix(rng, krange(rng), drange(rng));
    Matrix vc = center_rows(v);
    SpectralSummary s = gram_spectrum(vc);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(vc));
    Eigen::VectorXd sv = svd.singularValues();
    const double top = std::max(1e-300, sv.size() ? sv(0) * sv(0) : 0.0);
    for (std::size_t i = 0; i < s.singular_values.size(); ++i) {
      double oracle = i < static_cast<std::size_t>(sv.size()) ? sv(i) * sv(i) : 0.0;
      CHECK(std::abs(s.singular_values[i] - oracle) <= 1e-9 * top);
    }
  }
}

TEST_CASE("rpe invariances") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> krange(1, 8), drange(4, 32);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = krange(rng), d = drange(rng);
    Matrix v = random_matrix(rng, k, d);
    const double base = score(8, v);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(to_eigen(random_matrix(rng, d, d)));
    Eigen::MatrixXd q = qr.householderQ();
    CHECK(std::abs(score(8, from_eigen(to_eigen(v) * q)) - base) <= 1e-8);

    for (double c : {1e-3, 1.0, 1e3}) {
      CHECK(std::abs(score(8, from_eigen(c * to_eigen(v))) - base) <= 1e-8);
    }

    Matrix shifted = v;
    Matrix offset = random_matrix(rng, 1, d);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < d; ++j) shifted(i, j) += 5.0 * offset(0, j);
    CHECK(std::abs(score(8, shifted) - base) <= 1e-8);

    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix permuted(k, d);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < d; ++j) permuted(i, j) = v(perm[i], j);
    CHECK(score(8, permuted) == base);

    const double bound = k >= 2 ? std::log(static_cast<double>(k - 1)) / static_cast<double>(k) : 0.0;
    CHECK(base >= 0.0);
    CHECK(base <= bound + 1e-9);
  }
}

TEST_CASE("score decreases with the valid count at fixed entropy") {
  const double entropy = std::log(2.0);
  double previous = entropy / 3.0;
  for (std::size_t k = 4; k <= 8; ++k) {
    double v = entropy / static_cast<double>(k);
    CHECK(v < previous);
    previous = v;
  }
}

TEST_CASE("singular-value spectrum mode takes square roots") {
  Matrix v = Matrix::from_rows({{1, 0, 0}, {0, 2, 0}, {0, 0, 0}, {1, 1, 1}});
  SpectralSummary eig = gram_spectrum(center_rows(v), SpectrumMode::kGramEigenvalues);
  SpectralSummary sing = gram_spectrum(center_rows(v), SpectrumMode::kCenteredSingularValues);
  for (std::size_t i = 0; i < eig.singular_values.size(); ++i)
    CHECK(sing.singular_values[i] == doctest::Approx(std::sqrt(eig.singular_values[i])).epsilon(1e-9));
  CHECK(sing.entropy != doctest::Approx(eig.entropy));
}

TEST_CASE("max_finite_score bound") {
  CHECK(max_finite_score(8) == doctest::Approx(std::log(4.0) / 5.0));
  CHECK(max_finite_score(2) == 0.0);
  CHECK(max_finite_score(8) < 0.4);
}
