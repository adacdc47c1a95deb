// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "qncf/linalg.hpp"
#include "qncf/random.hpp"

namespace qncf {
namespace {

Matrix random_symmetric(std::size_t n, RandomStream& rng) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-1, 1);
  return m;
}

TEST(Jacobi, DiagonalIsFixedPoint) {
  Matrix m(3, 3);
  m(0, 0) = 3;
  m(1, 1) = -1;
  m(2, 2) = 2;
  auto es = jacobi_eigensystem(m);
  std::vector<double> v = es.values;
  std::sort(v.begin(), v.end());
  EXPECT_DOUBLE_EQ(v[0], -1);
  EXPECT_DOUBLE_EQ(v[1], 2);
  EXPECT_DOUBLE_EQ(v[2], 3);
}

TEST(Jacobi, ReconstructsRandomSymmetric) {
  RandomStream rng(11);
  for (std::size_t n : {2u, 5u, 12u, 30u}) {
    const Matrix a = random_symmetric(n, rng);
    const auto es = jacobi_eigensystem(a);
    Matrix back(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          back(i, j) += es.values[k] * es.vectors(i, k) * es.vectors(j, k);
    EXPECT_LT(max_abs_diff(a, back), 1e-12 * n);
    const Matrix vtv = matmul(es.vectors.transpose(), es.vectors);
    EXPECT_LT(max_abs_diff(vtv, Matrix::identity(n)), 1e-12 * n);
  }
}

TEST(Lu, SolvesHandSystem) {
  Matrix c(2, 2);
  c(0, 0) = c(1, 1) = 1;
  c(0, 1) = c(1, 0) = 0.5;
  const Vector b{1, 0};
  const Vector x = solve(c, b);
  EXPECT_NEAR(x[0], 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(x[1], -2.0 / 3.0, 1e-15);
}

TEST(Lu, DeterminantMatchesCofactorExpansion) {
  RandomStream rng(3);
  Matrix a(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = rng.uniform(-2, 2);
  const double cof = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                     a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                     a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  EXPECT_NEAR(determinant(a), cof, 1e-13);
}

TEST(Lu, SingularThrowsConditioning) {
  Matrix a(2, 2);
  a(0, 0) = a(0, 1) = a(1, 0) = a(1, 1) = 1;
  EXPECT_THROW(solve(a, Vector{1, 1}), ConditioningError);
}

TEST(Lu, FlopCountIsCubic) {
  for (std::size_t n : {4u, 8u, 16u}) {
    Matrix a = Matrix::identity(n);
    const auto f = lu_factor(a);
    EXPECT_LE(f.flops, n * n * n);
  }
}

TEST(Vectors, SignAgnosticDistance) {
  const Vector a{0.6, 0.8};
  const Vector b{-0.6, -0.8};
  EXPECT_DOUBLE_EQ(sign_agnostic_distance(a, b), 0.0);
  EXPECT_NEAR(distance(a, b), 2.0, 1e-15);
}

}  // namespace
}  // namespace qncf
