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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "qncf/hessian.hpp"
#include "qncf/hessian_io.hpp"

namespace qncf {
namespace {

using testing::diagonal;
using testing::seed7;

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST(GenerateSynthetic, RankOneHasUnitFrobenius) {
  const double spec[] = {-1.0};
  const Hessian h = generate_synthetic(2, spec, 1.0, 0);
  EXPECT_NEAR(testing::frobenius_direct(h), 1.0, 1e-12);
  const auto dec = eigendecompose(h);
  ASSERT_EQ(dec.rank(), 1u);
  EXPECT_NEAR(dec.values[0], -1.0, 1e-12);
  // H = -u u^T
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(h.entries(i, j), -dec.vectors[0][i] * dec.vectors[0][j], 1e-12);
}

TEST(GenerateSynthetic, Seed7RoundTripsSpectrum) {
  const auto dec = eigendecompose(seed7());
  ASSERT_EQ(dec.rank(), 4u);
  const auto got = sorted(dec.values);
  const auto want = sorted({testing::kSeed7Spectrum.begin(), testing::kSeed7Spectrum.end()});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
  EXPECT_EQ(seed7().d, 16u);
  EXPECT_EQ(seed7().r, 4u);
}

TEST(GenerateSynthetic, RejectsSeparationViolation) {
  const double spec[] = {0.5, 0.45};
  try {
    generate_synthetic(4, spec, 1.0, 0, 0.1);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("separation"), std::string::npos);
  }
}

TEST(GenerateSynthetic, RejectsLipschitzViolation) {
  const double spec[] = {-1.5};
  try {
    generate_synthetic(4, spec, 1.0, 0);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Lipschitz"), std::string::npos);
  }
}

TEST(GenerateSynthetic, RoundTripPropertyOverSeeds) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    RandomStream rng(seed, "spectra");
    const std::size_t r = 1 + seed % 5, d = r + 3 + seed % 7;
    std::vector<double> spec(r);
    for (double& v : spec) v = rng.uniform(0.05, 1.0) * (rng.bernoulli(0.5) ? 1 : -1);
    const Hessian h = generate_synthetic(d, spec, 1.0, seed);
    const auto dec = eigendecompose(h);
    ASSERT_EQ(dec.rank(), r) << "seed " << seed;
    const auto got = sorted(dec.values), want = sorted(spec);
    for (std::size_t k = 0; k < r; ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
    EXPECT_LE(frobenius_norm(subtract(dec.reconstruct(), h.entries)), 1e-9 * h.frobenius());
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b < r; ++b)
        EXPECT_NEAR(dot(dec.vectors[a], dec.vectors[b]), a == b ? 1.0 : 0.0, 1e-10);
  }
}

TEST(Eigendecompose, DiagonalExample) {
  const auto dec = eigendecompose(diagonal({-1, 0}, 1).entries);
  ASSERT_EQ(dec.rank(), 1u);
  EXPECT_DOUBLE_EQ(dec.values[0], -1.0);
  EXPECT_NEAR(std::abs(dec.vectors[0][0]), 1.0, 1e-15);
  EXPECT_NEAR(dec.vectors[0][1], 0.0, 1e-15);
}

TEST(Eigendecompose, ZeroMatrixIsEmpty) {
  const auto dec = eigendecompose(Matrix(3, 3));
  EXPECT_EQ(dec.rank(), 0u);
}

TEST(Eigendecompose, RejectsAsymmetric) {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(make_hessian(m, 1, 1.0), ValidationError);
}

TEST(FrobeniusBound, Examples) {
  const double rank1[] = {-1.0};
  EXPECT_TRUE(frobenius_bound_check(generate_synthetic(3, rank1, 1.0, 1)));
  EXPECT_TRUE(frobenius_bound_check(seed7()));
  EXPECT_NEAR(seed7().frobenius(), std::sqrt(0.36 + 0.16 + 0.04 + 0.01), 1e-12);
  const Hessian big = diagonal({1.5, 0}, 1, 1.0);
  EXPECT_FALSE(frobenius_bound_check(big));
}

TEST(FrobeniusBound, HoldsOnRandomInstances) {
  RandomStream rng(2024, "frobenius-bound");
  for (int t = 0; t < 1000; ++t) {
    const std::size_t r = 1 + rng() % 6, d = r + rng() % 6;
    const double L = rng.uniform(0.5, 3.0);
    std::vector<double> spec(r);
    for (double& v : spec) {
      do v = rng.uniform(-L, L);
      while (v == 0.0);
    }
    const Hessian h = generate_synthetic(d, spec, L, rng());
    ASSERT_TRUE(frobenius_bound_check(h));
    ASSERT_LE(testing::frobenius_direct(h), std::sqrt(double(r)) * L + 1e-12);
  }
}

TEST(SeparationCheck, Examples) {
  const double a[] = {0.6, 0.4, 0.2};
  EXPECT_TRUE(separation_check(a, 0.1));
  const double b[] = {0.6, 0.55};
  EXPECT_FALSE(separation_check(b, 0.1));
  EXPECT_TRUE(separation_check(eigendecompose(seed7()), 0.05));
}

TEST(ValidateAssumptions, NamesViolatedAssumption) {
  const Hessian wrong_rank = diagonal({-0.5, 0.3, 0}, 1);
  try {
    validate_assumptions(wrong_rank);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
}

TEST(ClassicalNcf, Seed7ReturnsMostNegativeEigenvector) {
  const NCFParams p{0.5, 0.2, 0.01};
  const auto res = classical_ncf(seed7(), p);
  EXPECT_EQ(res.verdict, NcfVerdict::kProper);
  ASSERT_TRUE(res.vector);
  const Vector hu = matvec(seed7().entries, *res.vector);
  EXPECT_NEAR(dot(*res.vector, hu), -0.6, 1e-9);
  EXPECT_LE(dot(*res.vector, hu), -p.alpha + p.epsilon);
}

TEST(ClassicalNcf, PositiveDefiniteIsNoVector) {
  const auto res = classical_ncf(diagonal({0.3, 0.7}, 2), NCFParams{});
  EXPECT_EQ(res.verdict, NcfVerdict::kNoVector);
  EXPECT_FALSE(res.vector);
}

TEST(ClassicalNcf, BandEdgeIsBoundary) {
  const auto res = classical_ncf(diagonal({-0.5, 0.2}, 2), NCFParams{0.5, 0.2, 0.01});
  EXPECT_EQ(res.verdict, NcfVerdict::kBoundary);
  EXPECT_TRUE(res.vector);
  const auto inside = classical_ncf(diagonal({-0.45, 0.2}, 2), NCFParams{0.5, 0.2, 0.01});
  EXPECT_EQ(inside.verdict, NcfVerdict::kBoundary);
  const auto above = classical_ncf(diagonal({-0.35, 0.2}, 2), NCFParams{0.5, 0.2, 0.01});
  EXPECT_EQ(above.verdict, NcfVerdict::kNoVector);
}

TEST(ClassicalNcf, RayleighEqualsLambdaMinOnRandomInstances) {
  RandomStream rng(8, "ncf");
  for (int t = 0; t < 50; ++t) {
    const double spec[] = {rng.uniform(-1, -0.5), rng.uniform(0.1, 0.4)};
    const Hessian h = generate_synthetic(6, spec, 1.0, t);
    const auto res = classical_ncf(h, NCFParams{});
    ASSERT_TRUE(res.vector);
    EXPECT_NEAR(dot(*res.vector, matvec(h.entries, *res.vector)), spec[0], 1e-9);
  }
}

TEST(IndependenceCheck, Examples) {
  const Hessian d2 = diagonal({-1, -2}, 2);
  const std::size_t both[] = {0, 1};
  EXPECT_TRUE(independence_check(d2, both));

  Matrix m(3, 3);
  const Vector u = normalized(Vector{1, 2, 2});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = -u[i] * u[j];
  const Hessian rank1 = make_hessian(m, 1, 1.0);
  const std::size_t one[] = {1};
  EXPECT_TRUE(independence_check(rank1, one));

  const Hessian rank1_declared2 = make_hessian(m, 2, 1.0);
  const std::size_t parallel[] = {1, 2};
  EXPECT_FALSE(independence_check(rank1_declared2, parallel));

  const std::size_t repeated[] = {0, 0};
  EXPECT_THROW(independence_check(d2, repeated), ValidationError);
}

TEST(IndependenceCheck, AgreesWithGramRankOracle) {
  RandomStream rng(500, "independence");
  int checked = 0, dependent = 0;
  for (int t = 0; t < 500; ++t) {
    // Odd trials embed the eigenvectors isometrically with coordinates 0 and 1
    // duplicated, so columns 0 and 1 coincide and dependent sets occur.
    const std::size_t d = 8, r = 3;
    std::vector<Vector> basis;
    if (t % 2 == 0) {
      basis = random_orthonormal_set(d, r, rng);
    } else {
      for (auto& v : random_orthonormal_set(d - 1, r, rng)) {
        Vector w(d);
        w[0] = w[1] = v[0] / std::sqrt(2.0);
        for (std::size_t k = 1; k < d - 1; ++k) w[k + 1] = v[k];
        basis.push_back(std::move(w));
      }
    }
    const double spec[] = {-0.7, 0.5, 0.25};
    const Hessian h = make_hessian(sum_of_outer_products(spec, basis, d), r, 1.0);
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < r; ++k) std::swap(idx[k], idx[k + rng() % (d - k)]);
    idx.resize(r);
    bool has_zero = false;
    for (std::size_t i : idx) has_zero |= h.column_norm(i) < 1e-12;
    if (has_zero) continue;  // normalized columns undefined
    std::vector<Vector> cols;
    for (std::size_t i : idx) cols.push_back(testing::unit_column(h, i));
    // Oracle: rank of the Gram matrix through its eigenvalues.
    const auto es = jacobi_eigensystem(gram_matrix(cols));
    std::size_t rank = 0;
    for (double v : es.values) rank += std::abs(v) > 1e-9;
    const bool oracle = rank == r;
    EXPECT_EQ(independence_check(h, idx), oracle) << "trial " << t;
    ++checked;
    dependent += !oracle;
  }
  EXPECT_GT(checked, 300);
  EXPECT_GT(dependent, 5);
}

TEST(IndependenceCheck, OperationCountIsCubic) {
  for (std::size_t r : {2u, 4u, 8u}) {
    std::vector<double> spec(r);
    for (std::size_t k = 0; k < r; ++k) spec[k] = (k % 2 ? 1.0 : -1.0) * (0.9 - 0.1 * double(k));
    const Hessian h = generate_synthetic(2 * r, spec, 1.0, r);
    std::vector<std::size_t> idx(r);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t flops = 0;
    independence_check(h, idx, &flops);
    EXPECT_GT(flops, 0u);
    EXPECT_LE(flops, r * r * r + r);
  }
}

TEST(HessianIo, RoundTripsBitForBit) {
  const double a[] = {-1.0};
  const double c[] = {0.9, -0.5};
  for (const Hessian& h : {generate_synthetic(2, a, 1.0, 0), seed7(), generate_synthetic(5, c, 1.0, 3)}) {
    const std::string text = write_hessian_json(h);
    const Hessian back = read_hessian_json(text);
    EXPECT_EQ(back.d, h.d);
    EXPECT_EQ(back.r, h.r);
    EXPECT_EQ(back.lipschitz, h.lipschitz);
    EXPECT_TRUE(back.entries == h.entries);
    EXPECT_EQ(write_hessian_json(back), text);
  }
}

TEST(HessianIo, RejectsMalformed) {
  EXPECT_THROW(read_hessian_json("{"), ValidationError);
  EXPECT_THROW(read_hessian_json(R"({"d": 2, "r": 1, "L": 1})"), ValidationError);
  EXPECT_THROW(read_hessian_json(R"({"d": 2, "r": 1, "L": 1, "entries": [1, 2, 3]})"), ValidationError);
  EXPECT_THROW(read_hessian_json(R"({"d": 2, "r": 1, "L": 1, "entries": [1, 2, 3, 4]})"), ValidationError);
}

}  // namespace
}  // namespace qncf
