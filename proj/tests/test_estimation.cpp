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

#include <cmath>

#include "fixtures.hpp"
#include "qncf/estimation.hpp"

namespace qncf {
namespace {

using testing::diagonal;
using testing::seed7;

double direct_overlap(const Hessian& h, std::size_t i, std::size_t j) {
  double s = 0, ni = 0, nj = 0;
  for (std::size_t k = 0; k < h.d; ++k) {
    s += h.entries(k, i) * h.entries(k, j);
    ni += h.entries(k, i) * h.entries(k, i);
    nj += h.entries(k, j) * h.entries(k, j);
  }
  return s / std::sqrt(ni * nj);
}

std::size_t most_negative(const SpectralDecomposition& dec) {
  std::size_t t = 0;
  for (std::size_t k = 1; k < dec.rank(); ++k)
    if (dec.values[k] < dec.values[t]) t = k;
  return t;
}

TEST(HoeffdingShots, FormulaValues) {
  EXPECT_EQ(hoeffding_shots(0.1, 0.05), static_cast<std::uint64_t>(std::floor(200.0 * std::log(40.0))) + 1);
  EXPECT_EQ(hoeffding_shots(0.1, 0.05), 738u);
  EXPECT_EQ(hoeffding_shots(1.0, 0.5), 3u);
  EXPECT_THROW(hoeffding_shots(0.0, 0.1), ValidationError);
  EXPECT_THROW(hoeffding_shots(0.1, 1.0), ValidationError);
}

TEST(HadamardTest, IdenticalColumnsGiveOneExactly) {
  const KPTree tree(seed7());
  RandomStream rng(1);
  for (Backend b : {Backend::kStatevector, Backend::kAnalytic}) {
    const auto e = hadamard_test_overlap(tree, 3, 3, 0.1, 0.05, b, rng);
    EXPECT_EQ(e.value, 1.0);
    EXPECT_EQ(e.shots, 738u);
  }
}

TEST(HadamardTest, OrthogonalColumnsNearZero) {
  const KPTree tree(diagonal({-0.7, 0.4, 0.2}, 3));
  RandomStream rng(2);
  const auto e = hadamard_test_overlap(tree, 0, 2, 0.1, 0.05, Backend::kStatevector, rng);
  EXPECT_NEAR(e.p_zero, 0.5, 1e-12);
  EXPECT_LE(std::abs(e.value), 0.1);
}

TEST(HadamardTest, BackendsAgreeOnAllPairs) {
  const KPTree tree(seed7());
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      const double want = 0.5 * (1 + direct_overlap(seed7(), i, j));
      EXPECT_NEAR(hadamard_probability_statevector(tree, i, j), want, 1e-10);
      EXPECT_NEAR(hadamard_probability(tree, i, j, Backend::kAnalytic), want, 1e-12);
    }
}

TEST(HadamardTest, ChargesTwoQueriesPerShot) {
  const KPTree tree(seed7());
  RandomStream rng(3);
  const auto e = hadamard_test_overlap(tree, 0, 1, 0.1, 0.05, Backend::kStatevector, rng);
  EXPECT_EQ(tree.tally().u_h(), 2 * e.shots);
}

TEST(HadamardTest, CoverageMeetsConfidence) {
  const KPTree tree(seed7());
  const double truth = direct_overlap(seed7(), 0, 1);
  RandomStream rng(4);
  int failures = 0;
  for (int t = 0; t < 1000; ++t) {
    RandomStream s = rng.split(t);
    failures += std::abs(hadamard_test_overlap(tree, 0, 1, 0.1, 0.05, Backend::kAnalytic, s).value - truth) > 0.1;
  }
  EXPECT_LE(failures, 50);
}

TEST(HadamardTest, RejectsZeroColumn) {
  const KPTree tree(diagonal({-0.7, 0.4, 0.0}, 2));
  RandomStream rng(5);
  EXPECT_THROW(hadamard_test_overlap(tree, 0, 2, 0.1, 0.05, Backend::kAnalytic, rng), ValidationError);
}

TEST(SwapTest, ProbabilityFormulaExactOnStatevector) {
  RandomStream rng(6);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + t % 7;
    Vector a(d), b(d);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    a = normalized(a);
    b = normalized(b);
    const double o = dot(a, b);
    EXPECT_NEAR(swap_probability_statevector(prepare_vector_state(a), prepare_vector_state(b)), 0.5 * (1 + o * o),
                1e-12);
  }
}

TEST(SwapTest, IdenticalOrthogonalAndKnownPair) {
  RandomStream rng(7);
  const QState e0 = prepare_vector_state(Vector{1, 0, 0});
  const QState e1 = prepare_vector_state(Vector{0, 1, 0});
  EXPECT_EQ(swap_test_sq_overlap(e0, e0, 1000, Backend::kStatevector, rng).value, 1.0);
  EXPECT_NEAR(swap_test_sq_overlap(e0, e1, 1000, Backend::kStatevector, rng).p_zero, 0.5, 1e-12);
  const QState c = prepare_vector_state(Vector{0.6, 0.8, 0});
  for (Backend b : {Backend::kStatevector, Backend::kAnalytic})
    EXPECT_NEAR(swap_test_sq_overlap(e0, c, 10000, b, rng).value, 0.36, 0.02);
  EXPECT_THROW(swap_test_sq_overlap(e0, prepare_vector_state(Vector{1, 0}), 10, Backend::kAnalytic, rng),
               ValidationError);
}

TEST(Anchor, DiagonalPicksTargetColumn) {
  const Hessian h = diagonal({0.3, -0.8, 0.5, 0.0}, 3);
  const auto dec = eigendecompose(h);
  const KPTree tree(h);
  RandomStream rng(8);
  const auto a = find_anchor_index(tree, verification_target(dec, most_negative(dec)), 0.01, Backend::kAnalytic, rng);
  EXPECT_EQ(a.index, 1u);
  EXPECT_NEAR(a.value, 1.0, 0.2);
}

TEST(Anchor, Seed7MatchesClassicalArgmax) {
  const auto dec = eigendecompose(seed7());
  const KPTree tree(seed7());
  const std::size_t t = most_negative(dec);
  const Vector& u = dec.vectors[t];
  double best_v = -1;
  for (std::size_t i = 0; i < 16; ++i) {
    const double o = dot(u, tree.column_state(i));
    best_v = std::max(best_v, o * o);
  }
  EXPECT_GE(best_v, dec.values[t] * dec.values[t] / (dec.frobenius * dec.frobenius));
  for (Backend b : {Backend::kAnalytic, Backend::kStatevector}) {
    RandomStream rng(9);
    const auto a = find_anchor_index(tree, verification_target(dec, t), 0.01, b, rng);
    const double o = dot(u, tree.column_state(a.index));
    // Any column within the estimate precision of the maximum is an admissible anchor.
    EXPECT_GE(o * o, best_v - 2 * a.precision);
    EXPECT_GE(a.value, a.floor);
  }
}

TEST(Anchor, RankOneClosedForm) {
  const double spec[] = {-0.9};
  const Hessian h = generate_synthetic(6, spec, 1.0, 10);
  const auto dec = eigendecompose(h);
  const KPTree tree(h);
  RandomStream rng(10);
  const auto a = find_anchor_index(tree, verification_target(dec, 0), 0.01, Backend::kAnalytic, rng);
  // Every column is parallel to u, so every squared overlap is 1.
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(a.estimates[i], 1.0, a.precision);
}

TEST(Anchor, CorruptedSourceFailsGate) {
  const Hessian h = diagonal({0.3, -0.8, 0.5, 0.0}, 3);
  const auto dec = eigendecompose(h);
  const KPTree tree(h);
  TargetSource bad = verification_target(dec, most_negative(dec));
  bad.vectors = {Vector{0, 0, 0, 1}};
  RandomStream rng(11);
  EXPECT_THROW(find_anchor_index(tree, bad, 0.01, Backend::kAnalytic, rng), AnchorError);
}

TEST(SignedOverlap, ZeroOverlapShortcut) {
  const Hessian h = diagonal({0.3, -0.8, 0.5, 0.0}, 3);
  const auto dec = eigendecompose(h);
  const KPTree tree(h);
  const auto src = verification_target(dec, most_negative(dec));
  RandomStream rng(12);
  const auto a = find_anchor_index(tree, src, 0.01, Backend::kAnalytic, rng);
  const auto b = signed_overlap_b(tree, src, a, 0, 0.1, 0.05, Backend::kAnalytic, rng);
  EXPECT_TRUE(b.shortcut);
  EXPECT_EQ(b.value, 0.0);
  const auto self = signed_overlap_b(tree, src, a, 1, 0.1, 0.05, Backend::kAnalytic, rng);
  EXPECT_NEAR(self.value, classical_signed_overlap(tree, src.vectors[0], a.index, 1), 0.1);
}

TEST(SignedOverlap, RankOneClosedForm) {
  const double spec[] = {-0.9};
  const Hessian h = generate_synthetic(5, spec, 1.0, 13);
  const auto dec = eigendecompose(h);
  const KPTree tree(h);
  const Vector& v = dec.vectors[0];
  const auto src = verification_target(dec, 0);
  RandomStream rng(13);
  const auto a = find_anchor_index(tree, src, 0.01, Backend::kAnalytic, rng);
  for (std::size_t i = 0; i < 5; ++i) {
    const double want = (v[a.index] * v[i] > 0) ? -1.0 : 1.0;
    EXPECT_NEAR(signed_overlap_b(tree, src, a, i, 0.1, 0.05, Backend::kAnalytic, rng).value, want, 0.1) << i;
  }
}

TEST(SignedOverlap, Seed7CoverageAndSignConsistency) {
  const auto dec = eigendecompose(seed7());
  const KPTree tree(seed7());
  const std::size_t t = most_negative(dec);
  const auto src = verification_target(dec, t);
  const double eps = 0.1, delta = 0.05;
  RandomStream rng(14);
  int failures = 0, total = 0;
  for (int trial = 0; trial < 40; ++trial) {
    RandomStream s = rng.split(trial);
    RandomStream as = s.split("anchor");
    const auto a = find_anchor_index(tree, src, 0.01, Backend::kAnalytic, as);
    Vector est(16), truth(16);
    for (std::size_t i = 0; i < 16; ++i) {
      RandomStream bs = s.split(i);
      est[i] = signed_overlap_b(tree, src, a, i, eps, delta, Backend::kAnalytic, bs).value;
      truth[i] = classical_signed_overlap(tree, dec.vectors[t], a.index, i);
      failures += std::abs(est[i] - truth[i]) > eps;
      ++total;
    }
    // A global sign flip would show up as a large distance to the reference.
    EXPECT_LE(distance(est, truth), sign_agnostic_distance(est, truth) + 1e-12);
  }
  EXPECT_LE(failures, static_cast<int>(delta * total));
}

TEST(SignedOverlap, BackendsAgreeOnSmallInstance) {
  const double spec[] = {-0.7, 0.4};
  const Hessian h = generate_synthetic(5, spec, 1.0, 15);
  const auto dec = eigendecompose(h);
  const KPTree t1(h), t2(h);
  const auto src = verification_target(dec, most_negative(dec));
  RandomStream r1(15), r2(15);
  const auto a1 = find_anchor_index(t1, src, 0.01, Backend::kStatevector, r1);
  const auto a2 = find_anchor_index(t2, src, 0.01, Backend::kAnalytic, r2);
  ASSERT_EQ(a1.index, a2.index);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto b1 = signed_overlap_b(t1, src, a1, i, 0.1, 0.05, Backend::kStatevector, r1);
    const auto b2 = signed_overlap_b(t2, src, a2, i, 0.1, 0.05, Backend::kAnalytic, r2);
    EXPECT_NEAR(b1.value, b2.value, 1e-6);
  }
}

}  // namespace
}  // namespace qncf
