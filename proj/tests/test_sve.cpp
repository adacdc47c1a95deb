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

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "qncf/oracle.hpp"
#include "qncf/sve.hpp"

namespace qncf {
namespace {

using testing::seed7;

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k)
    stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

SVEConfig exact_config() {
  SVEConfig c;
  c.eps_est = 0.0;
  c.grid = 0.0;
  c.p_fail = 0.0;
  return c;
}

TEST(SveConfig, DefaultsAndValidation) {
  const SVEConfig c = SVEConfig::defaults(NCFParams{0.5, 0.2, 0.01}, 16);
  EXPECT_DOUBLE_EQ(c.eps_est, 0.05);
  EXPECT_DOUBLE_EQ(c.p_fail, 1.0 / 256);
  EXPECT_DOUBLE_EQ(c.grid, 0.05 / 8);
  SVEConfig bad = c;
  bad.grid = 0.1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.p_fail = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(SveChannel, RankOneExact) {
  const double spec[] = {-0.8};
  const Hessian h = generate_synthetic(4, spec, 1.0, 3);
  const auto dec = eigendecompose(h);
  const KPTree tree(h);
  RandomStream rng(1);
  for (int i = 0; i < 50; ++i) {
    const SVESample s = sve_channel(prepare_joint_state(tree), dec, exact_config(), rng);
    EXPECT_EQ(s.index, 0u);
    EXPECT_EQ(s.estimate, std::abs(dec.values[0]));
    EXPECT_FALSE(s.failed);
  }
}

TEST(SveChannel, Seed7BlockFrequenciesMatchBornWeights) {
  const auto dec = eigendecompose(seed7());
  const KPTree tree(seed7());
  const SVEConfig c = SVEConfig::defaults(NCFParams{}, 16);
  const QState joint = prepare_joint_state(tree);
  RandomStream rng(7);
  const int n = 10000;
  std::vector<double> counts(dec.rank(), 0.0), expected(dec.rank());
  const double fro2 = std::pow(testing::frobenius_direct(seed7()), 2);
  for (std::size_t k = 0; k < dec.rank(); ++k) expected[k] = n * dec.values[k] * dec.values[k] / fro2;
  int violations = 0;
  for (int i = 0; i < n; ++i) {
    const SVESample s = sve_channel(joint, dec, c, rng);
    counts[s.index] += 1;
    if (!s.failed && std::abs(s.estimate - std::abs(dec.values[s.index])) > c.eps_est + 1e-12) ++violations;
    const double steps = s.estimate / c.grid;
    EXPECT_NEAR(steps, std::round(steps), 1e-6);
    ASSERT_TRUE(s.collapsed);
    double fid = 0.0;
    for (std::size_t a = 0; a < 16; ++a)
      for (std::size_t b = 0; b < 16; ++b)
        fid += s.collapsed->amplitude({a, b}) * dec.vectors[s.index][a] * dec.vectors[s.index][b];
    ASSERT_NEAR(std::abs(fid), 1.0, 1e-10);
  }
  EXPECT_EQ(violations, 0);
  EXPECT_GT(chi_square_p(counts, expected), 0.01);
}

TEST(SveChannel, AllFailWhenPFailIsOne) {
  const auto dec = eigendecompose(seed7());
  const KPTree tree(seed7());
  SVEConfig c = SVEConfig::defaults(NCFParams{}, 16);
  c.p_fail = 1.0;
  RandomStream rng(2);
  for (int i = 0; i < 200; ++i) {
    const SVESample s = sve_channel(prepare_joint_state(tree), dec, c, rng);
    EXPECT_TRUE(s.failed);
    EXPECT_GE(s.estimate, 0.0);
    EXPECT_LE(s.estimate, dec.frobenius + c.grid);
  }
}

TEST(SveChannel, RejectsStateOutsideBlockSpan) {
  const auto dec = eigendecompose(seed7());
  RandomStream rng(3);
  const QState off = QState::basis({{"row", 16}, {"col", 16}}, {0, 1});
  EXPECT_THROW(sve_channel(off, dec, exact_config(), rng), ValidationError);
}

TEST(SveChannel, AcceptsNonCanonicalBlockSuperposition) {
  const auto dec = eigendecompose(seed7());
  Vector amps(256, 0.0);
  const double c = 1 / std::sqrt(2.0);
  for (std::size_t k : {1u, 3u})
    for (std::size_t a = 0; a < 16; ++a)
      for (std::size_t b = 0; b < 16; ++b) amps[a * 16 + b] += c * dec.vectors[k][a] * dec.vectors[k][b];
  const QState s({{"row", 16}, {"col", 16}}, amps);
  RandomStream rng(4);
  int ones = 0;
  for (int i = 0; i < 4000; ++i) {
    const auto out = sve_channel(s, dec, exact_config(), rng);
    ASSERT_TRUE(out.index == 1 || out.index == 3);
    ones += out.index == 1;
  }
  EXPECT_NEAR(ones / 4000.0, 0.5, 4 * std::sqrt(0.25 / 4000));
}

TEST(SveEstimate, HardBoundForBothNoiseShapes) {
  RandomStream rng(5);
  for (NoiseShape shape : {NoiseShape::kUniform, NoiseShape::kGaussianTruncated}) {
    SVEConfig c;
    c.eps_est = 0.05;
    c.grid = 0.05 / 8;
    c.noise = shape;
    for (double lam : {0.0, 0.01, 0.1, 0.37, 0.6}) {
      for (int i = 0; i < 2000; ++i) {
        const double e = sve_estimate(lam, c, rng);
        ASSERT_LE(std::abs(e - lam), c.eps_est + 1e-12);
        ASSERT_GE(e, 0.0);
      }
    }
  }
}

TEST(EstimateDistribution, SumsToOneAndMatchesSampler) {
  RandomStream rng(6);
  for (NoiseShape shape : {NoiseShape::kUniform, NoiseShape::kGaussianTruncated}) {
    SVEConfig c;
    c.eps_est = 0.05;
    c.grid = 0.05 / 8;
    c.noise = shape;
    const double lam = 0.4123;
    const auto dist = estimate_distribution(lam, c);
    double total = 0.0;
    for (const auto& [v, p] : dist) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    const int n = 40000;
    std::map<long long, double> counts;
    for (int i = 0; i < n; ++i) counts[std::llround(sve_estimate(lam, c, rng) / c.grid)] += 1;
    std::vector<double> obs, exp;
    for (const auto& [v, p] : dist) {
      obs.push_back(counts[std::llround(v / c.grid)]);
      exp.push_back(p * n);
    }
    EXPECT_GT(chi_square_p(obs, exp), 0.001) << to_string(shape);
  }
}

TEST(MatchProbability, AgreesWithMonteCarlo) {
  SVEConfig c;
  c.eps_est = 0.05;
  c.grid = 0.05 / 8;
  c.p_fail = 0.2;
  const double fro = 0.755, lam = 0.6, center = 0.58, radius = 0.1;
  const double p = match_probability(lam, center, radius, fro, c);
  RandomStream rng(7);
  const double weights[] = {1.0};
  SpectralDecomposition dec;
  dec.values = {lam};
  dec.vectors = {Vector{1.0}};
  dec.dim = 1;
  dec.frobenius = fro;
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += std::abs(sve_draw(weights, dec, fro, c, rng).estimate - center) <= radius;
  EXPECT_NEAR(hits / double(n), p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(BinEstimates, Examples) {
  const auto two = bin_estimates({0.59, 0.61, 0.20}, 0.2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].count, 1u);
  EXPECT_NEAR(two[1].center, 0.6, 1e-12);
  EXPECT_EQ(two[1].count, 2u);
  EXPECT_EQ(bin_estimates({0.3}, 0.2).size(), 1u);
  EXPECT_TRUE(bin_estimates({}, 0.2).empty());
}

TEST(BinEstimates, NeverMergesSeparatedEigenvalues) {
  RandomStream rng(8);
  const double eps = 0.2;
  SVEConfig c;
  c.eps_est = eps / 4;
  c.grid = c.eps_est / 8;
  for (int t = 0; t < 200; ++t) {
    // Magnitudes with gaps strictly above eps.
    std::vector<double> mags;
    double m = rng.uniform(0.01, 0.2);
    const int r = 2 + t % 4;
    for (int k = 0; k < r; ++k) {
      mags.push_back(m);
      m += eps + rng.uniform(1e-6, 0.2);
    }
    std::vector<double> est;
    std::vector<int> truth;
    for (int i = 0; i < 300; ++i) {
      const int k = static_cast<int>(rng() % mags.size());
      est.push_back(sve_estimate(mags[k], c, rng));
      truth.push_back(k);
    }
    const auto bins = bin_estimates(est, eps);
    for (const auto& b : bins) {
      std::set<int> members;
      for (std::size_t i = 0; i < est.size(); ++i)
        if (est[i] >= b.lo && est[i] <= b.hi) members.insert(truth[i]);
      ASSERT_EQ(members.size(), 1u) << "trial " << t;
    }
  }
}

}  // namespace
}  // namespace qncf
