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

// Singular value estimation as a sampling channel. A call picks eigen-block j
// with its Born weight, collapses onto |u_j>|u_j>, and attaches a magnitude
// estimate that is within eps_est of |lambda_j| unless the call fails, in which
// case the estimate is uniform garbage on [0, ||H||_F].

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qncf/error.hpp"
#include "qncf/hessian.hpp"
#include "qncf/linalg.hpp"
#include "qncf/random.hpp"
#include "qncf/statevector.hpp"

namespace qncf {

enum class NoiseShape { kUniform, kGaussianTruncated };

inline const char* to_string(NoiseShape s) {
  return s == NoiseShape::kUniform ? "uniform" : "gaussian-truncated";
}

inline NoiseShape parse_noise_shape(const std::string& s) {
  if (s == "uniform") return NoiseShape::kUniform;
  if (s == "gaussian-truncated") return NoiseShape::kGaussianTruncated;
  throw ValidationError("unknown noise shape '" + s + "'");
}

struct SVEConfig {
  double eps_est = 0.05;
  double p_fail = 0.0;
  double grid = 0.05 / 8;
  NoiseShape noise = NoiseShape::kUniform;

  /// eps_est = eps/4, p_fail = 1/d^2, grid = eps_est/8.
  static SVEConfig defaults(const NCFParams& params, std::size_t d) {
    SVEConfig c;
    c.eps_est = params.epsilon / 4.0;
    c.p_fail = 1.0 / (static_cast<double>(d) * static_cast<double>(d));
    c.grid = c.eps_est / 8.0;
    return c;
  }

  /// eps_est = 0 is accepted (exact estimates) and then requires grid = 0.
  void validate() const {
    if (!(eps_est >= 0.0) || !std::isfinite(eps_est)) throw ValidationError("SVE: eps_est must be >= 0");
    if (!(p_fail >= 0.0 && p_fail <= 1.0))
      throw ValidationError("SVE: p_fail must lie in [0, 1]");
    if (!(grid >= 0.0) || grid > eps_est) throw ValidationError("SVE: require 0 <= grid <= eps_est");
    if (eps_est > 0.0 && grid == 0.0) throw ValidationError("SVE: grid must be positive when eps_est > 0");
  }
};

inline nlohmann::json to_json(const SVEConfig& c) {
  return {{"eps_est", c.eps_est}, {"p_fail", c.p_fail}, {"grid", c.grid}, {"noise", to_string(c.noise)}};
}

inline SVEConfig sve_config_from_json(const nlohmann::json& j, SVEConfig base) {
  if (j.contains("eps_est")) base.eps_est = j.at("eps_est").get<double>();
  if (j.contains("p_fail")) base.p_fail = j.at("p_fail").get<double>();
  if (j.contains("grid")) base.grid = j.at("grid").get<double>();
  if (j.contains("noise")) base.noise = parse_noise_shape(j.at("noise").get<std::string>());
  base.validate();
  return base;
}

struct SVESample {
  std::size_t index = 0;          // eigen-block j (position in the decomposition)
  double estimate = 0.0;          // |lambda~_j|
  bool failed = false;
  std::optional<QState> collapsed;  // |u_j>|u_j>, statevector path only
};

namespace detail {

inline double snap_within(double x, double center, const SVEConfig& c) {
  if (c.grid == 0.0) return center;
  const double lo = std::max(0.0, center - c.eps_est), hi = center + c.eps_est;
  const auto k_lo = static_cast<long long>(std::ceil(lo / c.grid - 1e-9));
  const auto k_hi = static_cast<long long>(std::floor(hi / c.grid + 1e-9));
  const long long k = std::clamp(std::llround(x / c.grid), k_lo, k_hi);
  return static_cast<double>(k) * c.grid;
}

inline double snap(double x, double grid) {
  return grid == 0.0 ? x : static_cast<double>(std::llround(x / grid)) * grid;
}

inline double truncated_normal_cdf(double z) {  // standard normal truncated to [-2, 2]
  z = std::clamp(z, -2.0, 2.0);
  const double phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double lo = 0.5 * std::erfc(std::sqrt(2.0));
  return (phi - lo) / (1.0 - 2.0 * lo);
}

}  // namespace detail

/// Successful-branch estimate of a magnitude `abs_lambda`.
inline double sve_estimate(double abs_lambda, const SVEConfig& c, RandomStream& stream) {
  if (c.eps_est == 0.0) return abs_lambda;
  double noise = 0.0;
  if (c.noise == NoiseShape::kUniform) {
    noise = stream.uniform(-c.eps_est, c.eps_est);
  } else {
    do noise = 0.5 * c.eps_est * stream.normal();
    while (std::abs(noise) > c.eps_est);
  }
  return detail::snap_within(abs_lambda + noise, abs_lambda, c);
}

/// Exact distribution of the successful-branch estimate as (grid value, probability).
inline std::vector<std::pair<double, double>> estimate_distribution(double abs_lambda, const SVEConfig& c) {
  if (c.eps_est == 0.0) return {{abs_lambda, 1.0}};
  const double lo = std::max(0.0, abs_lambda - c.eps_est), hi = abs_lambda + c.eps_est;
  const auto k_lo = static_cast<long long>(std::ceil(lo / c.grid - 1e-9));
  const auto k_hi = static_cast<long long>(std::floor(hi / c.grid + 1e-9));
  auto cdf = [&](double x) {  // CDF of abs_lambda + noise
    const double t = (x - abs_lambda) / c.eps_est;
    if (c.noise == NoiseShape::kUniform) return std::clamp((t + 1.0) / 2.0, 0.0, 1.0);
    return detail::truncated_normal_cdf(2.0 * t);
  };
  std::vector<std::pair<double, double>> out;
  for (long long k = k_lo; k <= k_hi; ++k) {
    const double a = k == k_lo ? 0.0 : cdf((static_cast<double>(k) - 0.5) * c.grid);
    const double b = k == k_hi ? 1.0 : cdf((static_cast<double>(k) + 0.5) * c.grid);
    if (b > a) out.emplace_back(static_cast<double>(k) * c.grid, b - a);
  }
  return out;
}

/// Probability that one channel call on block |lambda| yields an estimate within
/// `radius` of `center`, including the failure branch.
inline double match_probability(double abs_lambda, double center, double radius, double frobenius,
                                const SVEConfig& c) {
  double ok = 0.0;
  for (const auto& [v, p] : estimate_distribution(abs_lambda, c))
    if (std::abs(v - center) <= radius) ok += p;
  double garbage = 0.0;
  if (c.p_fail > 0.0 && frobenius > 0.0) {
    if (c.grid == 0.0) {
      garbage = std::max(0.0, std::min(frobenius, center + radius) - std::max(0.0, center - radius)) / frobenius;
    } else {
      const auto k_max = static_cast<long long>(std::llround(frobenius / c.grid));
      for (long long k = 0; k <= k_max; ++k) {
        const double g = static_cast<double>(k) * c.grid;
        if (std::abs(g - center) > radius) continue;
        const double a = std::max(0.0, g - c.grid / 2), b = std::min(frobenius, g + c.grid / 2);
        if (b > a) garbage += (b - a) / frobenius;
      }
    }
  }
  return (1.0 - c.p_fail) * ok + c.p_fail * garbage;
}

/// Block Born weights of a (row, col) state in the |u_j>|u_j> basis.
inline Vector block_amplitudes(const QState& joint, const SpectralDecomposition& decomp) {
  if (joint.registers().size() != 2) throw ValidationError("sve_channel: joint state needs two registers");
  const std::size_t d = decomp.dim;
  if (joint.registers()[0].dim != d || joint.registers()[1].dim != d)
    throw ValidationError("sve_channel: register dimensions must equal d");
  Vector beta(decomp.rank(), 0.0);
  const auto& amps = joint.amplitudes();
  for (std::size_t k = 0; k < decomp.rank(); ++k) {
    const Vector& u = decomp.vectors[k];
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      if (u[a] == 0.0) continue;
      double row = 0.0;
      for (std::size_t b = 0; b < d; ++b) row += u[b] * amps[a * d + b];
      s += u[a] * row;
    }
    beta[k] = s;
  }
  return beta;
}

/// Draws (block, estimate, failed) from Born weights. Shared by both backends so
/// equal weights consume the stream identically.
inline SVESample sve_draw(std::span<const double> weights, const SpectralDecomposition& decomp,
                          double frobenius, const SVEConfig& c, RandomStream& stream) {
  SVESample s;
  s.index = stream.categorical(weights);
  s.failed = stream.bernoulli(c.p_fail);
  const double abs_lambda = std::abs(decomp.values[s.index]);
  s.estimate = s.failed ? detail::snap(stream.uniform(0.0, frobenius), c.grid) : sve_estimate(abs_lambda, c, stream);
  return s;
}

/// Born weights lambda_j^2 / ||H||_F^2 of the canonical joint state.
inline Vector canonical_block_weights(const SpectralDecomposition& decomp) {
  Vector w(decomp.rank());
  double total = 0.0;
  for (double v : decomp.values) total += v * v;
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = decomp.values[k] * decomp.values[k] / total;
  return w;
}

/// Statevector path: reads block weights off `joint`, rejects states with
/// weight outside the eigen-block span, returns the collapsed |u_j>|u_j>.
inline SVESample sve_channel(const QState& joint, const SpectralDecomposition& decomp, const SVEConfig& c,
                             RandomStream& stream) {
  c.validate();
  const Vector beta = block_amplitudes(joint, decomp);
  Vector weights(beta.size());
  double captured = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) captured += weights[k] = beta[k] * beta[k];
  if (1.0 - captured > 1e-6)
    throw ValidationError("sve_channel: joint state has weight " + std::to_string(1.0 - captured) +
                          " outside the eigen-block span");
  SVESample s = sve_draw(weights, decomp, decomp.frobenius, c, stream);
  const Vector& u = decomp.vectors[s.index];
  const std::size_t d = decomp.dim;
  Vector amps(d * d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) amps[a * d + b] = u[a] * u[b];
  s.collapsed = QState(joint.registers(), std::move(amps));
  return s;
}

struct EstimateBin {
  double center = 0.0;  // mean of members
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

namespace detail {

/// Half-open [begin, end) runs of a sorted sequence where consecutive gaps are <= gap.
inline std::vector<std::pair<std::size_t, std::size_t>> single_linkage(std::span<const double> sorted,
                                                                      double gap) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= sorted.size(); ++i)
    if (i == sorted.size() || sorted[i] - sorted[i - 1] > gap) {
      runs.emplace_back(begin, i);
      begin = i;
    }
  if (sorted.empty()) runs.clear();
  return runs;
}

}  // namespace detail

/// Single-linkage clustering of estimates with gap threshold eps/2.
inline std::vector<EstimateBin> bin_estimates(std::vector<double> estimates, double eps) {
  std::sort(estimates.begin(), estimates.end());
  std::vector<EstimateBin> bins;
  for (const auto& [b, e] : detail::single_linkage(estimates, eps / 2.0)) {
    EstimateBin bin;
    bin.lo = estimates[b];
    bin.hi = estimates[e - 1];
    bin.count = e - b;
    double sum = 0.0;
    for (std::size_t i = b; i < e; ++i) sum += estimates[i];
    bin.center = sum / static_cast<double>(bin.count);
    bins.push_back(bin);
  }
  return bins;
}

}  // namespace qncf
