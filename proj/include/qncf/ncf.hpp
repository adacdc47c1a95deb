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

// Sign discrimination, proper-eigenvalue labelling, target-state generation,
// and their composition into the negative-curvature search.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qncf/error.hpp"
#include "qncf/hessian.hpp"
#include "qncf/oracle.hpp"
#include "qncf/random.hpp"
#include "qncf/statevector.hpp"
#include "qncf/sve.hpp"

namespace qncf {

enum class Backend { kStatevector, kAnalytic };

inline const char* to_string(Backend b) { return b == Backend::kStatevector ? "statevector" : "analytic"; }

inline Backend parse_backend(const std::string& s) {
  if (s == "statevector") return Backend::kStatevector;
  if (s == "analytic") return Backend::kAnalytic;
  throw ValidationError("unknown backend '" + s + "'");
}

inline constexpr std::size_t kStatevectorMaxDim = 64;

// ---------------------------------------------------------------------------
// PNED

/// P(1) from the circuit: |u>|0>|0> -H-> -CSWAP-> -(U_H on anc=0, V_H on anc=1)->
/// -H-> measure anc. Charges one U_H and one V_H.
inline double pned_probability_statevector(const KPTree& tree, std::span<const double> u) {
  const std::size_t d = tree.dim();
  if (d > kStatevectorMaxDim) throw ValidationError("statevector backend requires d <= 64");
  if (u.size() != d) throw ValidationError("pned: state dimension must equal d");
  if (std::abs(norm(u) - 1.0) > kNormTolerance) throw ValidationError("pned: input state is not unit");
  Vector amps(2 * d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) amps[(i * d) * 2] = u[i];
  QState s({{"a", d}, {"b", d}, {"anc", 2}}, std::move(amps));
  s = hadamard(s, "anc");
  s = controlled_swap(s, "a", "b", "anc");
  s = apply_U_H(tree, s, "a", "b", Control{"anc", 0});
  s = apply_V_H(tree, s, "a", Control{"anc", 1});
  s = hadamard(s, "anc");
  return s.probabilities("anc")[1];
}

/// P(1) = (1 - u^T H u / ||H||_F) / 2, read through the tree entries.
inline double pned_probability_analytic(const KPTree& tree, std::span<const double> u) {
  const std::size_t d = tree.dim();
  if (u.size() != d) throw ValidationError("pned: state dimension must equal d");
  if (std::abs(norm(u) - 1.0) > kNormTolerance) throw ValidationError("pned: input state is not unit");
  double q = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (u[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += tree.entry(j, i) * u[j];
    q += u[i] * row;
  }
  tree.tally().charge_u();
  tree.tally().charge_v();
  return 0.5 * (1.0 - q / tree.frobenius());
}

inline double pned_probability(const KPTree& tree, std::span<const double> u, Backend backend) {
  return backend == Backend::kStatevector ? pned_probability_statevector(tree, u)
                                          : pned_probability_analytic(tree, u);
}

struct PnedShot {
  int bit = 0;
  double p_one = 0.0;
};

inline PnedShot pned_shot(const KPTree& tree, std::span<const double> u, Backend backend, RandomStream& stream) {
  PnedShot s;
  s.p_one = pned_probability(tree, u, backend);
  s.bit = stream.uniform() < s.p_one ? 1 : 0;
  return s;
}

inline PnedShot pned_shot(const KPTree& tree, const QState& u, Backend backend, RandomStream& stream) {
  if (u.registers().size() != 1) throw ValidationError("pned: expected a single-register state");
  return pned_shot(tree, u.amplitudes(), backend, stream);
}

/// n = 2 floor(||H||_F^2 / a^2 ln(1/delta) - 1/2) + 3.
inline std::uint64_t pned_shot_count(double frobenius, double a, double delta) {
  if (!(a > 0.0)) throw ValidationError("pned_shot_count: require a > 0");
  if (a > frobenius) throw ValidationError("pned_shot_count: a > ||H||_F makes the bound vacuous");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("pned_shot_count: require 0 < delta < 1");
  const double x = std::floor(frobenius * frobenius / (a * a) * std::log(1.0 / delta) - 0.5);
  return static_cast<std::uint64_t>(2.0 * std::max(x, -1.0) + 3.0);
}

struct PNEDVerdict {
  bool negative = false;
  std::uint64_t shots = 0;
  std::uint64_t ones = 0;
  double delta = 0.0;
};

/// Majority vote over pned_shot_count shots. Correct with probability >= 1 - delta
/// when |lambda(u)| >= a; not detected otherwise.
inline PNEDVerdict pned_decide(const KPTree& tree, std::span<const double> u, double a, double delta,
                               Backend backend, RandomStream& stream) {
  PNEDVerdict v;
  v.delta = delta;
  v.shots = pned_shot_count(tree.frobenius(), a, delta);
  const double p = pned_probability(tree, u, backend);
  tree.tally().charge_u(v.shots - 1);
  tree.tally().charge_v(v.shots - 1);
  for (std::uint64_t k = 0; k < v.shots; ++k) v.ones += stream.uniform() < p ? 1 : 0;
  v.negative = 2 * v.ones > v.shots;
  return v;
}

// ---------------------------------------------------------------------------
// Labelling

/// K = ceil((4||H||^2/alpha^2) (2 (4||H||^2/alpha^2) ln(1/delta) + 3)).
inline std::uint64_t labelling_iterations(double frobenius, double alpha, double delta) {
  const double c = 4.0 * frobenius * frobenius / (alpha * alpha);
  return static_cast<std::uint64_t>(std::ceil(c * (2.0 * c * std::log(1.0 / delta) + 3.0)));
}

/// N = floor(4||H||^2/alpha^2 ln(1/delta)) + 1.
inline std::uint64_t target_iterations(double frobenius, double alpha, double delta) {
  return static_cast<std::uint64_t>(std::floor(4.0 * frobenius * frobenius / (alpha * alpha) * std::log(1.0 / delta))) + 1;
}

struct TallyBin {
  double estimate = 0.0;  // bin center |lambda~|
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t n = 0;  // SVE hits
  std::uint64_t m = 0;  // PNED ones
  bool majority_negative() const { return 2 * m > n; }
};

struct EigenvalueTally {
  std::vector<TallyBin> bins;
  std::uint64_t pruned = 0;  // isolated estimates dropped before binning
};

enum class LabelVerdict { kProper, kNoVector };

inline const char* to_string(LabelVerdict v) { return v == LabelVerdict::kProper ? "proper" : "no-vector"; }

struct Labelling {
  LabelVerdict verdict = LabelVerdict::kNoVector;
  std::optional<std::size_t> proper_bin;
  EigenvalueTally tally;
  std::uint64_t iterations = 0;
  std::uint64_t sve_failures = 0;
  std::uint64_t pned_shots = 0;

  const TallyBin& bin() const {
    if (!proper_bin) throw PreconditionError("labelling has no proper bin");
    return tally.bins[*proper_bin];
  }
};

struct LabelOptions {
  /// Floor on the number of other estimates within two grid steps that an
  /// estimate needs to be binned. Raised automatically to cover the expected
  /// density of failed-SVE garbage.
  std::size_t min_support = 2;
  /// Bins with fewer than min_bin_fraction * K * alpha^2 / (4 ||H||_F^2) hits
  /// are dropped.
  double min_bin_fraction = 1.0;
};

namespace detail {

struct Observation {
  double estimate;
  int bit;
};

inline EigenvalueTally tally_observations(std::vector<Observation> obs, double eps, double grid,
                                          std::size_t min_support, std::uint64_t min_bin = 1) {
  std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    return a.estimate < b.estimate || (a.estimate == b.estimate && a.bit < b.bit);
  });
  EigenvalueTally tally;
  const double radius = 2.0 * grid + 1e-12;
  std::vector<Observation> kept;
  kept.reserve(obs.size());
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    while (obs[i].estimate - obs[lo].estimate > radius) ++lo;
    if (hi < i) hi = i;
    while (hi + 1 < obs.size() && obs[hi + 1].estimate - obs[i].estimate <= radius) ++hi;
    if (hi - lo >= min_support)
      kept.push_back(obs[i]);
    else
      ++tally.pruned;
  }
  std::vector<double> values(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) values[i] = kept[i].estimate;
  for (const auto& [b, e] : single_linkage(values, eps / 2.0)) {
    TallyBin bin;
    bin.lo = values[b];
    bin.hi = values[e - 1];
    double sum = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      sum += values[i];
      bin.m += static_cast<std::uint64_t>(kept[i].bit);
    }
    bin.n = e - b;
    bin.estimate = sum / static_cast<double>(bin.n);
    if (bin.n < min_bin)
      tally.pruned += bin.n;
    else
      tally.bins.push_back(bin);
  }
  return tally;
}

/// Support threshold covering failed-SVE garbage: about K p_fail (5 grid)/||H||_F
/// garbage estimates land in a two-step window.
inline std::size_t garbage_support(std::uint64_t iterations, const SVEConfig& config, double frobenius,
                                   std::size_t floor) {
  if (config.grid == 0.0 || config.p_fail == 0.0) return floor;
  const double mu = static_cast<double>(iterations) * config.p_fail * 5.0 * config.grid / frobenius;
  return std::max(floor, static_cast<std::size_t>(std::ceil(3.0 * mu)) + 1);
}

/// Caches P(1) per eigen index; the circuit output depends only on the input state.
class PnedCache {
 public:
  PnedCache(const KPTree& tree, const SpectralDecomposition& decomp, Backend backend)
      : tree_(tree), decomp_(decomp), backend_(backend) {}

  double p_one(std::size_t index, const std::optional<QState>& collapsed) {
    auto it = cache_.find(index);
    if (it != cache_.end()) {
      tree_.tally().charge_u();
      tree_.tally().charge_v();
      return it->second;
    }
    double p;
    if (backend_ == Backend::kStatevector) {
      const QState u = collapsed ? extract_factor(*collapsed, "row")
                                 : prepare_vector_state(decomp_.vectors[index], "row");
      p = pned_probability_statevector(tree_, u.amplitudes());
    } else {
      p = pned_probability_analytic(tree_, decomp_.vectors[index]);
    }
    cache_.emplace(index, p);
    return p;
  }

 private:
  const KPTree& tree_;
  const SpectralDecomposition& decomp_;
  Backend backend_;
  std::map<std::size_t, double> cache_;
};

/// One pass of (prepare joint state, SVE). Both backends draw identically.
inline SVESample joint_sve(const KPTree& tree, const SpectralDecomposition& decomp, const Vector& weights,
                           const SVEConfig& config, Backend backend, RandomStream& stream) {
  if (backend == Backend::kStatevector) return sve_channel(prepare_joint_state(tree), decomp, config, stream);
  tree.tally().charge_v();
  tree.tally().charge_u();
  return sve_draw(weights, decomp, decomp.frobenius, config, stream);
}

}  // namespace detail

inline Labelling label_proper_eigenvalue(const KPTree& tree, const SpectralDecomposition& decomp,
                                         const NCFParams& params, const SVEConfig& config, Backend backend,
                                         RandomStream& stream, const LabelOptions& options = {}) {
  config.validate();
  if (decomp.rank() == 0) throw PreconditionError("labelling requires a nonzero Hessian");
  if (backend == Backend::kStatevector && tree.dim() > kStatevectorMaxDim)
    throw ValidationError("statevector backend requires d <= 64");
  Labelling out;
  out.iterations = labelling_iterations(tree.frobenius(), params.alpha, params.delta);
  const Vector weights = canonical_block_weights(decomp);
  detail::PnedCache pned(tree, decomp, backend);
  std::vector<detail::Observation> obs;
  obs.reserve(out.iterations);
  for (std::uint64_t k = 0; k < out.iterations; ++k) {
    RandomStream it = stream.split(k);
    const SVESample s = detail::joint_sve(tree, decomp, weights, config, backend, it);
    out.sve_failures += s.failed;
    const double p = pned.p_one(s.index, s.collapsed);
    obs.push_back({s.estimate, it.uniform() < p ? 1 : 0});
  }
  out.pned_shots = out.iterations;
  const double fro = tree.frobenius();
  const auto min_bin = static_cast<std::uint64_t>(std::ceil(
      options.min_bin_fraction * static_cast<double>(out.iterations) * params.alpha * params.alpha / (4.0 * fro * fro)));
  out.tally = detail::tally_observations(std::move(obs), params.epsilon, config.grid,
                                         detail::garbage_support(out.iterations, config, fro, options.min_support),
                                         min_bin);

  std::optional<std::size_t> best;
  for (std::size_t b = 0; b < out.tally.bins.size(); ++b)
    if (out.tally.bins[b].majority_negative() &&
        (!best || out.tally.bins[b].estimate > out.tally.bins[*best].estimate))
      best = b;
  if (best && out.tally.bins[*best].estimate >= params.alpha - params.epsilon / 4.0) {
    out.verdict = LabelVerdict::kProper;
    out.proper_bin = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Target state

struct TargetResult {
  bool exhausted = true;
  std::optional<QState> state;        // |u_t> on register "q"
  std::optional<std::size_t> eigen_index;
  bool from_failed_sve = false;
  std::uint64_t iterations = 0;        // iterations actually run
  std::uint64_t max_iterations = 0;
};

/// Match window around the proper bin center.
inline bool matches_bin(double estimate, const TallyBin& bin, const NCFParams& params) {
  return std::abs(estimate - bin.estimate) <= params.epsilon / 2.0;
}

inline TargetResult generate_target_state(const KPTree& tree, const SpectralDecomposition& decomp,
                                          const Labelling& labelling, const NCFParams& params,
                                          const SVEConfig& config, Backend backend, RandomStream& stream) {
  if (labelling.verdict != LabelVerdict::kProper)
    throw PreconditionError("generate_target_state requires a proper labelling");
  const TallyBin& bin = labelling.bin();
  TargetResult out;
  out.max_iterations = target_iterations(tree.frobenius(), params.alpha, params.delta);
  const Vector weights = canonical_block_weights(decomp);
  for (std::uint64_t k = 0; k < out.max_iterations; ++k) {
    RandomStream it = stream.split(k);
    const SVESample s = detail::joint_sve(tree, decomp, weights, config, backend, it);
    out.iterations = k + 1;
    if (!matches_bin(s.estimate, bin, params)) continue;
    out.exhausted = false;
    out.eigen_index = s.index;
    out.from_failed_sve = s.failed;
    QState u = s.collapsed ? extract_factor(*s.collapsed, "row")
                           : prepare_vector_state(decomp.vectors[s.index], "row");
    out.state = QState({{"q", decomp.dim}}, u.amplitudes());
    return out;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Composition

enum class NcfOutcome { kTarget, kNoVector, kExhausted };

inline const char* to_string(NcfOutcome o) {
  switch (o) {
    case NcfOutcome::kTarget: return "proper";
    case NcfOutcome::kNoVector: return "no-vector";
    case NcfOutcome::kExhausted: return "exhausted";
  }
  return "?";
}

struct QuantumNcfResult {
  NcfOutcome outcome = NcfOutcome::kNoVector;
  Labelling labelling;
  std::optional<TargetResult> target;
};

inline QuantumNcfResult quantum_ncf(const KPTree& tree, const SpectralDecomposition& decomp,
                                    const NCFParams& params, const SVEConfig& config, Backend backend,
                                    RandomStream& stream, const LabelOptions& options = {}) {
  QuantumNcfResult out;
  RandomStream label_stream = stream.split("label");
  out.labelling = label_proper_eigenvalue(tree, decomp, params, config, backend, label_stream, options);
  if (out.labelling.verdict == LabelVerdict::kNoVector) {
    out.outcome = NcfOutcome::kNoVector;
    return out;
  }
  RandomStream target_stream = stream.split("target");
  out.target = generate_target_state(tree, decomp, out.labelling, params, config, backend, target_stream);
  out.outcome = out.target->exhausted ? NcfOutcome::kExhausted : NcfOutcome::kTarget;
  return out;
}

inline nlohmann::json to_json(const EigenvalueTally& t) {
  auto bins = nlohmann::json::array();
  for (const auto& b : t.bins)
    bins.push_back({{"estimate", b.estimate}, {"lo", b.lo}, {"hi", b.hi}, {"n", b.n}, {"m", b.m}});
  return {{"bins", bins}, {"pruned", t.pruned}};
}

inline nlohmann::json to_json(const Labelling& l) {
  nlohmann::json j{{"verdict", to_string(l.verdict)},
                   {"iterations", l.iterations},
                   {"sve_failures", l.sve_failures},
                   {"pned_shots", l.pned_shots},
                   {"tally", to_json(l.tally)}};
  j["proper_bin"] = l.proper_bin ? nlohmann::json(*l.proper_bin) : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Target source for overlap estimation

/// Describes the state each overlap-estimation shot receives as |u_t>.
/// Verification mode: exactly the classical eigenvector. Blind mode: the
/// regeneration pipeline's output distribution, i.e. eigenvector k with the
/// probability that a generation iteration matching the proper bin came from
/// block k (failure-branch matches included).
struct TargetSource {
  bool verification = false;
  std::vector<std::size_t> indices;  // eigen indices with nonzero weight
  Vector weights;                    // mixture weights, sum 1
  std::vector<Vector> vectors;       // corresponding eigenvectors
  double lambda_estimate = 0.0;      // |lambda~_t| used by sanity gates
  double regeneration_cost = 0.0;    // expected oracle calls per regenerated copy
  std::size_t primary = 0;           // index into `indices` with the largest weight

  const Vector& primary_vector() const { return vectors[primary]; }

  /// E_k w_k <v|u_k>^2 for a unit vector v.
  double mean_sq_overlap(std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t k = 0; k < vectors.size(); ++k) {
      const double o = dot(v, vectors[k]);
      s += weights[k] * o * o;
    }
    return s;
  }
};

inline TargetSource verification_target(const SpectralDecomposition& decomp, std::size_t eigen_index) {
  TargetSource t;
  t.verification = true;
  t.indices = {eigen_index};
  t.weights = {1.0};
  t.vectors = {decomp.vectors.at(eigen_index)};
  t.lambda_estimate = std::abs(decomp.values[eigen_index]);
  t.regeneration_cost = 0.0;
  return t;
}

inline TargetSource blind_target(const SpectralDecomposition& decomp, const Labelling& labelling,
                                 const NCFParams& params, const SVEConfig& config) {
  const TallyBin& bin = labelling.bin();
  const Vector born = canonical_block_weights(decomp);
  TargetSource t;
  t.lambda_estimate = bin.estimate;
  double total = 0.0;
  for (std::size_t k = 0; k < decomp.rank(); ++k) {
    const double w = born[k] * match_probability(std::abs(decomp.values[k]), bin.estimate,
                                                 params.epsilon / 2.0, decomp.frobenius, config);
    if (w <= 0.0) continue;
    t.indices.push_back(k);
    t.weights.push_back(w);
    t.vectors.push_back(decomp.vectors[k]);
    total += w;
  }
  if (!(total > 0.0)) throw PreconditionError("blind target: no block can match the proper bin");
  for (double& w : t.weights) w /= total;
  t.primary = static_cast<std::size_t>(std::max_element(t.weights.begin(), t.weights.end()) - t.weights.begin());
  t.regeneration_cost = 2.0 / total;
  return t;
}

}  // namespace qncf
