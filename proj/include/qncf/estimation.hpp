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

// Shot-based overlap estimators: Hadamard test for column overlaps, SWAP test
// for squared overlaps with the target state, anchor selection and the signed
// target-column overlap.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "json.hpp"
#include "qncf/error.hpp"
#include "qncf/linalg.hpp"
#include "qncf/ncf.hpp"
#include "qncf/oracle.hpp"
#include "qncf/random.hpp"
#include "qncf/statevector.hpp"

namespace qncf {

/// n = floor(2/eps^2 ln(2/delta)) + 1: Hoeffding for the mean of +-1 outcomes.
inline double hoeffding_shot_count(double eps, double delta) {
  if (!(eps > 0.0)) throw ValidationError("shot count: require eps > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("shot count: require 0 < delta < 1");
  return std::floor(2.0 / (eps * eps) * std::log(2.0 / delta)) + 1.0;
}

/// hoeffding_shot_count saturated at 2^63.
inline std::uint64_t hoeffding_shots(double eps, double delta) {
  return saturating_count(hoeffding_shot_count(eps, delta));
}

/// Mean of n outcomes that are +1 with probability p and -1 otherwise. Beyond
/// 2^53 shots the count is drawn from its normal approximation.
inline double sample_pm_mean(double n, double p, RandomStream& stream) {
  if (n <= 0x1.0p53) return 2.0 * static_cast<double>(stream.binomial(static_cast<std::uint64_t>(n), p)) / n - 1.0;
  const double mean = 2.0 * p - 1.0;
  const double sd = 2.0 * std::sqrt(p * (1.0 - p) / n);
  return std::clamp(mean + sd * stream.normal(), -1.0, 1.0);
}

struct OverlapEstimate {
  double value = 0.0;
  std::uint64_t shots = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double p_zero = 0.0;
};

inline nlohmann::json to_json(const OverlapEstimate& e) {
  return {{"value", e.value}, {"shots", e.shots}, {"epsilon", e.epsilon}, {"delta", e.delta}};
}

/// <s_i|s_j> through the tree entries.
inline double column_overlap(const KPTree& tree, std::size_t i, std::size_t j) {
  const double ni = tree.column_norm(i), nj = tree.column_norm(j);
  if (ni == 0.0 || nj == 0.0) throw ValidationError("overlap: zero column");
  if (i == j) return 1.0;
  double s = 0.0;
  for (std::size_t k = 0; k < tree.dim(); ++k) s += tree.entry(k, i) * tree.entry(k, j);
  return s / (ni * nj);
}

/// P(0) of the Hadamard-test circuit
/// |i>|j>|0>|0> -H(anc)-> U_H(gi -> data | anc=0) -> U_H(gj -> data | anc=1) -H(anc)->.
inline double hadamard_probability_statevector(const KPTree& tree, std::size_t i, std::size_t j) {
  const std::size_t d = tree.dim();
  if (d > kStatevectorMaxDim) throw ValidationError("statevector backend requires d <= 64");
  QState s = QState::basis({{"gi", d}, {"gj", d}, {"data", d}, {"anc", 2}}, {i, j, 0, 0});
  s = hadamard(s, "anc");
  s = apply_U_H(tree, s, "gi", "data", Control{"anc", 0});
  s = apply_U_H(tree, s, "gj", "data", Control{"anc", 1});
  s = hadamard(s, "anc");
  return s.probabilities("anc")[0];
}

inline double hadamard_probability(const KPTree& tree, std::size_t i, std::size_t j, Backend backend) {
  if (i >= tree.dim() || j >= tree.dim()) throw ValidationError("hadamard test: index out of range");
  if (tree.column_norm(i) == 0.0 || tree.column_norm(j) == 0.0)
    throw ValidationError("hadamard test: zero column");
  if (backend == Backend::kStatevector) return hadamard_probability_statevector(tree, i, j);
  tree.tally().charge_u(2);
  return 0.5 * (1.0 + column_overlap(tree, i, j));
}

/// Estimates <s_i|s_j> as 2m/n - 1 over hoeffding_shots(eps, delta) shots.
inline OverlapEstimate hadamard_test_overlap(const KPTree& tree, std::size_t i, std::size_t j, double eps,
                                             double delta, Backend backend, RandomStream& stream) {
  OverlapEstimate e;
  e.epsilon = eps;
  e.delta = delta;
  const double n = hoeffding_shot_count(eps, delta);
  e.shots = saturating_count(n);
  e.p_zero = std::clamp(hadamard_probability(tree, i, j, backend), 0.0, 1.0);
  tree.tally().charge_u(saturating_count(2.0 * (n - 1.0)));
  e.value = sample_pm_mean(n, e.p_zero, stream);
  return e;
}

// ---------------------------------------------------------------------------
// SWAP test

/// P(0) of ancilla-H, controlled-SWAP, H on |0>|a>|b>.
inline double swap_probability_statevector(const QState& a, const QState& b) {
  if (a.registers().size() != 1 || b.registers().size() != 1 || a.size() != b.size())
    throw ValidationError("swap test: states must be single registers of equal dimension");
  const QState pa({{"a", a.size()}}, a.amplitudes());
  const QState pb({{"b", b.size()}}, b.amplitudes());
  QState s = tensor(QState::basis({{"anc", 2}}, {0}), tensor(pa, pb));
  s = hadamard(s, "anc");
  s = controlled_swap(s, "a", "b", "anc");
  s = hadamard(s, "anc");
  return s.probabilities("anc")[0];
}

inline double swap_probability_analytic(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("swap test: dimension mismatch");
  const double o = dot(a, b);
  return 0.5 * (1.0 + o * o);
}

struct SwapEstimate {
  double value = 0.0;  // estimate of |<a|b>|^2
  std::uint64_t shots = 0;
  double p_zero = 0.0;
};

/// Estimates |<a|b>|^2 as 2 zeros/shots - 1.
inline SwapEstimate swap_test_sq_overlap(const QState& a, const QState& b, std::uint64_t shots, Backend backend,
                                         RandomStream& stream) {
  if (shots == 0) throw ValidationError("swap test: shots must be positive");
  SwapEstimate e;
  e.shots = shots;
  e.p_zero = backend == Backend::kStatevector ? swap_probability_statevector(a, b)
                                              : swap_probability_analytic(a.amplitudes(), b.amplitudes());
  e.p_zero = std::clamp(e.p_zero, 0.0, 1.0);
  e.value = sample_pm_mean(static_cast<double>(shots), e.p_zero, stream);
  return e;
}

/// SWAP test of a freshly regenerated target copy against |phi> per shot.
/// P(0) averages over the target source mixture.
inline SwapEstimate swap_test_target(const KPTree& tree, const TargetSource& source, std::span<const double> phi,
                                     std::uint64_t shots, std::uint64_t phi_cost, Backend backend,
                                     RandomStream& stream) {
  if (shots == 0) throw ValidationError("swap test: shots must be positive");
  SwapEstimate e;
  e.shots = shots;
  double p = 0.0;
  const QState ps = prepare_vector_state(phi, "phi");
  for (std::size_t k = 0; k < source.vectors.size(); ++k) {
    const double pk = backend == Backend::kStatevector
                          ? swap_probability_statevector(prepare_vector_state(source.vectors[k], "u"), ps)
                          : swap_probability_analytic(source.vectors[k], phi);
    p += source.weights[k] * pk;
  }
  e.p_zero = std::clamp(p, 0.0, 1.0);
  tree.tally().charge_u(saturating_count(static_cast<double>(shots) * static_cast<double>(phi_cost)));
  tree.tally().charge_modeled(saturating_count(std::ceil(source.regeneration_cost * static_cast<double>(shots))));
  e.value = sample_pm_mean(static_cast<double>(shots), e.p_zero, stream);
  return e;
}

// ---------------------------------------------------------------------------
// Anchor

struct AnchorResult {
  std::size_t index = 0;
  double value = 0.0;      // estimated |<u_t|h_k>|^2
  double precision = 0.0;  // per-column estimate precision
  double floor = 0.0;      // sanity gate lambda~^2 / (2 ||H||_F^2)
  std::uint64_t shots = 0; // per column
  Vector estimates;        // per column, 0 for zero columns
};

inline nlohmann::json to_json(const AnchorResult& a) {
  return {{"index", a.index}, {"value", a.value}, {"precision", a.precision},
          {"floor", a.floor}, {"shots_per_column", a.shots}};
}

/// Lower bound on |<u_t|h_k>| implied by the anchor estimate.
inline double anchor_amplitude_floor(const AnchorResult& a) { return std::sqrt(std::max(a.value - a.precision, 0.0)); }

/// argmax_i |<u_t|h_i>|^2 by SWAP tests at precision lambda~^2/(4||H||_F^2).
inline AnchorResult find_anchor_index(const KPTree& tree, const TargetSource& source, double delta,
                                      Backend backend, RandomStream& stream) {
  const std::size_t d = tree.dim();
  const double fro2 = tree.frobenius() * tree.frobenius();
  const double lam2 = source.lambda_estimate * source.lambda_estimate;
  if (!(lam2 > 0.0)) throw PreconditionError("anchor: target eigenvalue estimate must be nonzero");
  AnchorResult a;
  a.floor = lam2 / (2.0 * fro2);
  a.precision = std::min(lam2 / (4.0 * fro2), 1.0);
  a.shots = hoeffding_shots(a.precision, delta / static_cast<double>(d));
  a.estimates.assign(d, 0.0);
  bool any = false;
  for (std::size_t i = 0; i < d; ++i) {
    if (tree.column_norm(i) == 0.0) continue;
    RandomStream s = stream.split(i);
    a.estimates[i] = swap_test_target(tree, source, tree.column_state(i), a.shots, 1, backend, s).value;
    if (!any || a.estimates[i] > a.value) {
      a.index = i;
      a.value = a.estimates[i];
      any = true;
    }
  }
  if (!any || a.value < a.floor)
    throw AnchorError("anchor: best squared overlap " + std::to_string(a.value) + " below floor " +
                      std::to_string(a.floor));
  return a;
}

// ---------------------------------------------------------------------------
// Signed overlap

struct SignedOverlap {
  double value = 0.0;
  double magnitude = 0.0;     // sqrt of the squared-overlap estimate
  double discriminant = 0.0;  // Z+^2 |<u|psi+>|^2 - Z-^2 |<u|psi->|^2
  double sign_precision = 0.0;
  bool shortcut = false;       // magnitude at or below eps/2, reported as 0
  bool low_confidence = false; // |discriminant| inside its noise floor, resolved positive
  std::uint64_t shots = 0;
};

inline nlohmann::json to_json(const SignedOverlap& b) {
  return {{"value", b.value},         {"magnitude", b.magnitude},         {"discriminant", b.discriminant},
          {"shortcut", b.shortcut},   {"low_confidence", b.low_confidence}, {"shots", b.shots}};
}

/// Estimates b_i = sgn(u_t^(k)) <u_t|s_i> to within eps with probability 1 - delta,
/// for a negative target eigenvalue.
inline SignedOverlap signed_overlap_b(const KPTree& tree, const TargetSource& source, const AnchorResult& anchor,
                                      std::size_t column, double eps, double delta, Backend backend,
                                      RandomStream& stream) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("signed overlap: require 0 < eps < 1");
  if (column >= tree.dim()) throw ValidationError("signed overlap: index out of range");
  if (tree.column_norm(column) == 0.0) throw ValidationError("signed overlap: zero column");
  const double part = delta / 4.0;
  SignedOverlap out;

  const double mag_prec = eps * eps / 4.0;
  const std::uint64_t mag_shots = hoeffding_shots(mag_prec, part);
  RandomStream ms = stream.split("magnitude");
  const SwapEstimate sq = swap_test_target(tree, source, tree.column_state(column), mag_shots, 1, backend, ms);
  out.shots = saturating_add(out.shots, mag_shots);
  out.magnitude = std::sqrt(std::clamp(sq.value, 0.0, 1.0));
  if (out.magnitude <= eps / 2.0) {
    out.shortcut = true;
    return out;
  }

  const std::size_t k = anchor.index;
  const double a_lb = anchor_amplitude_floor(anchor);
  if (!(a_lb > 0.0)) throw AnchorError("signed overlap: anchor gives no amplitude floor");
  const double eta = a_lb * eps / 16.0;
  out.sign_precision = eta;

  double c = 1.0;
  if (k != column) {
    RandomStream cs = stream.split("anchor-overlap");
    const OverlapEstimate ce = hadamard_test_overlap(tree, k, column, eta, part, backend, cs);
    out.shots = saturating_add(out.shots, ce.shots);
    c = std::clamp(ce.value, -1.0, 1.0);
  }
  const double true_c = k == column ? 1.0 : column_overlap(tree, k, column);
  const Vector sk = tree.column_state(k), si = tree.column_state(column);
  const std::uint64_t branch_shots = hoeffding_shots(eta, part);
  double disc = 0.0;
  for (int sign : {1, -1}) {
    const double z2_est = 2.0 + 2.0 * sign * c;
    const double z2_true = 2.0 + 2.0 * sign * true_c;
    if (z2_est <= 4.0 * eta || z2_true <= 1e-12) continue;
    Vector psi(sk.size());
    for (std::size_t x = 0; x < psi.size(); ++x) psi[x] = sk[x] + sign * si[x];
    psi = normalized(psi);
    // Heralded on outcome 0 (or 1) of the Hadamard-test preparation.
    const auto cost = static_cast<std::uint64_t>(std::ceil(8.0 / z2_true));
    RandomStream bs = stream.split(sign > 0 ? "psi+" : "psi-");
    const SwapEstimate q = swap_test_target(tree, source, psi, branch_shots, cost, backend, bs);
    out.shots = saturating_add(out.shots, branch_shots);
    disc += sign * z2_est * q.value;
  }
  out.discriminant = disc;
  if (std::abs(disc) <= 8.0 * eta) {
    out.low_confidence = true;
    out.value = out.magnitude;
  } else {
    out.value = disc > 0.0 ? -out.magnitude : out.magnitude;
  }
  return out;
}

/// Classical reference b_i = sgn(u^(k)) <u|s_i>.
inline double classical_signed_overlap(const KPTree& tree, std::span<const double> u, std::size_t anchor,
                                       std::size_t column) {
  const double sgn = u[anchor] >= 0.0 ? 1.0 : -1.0;
  return sgn * dot(u, tree.column_state(column));
}

}  // namespace qncf
