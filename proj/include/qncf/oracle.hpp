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

// Binary-tree amplitude store and the two loading oracles built on it:
//
//   U_H : |i>|0> -> |i>|h_i>        (row/column state of index i)
//   V_H : |0>|j> -> |h~>|j>         (|h~>_i = ||h_i|| / ||H||_F)
//
// Each column i has a tree whose leaves hold h_ij^2 (sign kept alongside) and
// whose internal nodes hold subtree sums; a second tree over i holds ||h_i||^2.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qncf/error.hpp"
#include "qncf/hessian.hpp"
#include "qncf/linalg.hpp"
#include "qncf/random.hpp"
#include "qncf/statevector.hpp"

namespace qncf {

/// Oracle-call tally. One unit per U_H or V_H application. `modeled` holds
/// units charged by cost models (linear-sum-of-states, target regeneration)
/// rather than by explicit oracle applications.
inline constexpr std::uint64_t kCountCeiling = std::uint64_t{1} << 63;

/// Non-negative count rounded up and clamped to 2^63.
inline std::uint64_t saturating_count(double n) {
  if (!(n > 0.0)) return 0;
  if (n >= 0x1.0p63) return kCountCeiling;
  return static_cast<std::uint64_t>(std::ceil(n));
}

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return (b >= kCountCeiling || a >= kCountCeiling - b) ? kCountCeiling : a + b;
}

/// Oracle call counters. Sums saturate at 2^63.
class QueryTally {
 public:
  QueryTally() = default;
  QueryTally(const QueryTally& o) { *this = o; }
  QueryTally& operator=(const QueryTally& o) {
    u_h_.store(o.u_h());
    v_h_.store(o.v_h());
    modeled_.store(o.modeled());
    return *this;
  }

  void charge_u(std::uint64_t n = 1) { add(u_h_, n); }
  void charge_v(std::uint64_t n = 1) { add(v_h_, n); }
  void charge_modeled(std::uint64_t n) { add(modeled_, n); }

  std::uint64_t u_h() const { return u_h_.load(std::memory_order_relaxed); }
  std::uint64_t v_h() const { return v_h_.load(std::memory_order_relaxed); }
  std::uint64_t modeled() const { return modeled_.load(std::memory_order_relaxed); }
  std::uint64_t oracle_calls() const { return saturating_add(u_h(), v_h()); }

 private:
  static void add(std::atomic<std::uint64_t>& c, std::uint64_t n) {
    std::uint64_t cur = c.load(std::memory_order_relaxed);
    std::uint64_t next;
    do {
      next = saturating_add(cur, n);
    } while (!c.compare_exchange_weak(cur, next, std::memory_order_relaxed));
  }

  std::atomic<std::uint64_t> u_h_{0};
  std::atomic<std::uint64_t> v_h_{0};
  std::atomic<std::uint64_t> modeled_{0};
};

class KPTree {
 public:
  explicit KPTree(const Hessian& h) : d_(h.d) {
    leaves_ = 1;
    while (leaves_ < d_) leaves_ *= 2;
    column_trees_.assign(d_, std::vector<double>(2 * leaves_, 0.0));
    signs_.assign(d_, std::vector<std::int8_t>(d_, 1));
    norm_tree_.assign(2 * leaves_, 0.0);
    for (std::size_t i = 0; i < d_; ++i) {
      auto& t = column_trees_[i];
      for (std::size_t j = 0; j < d_; ++j) {
        const double x = h.entries(j, i);
        t[leaves_ + j] = x * x;
        signs_[i][j] = x < 0.0 ? -1 : 1;
      }
      build_ops_ += sum_up(t);
      norm_tree_[leaves_ + i] = t[1];
    }
    build_ops_ += sum_up(norm_tree_);
    frobenius_ = std::sqrt(norm_tree_[1]);
  }

  std::size_t dim() const { return d_; }
  std::size_t leaf_count() const { return leaves_; }
  double frobenius() const { return frobenius_; }
  double column_norm_sq(std::size_t i) const { return column_trees_.at(i)[1]; }
  double column_norm(std::size_t i) const { return std::sqrt(column_norm_sq(i)); }
  std::uint64_t build_ops() const { return build_ops_; }

  const std::vector<double>& norm_tree() const { return norm_tree_; }
  const std::vector<double>& column_tree(std::size_t i) const { return column_trees_.at(i); }
  int sign(std::size_t i, std::size_t j) const { return signs_.at(i).at(j); }

  /// Entry h_ji reconstructed from the leaf (sign * sqrt(square)).
  double entry(std::size_t j, std::size_t i) const {
    return signs_[i][j] * std::sqrt(column_trees_[i][leaves_ + j]);
  }

  /// Amplitudes of |h_i> read from the column tree.
  Vector column_state(std::size_t i) const {
    const double n2 = column_norm_sq(i);
    if (!(n2 > 0.0)) throw PreconditionError("column " + std::to_string(i) + " has zero norm");
    const double inv = 1.0 / std::sqrt(n2);
    Vector v(d_);
    for (std::size_t j = 0; j < d_; ++j) v[j] = entry(j, i) * inv;
    return v;
  }

  /// Amplitudes of |h~>: ||h_i|| / ||H||_F.
  Vector norm_state() const {
    if (!(frobenius_ > 0.0)) throw PreconditionError("V_H undefined for the zero matrix");
    Vector v(d_);
    for (std::size_t i = 0; i < d_; ++i) v[i] = std::sqrt(norm_tree_[leaves_ + i]) / frobenius_;
    return v;
  }

  /// Samples i with probability ||h_i||^2 / ||H||_F^2 by descending the norm tree.
  std::size_t sample_column(RandomStream& stream) const {
    return descend(norm_tree_, stream);
  }

  /// Samples j with probability h_ji^2 / ||h_i||^2 by descending column tree i.
  std::size_t sample_entry(std::size_t i, RandomStream& stream) const {
    return descend(column_trees_.at(i), stream);
  }

  QueryTally& tally() const { return tally_; }

 private:
  std::uint64_t sum_up(std::vector<double>& t) const {
    std::uint64_t ops = 0;
    for (std::size_t n = leaves_; n-- > 1;) {
      t[n] = t[2 * n] + t[2 * n + 1];
      ++ops;
    }
    return ops;
  }

  std::size_t descend(const std::vector<double>& t, RandomStream& stream) const {
    if (!(t[1] > 0.0)) throw PreconditionError("cannot sample from an empty tree");
    std::size_t n = 1;
    while (n < leaves_) {
      const double left = t[2 * n], total = left + t[2 * n + 1];
      n = (stream.uniform() * total < left) ? 2 * n : 2 * n + 1;
    }
    return n - leaves_;
  }

  std::size_t d_;
  std::size_t leaves_ = 1;
  std::vector<std::vector<double>> column_trees_;
  std::vector<std::vector<std::int8_t>> signs_;
  std::vector<double> norm_tree_;
  double frobenius_ = 0.0;
  std::uint64_t build_ops_ = 0;
  mutable QueryTally tally_;
};

inline KPTree build_kp_tree(const Hessian& h) { return KPTree(h); }

namespace detail {
inline constexpr double kZeroAmplitude = 1e-12;
}

/// |i>|0> -> |i>|h_i> on (index_reg, target_reg); optionally controlled.
/// Branches where the map acts must have the target register in |0>.
inline QState apply_U_H(const KPTree& tree, const QState& s, const std::string& index_reg,
                        const std::string& target_reg,
                        const std::optional<Control>& control = std::nullopt) {
  const std::size_t ki = s.register_index(index_reg), kt = s.register_index(target_reg);
  if (s.registers()[ki].dim != tree.dim() || s.registers()[kt].dim != tree.dim())
    throw ValidationError("apply_U_H: registers must have dimension d");
  const std::size_t st = s.stride(kt);
  Vector out(s.size(), 0.0);
  std::vector<std::optional<Vector>> cache(tree.dim());
  for (std::size_t f = 0; f < s.size(); ++f) {
    const double a = s.amplitudes()[f];
    if (a == 0.0) continue;
    if (!detail::control_active(s, f, control)) {
      out[f] += a;
      continue;
    }
    const std::size_t t = s.label(f, kt);
    if (std::abs(a) <= detail::kZeroAmplitude) continue;
    if (t != 0) throw PreconditionError("apply_U_H: target register not in |0> on an active branch");
    const std::size_t i = s.label(f, ki);
    if (!(tree.column_norm_sq(i) > 0.0))
      throw PreconditionError("apply_U_H: index " + std::to_string(i) + " has a zero column");
    if (!cache[i]) cache[i] = tree.column_state(i);
    for (std::size_t j = 0; j < tree.dim(); ++j) out[f + j * st] += a * (*cache[i])[j];
  }
  tree.tally().charge_u();
  return QState(s.registers(), normalized(out));
}

/// |0>|j> -> |h~>|j> where prep_reg receives |h~>; optionally controlled.
inline QState apply_V_H(const KPTree& tree, const QState& s, const std::string& prep_reg,
                        const std::optional<Control>& control = std::nullopt) {
  const std::size_t kp = s.register_index(prep_reg);
  if (s.registers()[kp].dim != tree.dim()) throw ValidationError("apply_V_H: register must have dimension d");
  const Vector h_tilde = tree.norm_state();
  const std::size_t sp = s.stride(kp);
  Vector out(s.size(), 0.0);
  for (std::size_t f = 0; f < s.size(); ++f) {
    const double a = s.amplitudes()[f];
    if (a == 0.0) continue;
    if (!detail::control_active(s, f, control)) {
      out[f] += a;
      continue;
    }
    if (std::abs(a) <= detail::kZeroAmplitude) continue;
    if (s.label(f, kp) != 0) throw PreconditionError("apply_V_H: register not in |0> on an active branch");
    for (std::size_t i = 0; i < tree.dim(); ++i) out[f + i * sp] += a * h_tilde[i];
  }
  tree.tally().charge_v();
  return QState(s.registers(), normalized(out));
}

/// (1/||H||_F) sum_ij h_ij |i>|j> on registers ("row", "col"), built as
/// |0>|0> --V_H--> sum_i ||h_i|| |i>|0> / ||H||_F --U_H--> result.
inline QState prepare_joint_state(const KPTree& tree) {
  const std::size_t d = tree.dim();
  QState s = QState::basis({{"row", d}, {"col", d}}, {0, 0});
  s = apply_V_H(tree, s, "row");
  return apply_U_H(tree, s, "row", "col");
}

/// P (d^2 x d): columns e_i (x) h_i/||h_i||.  Q (d^2 x d): columns h~ (x) e_j.
/// Then P^T Q = H / ||H||_F and P^T P = Q^T Q = I.
struct PQFactors {
  Matrix p;
  Matrix q;
};

inline PQFactors build_pq(const Hessian& h) {
  const std::size_t d = h.d;
  const double fro = h.frobenius();
  PQFactors f{Matrix(d * d, d), Matrix(d * d, d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double n = h.column_norm(i);
    if (!(n > 0.0)) throw ValidationError("build_pq: column " + std::to_string(i) + " is zero");
    for (std::size_t j = 0; j < d; ++j) f.p(i * d + j, i) = h.entries(j, i) / n;
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) f.q(i * d + j, j) = h.column_norm(i) / fro;
  return f;
}

inline nlohmann::json to_json(const KPTree& tree) {
  nlohmann::json j;
  j["d"] = tree.dim();
  j["frobenius"] = tree.frobenius();
  j["norm_tree"] = tree.norm_tree();
  auto cols = nlohmann::json::array();
  auto signs = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.dim(); ++i) {
    cols.push_back(tree.column_tree(i));
    auto s = nlohmann::json::array();
    for (std::size_t r = 0; r < tree.dim(); ++r) s.push_back(tree.sign(i, r));
    signs.push_back(std::move(s));
  }
  j["column_trees"] = std::move(cols);
  j["signs"] = std::move(signs);
  j["queries"] = {{"U_H", tree.tally().u_h()}, {"V_H", tree.tally().v_h()},
                  {"modeled", tree.tally().modeled()}};
  return j;
}

}  // namespace qncf
