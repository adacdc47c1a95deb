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

// Exact real-amplitude state vectors over labeled registers of arbitrary
// dimension. Registers are ordered; the first register is the most
// significant digit of the flat amplitude index.

#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qncf/error.hpp"
#include "qncf/linalg.hpp"
#include "qncf/random.hpp"

namespace qncf {

inline constexpr double kNormTolerance = 1e-10;

struct Register {
  std::string name;
  std::size_t dim = 0;
  bool operator==(const Register&) const = default;
};

/// Restricts an operation to the branch where `reg` holds `value`.
struct Control {
  std::string reg;
  std::size_t value = 1;
};

class QState {
 public:
  QState(std::vector<Register> registers, Vector amplitudes)
      : registers_(std::move(registers)), amps_(std::move(amplitudes)) {
    std::size_t total = 1;
    for (const auto& r : registers_) {
      if (r.dim == 0) throw ValidationError("register '" + r.name + "' has dimension 0");
      total *= r.dim;
    }
    if (total != amps_.size())
      throw ValidationError("register dimensions do not multiply to amplitude count");
    if (std::abs(qncf::norm(amps_) - 1.0) > kNormTolerance)
      throw ValidationError("state is not normalized");
  }

  static QState basis(std::vector<Register> registers, const std::vector<std::size_t>& labels) {
    if (labels.size() != registers.size()) throw ValidationError("label count mismatch");
    std::size_t total = 1, idx = 0;
    for (std::size_t k = 0; k < registers.size(); ++k) {
      if (labels[k] >= registers[k].dim) throw ValidationError("label out of range");
      total *= registers[k].dim;
      idx = idx * registers[k].dim + labels[k];
    }
    Vector amps(total, 0.0);
    amps[idx] = 1.0;
    return QState(std::move(registers), std::move(amps));
  }

  const std::vector<Register>& registers() const { return registers_; }
  const Vector& amplitudes() const { return amps_; }
  std::size_t size() const { return amps_.size(); }
  double norm() const { return qncf::norm(amps_); }

  std::size_t register_index(const std::string& name) const {
    for (std::size_t k = 0; k < registers_.size(); ++k)
      if (registers_[k].name == name) return k;
    throw ValidationError("no register named '" + name + "'");
  }

  std::size_t dim(const std::string& name) const { return registers_[register_index(name)].dim; }

  /// Distance between consecutive values of register k in the flat index.
  std::size_t stride(std::size_t k) const {
    std::size_t s = 1;
    for (std::size_t j = k + 1; j < registers_.size(); ++j) s *= registers_[j].dim;
    return s;
  }

  std::size_t label(std::size_t flat, std::size_t k) const {
    return (flat / stride(k)) % registers_[k].dim;
  }

  std::size_t flat_index(const std::vector<std::size_t>& labels) const {
    if (labels.size() != registers_.size()) throw ValidationError("label count mismatch");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < registers_.size(); ++k) {
      if (labels[k] >= registers_[k].dim) throw ValidationError("label out of range");
      idx = idx * registers_[k].dim + labels[k];
    }
    return idx;
  }

  double amplitude(const std::vector<std::size_t>& labels) const { return amps_[flat_index(labels)]; }

  /// Marginal outcome distribution of one register.
  Vector probabilities(const std::string& reg) const {
    const std::size_t k = register_index(reg);
    Vector p(registers_[k].dim, 0.0);
    for (std::size_t f = 0; f < amps_.size(); ++f) p[label(f, k)] += amps_[f] * amps_[f];
    return p;
  }

 private:
  std::vector<Register> registers_;
  Vector amps_;
};

/// Tensor product a (x) b; registers of a come first.
inline QState tensor(const QState& a, const QState& b) {
  auto regs = a.registers();
  regs.insert(regs.end(), b.registers().begin(), b.registers().end());
  Vector amps(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) amps[i * b.size() + j] = a.amplitudes()[i] * b.amplitudes()[j];
  return QState(std::move(regs), std::move(amps));
}

/// |v> = v / ||v|| on a single register.
inline QState prepare_vector_state(std::span<const double> v, std::string name = "q") {
  const double n = norm(v);
  if (!(n > 0.0)) throw ValidationError("prepare_vector_state: zero vector");
  return QState({{std::move(name), v.size()}}, scaled(v, 1.0 / n));
}

namespace detail {

// Calls fn(base_flat_index) for every assignment of the registers other than
// `k` (with register k at label 0) that satisfies the optional control.
template <typename Fn>
void for_each_block(const QState& s, std::size_t k, const std::optional<Control>& control, Fn&& fn) {
  const std::size_t stride = s.stride(k);
  const std::size_t dim = s.registers()[k].dim;
  std::optional<std::size_t> ck;
  if (control) {
    ck = s.register_index(control->reg);
    if (*ck == k) throw ValidationError("control register equals target register");
  }
  for (std::size_t f = 0; f < s.size(); ++f) {
    if ((f / stride) % dim != 0) continue;
    if (ck && s.label(f, *ck) != control->value) continue;
    fn(f);
  }
}

inline bool control_active(const QState& s, std::size_t flat, const std::optional<Control>& control) {
  if (!control) return true;
  return s.label(flat, s.register_index(control->reg)) == control->value;
}

}  // namespace detail

/// Applies a dim x dim matrix to one register (optionally controlled).
inline QState apply_matrix(const QState& s, const std::string& reg, const Matrix& m,
                           const std::optional<Control>& control = std::nullopt) {
  const std::size_t k = s.register_index(reg);
  const std::size_t dim = s.registers()[k].dim;
  if (m.rows() != dim || m.cols() != dim) throw ValidationError("apply_matrix: shape mismatch");
  const std::size_t stride = s.stride(k);
  Vector out = s.amplitudes();
  Vector block(dim);
  detail::for_each_block(s, k, control, [&](std::size_t base) {
    for (std::size_t a = 0; a < dim; ++a) block[a] = s.amplitudes()[base + a * stride];
    for (std::size_t a = 0; a < dim; ++a) out[base + a * stride] = dot(m.row(a), block);
  });
  return QState(s.registers(), std::move(out));
}

inline QState hadamard(const QState& s, const std::string& reg,
                       const std::optional<Control>& control = std::nullopt) {
  if (s.dim(reg) != 2) throw ValidationError("hadamard: register '" + reg + "' must have dimension 2");
  Matrix h(2, 2);
  const double c = 1.0 / std::sqrt(2.0);
  h(0, 0) = h(0, 1) = h(1, 0) = c;
  h(1, 1) = -c;
  return apply_matrix(s, reg, h, control);
}

/// Swaps the contents of registers a and b on the branch where `control` is 1.
inline QState controlled_swap(const QState& s, const std::string& reg_a, const std::string& reg_b,
                              const std::string& control) {
  const std::size_t ka = s.register_index(reg_a), kb = s.register_index(reg_b);
  const std::size_t kc = s.register_index(control);
  if (ka == kb || kc == ka || kc == kb) throw ValidationError("controlled_swap: registers must differ");
  if (s.registers()[ka].dim != s.registers()[kb].dim)
    throw ValidationError("controlled_swap: swapped registers differ in dimension");
  if (s.registers()[kc].dim != 2) throw ValidationError("controlled_swap: control must have dimension 2");
  const std::size_t sa = s.stride(ka), sb = s.stride(kb);
  Vector out = s.amplitudes();
  for (std::size_t f = 0; f < s.size(); ++f) {
    if (s.label(f, kc) != 1) continue;
    const std::size_t la = s.label(f, ka), lb = s.label(f, kb);
    const std::size_t g = f - la * sa - lb * sb + lb * sa + la * sb;
    out[g] = s.amplitudes()[f];
  }
  return QState(s.registers(), std::move(out));
}

/// Applies I - 2|axis><axis| to register `reg`, block-wise over all other
/// registers (optionally controlled).
inline QState reflect_about(const QState& s, const std::string& reg, std::span<const double> axis,
                            const std::optional<Control>& control = std::nullopt) {
  const std::size_t k = s.register_index(reg);
  const std::size_t dim = s.registers()[k].dim;
  if (axis.size() != dim) throw ValidationError("reflect_about: axis dimension mismatch");
  if (std::abs(norm(axis) - 1.0) > kNormTolerance) throw ValidationError("reflect_about: axis not normalized");
  const std::size_t stride = s.stride(k);
  Vector out = s.amplitudes();
  detail::for_each_block(s, k, control, [&](std::size_t base) {
    double overlap = 0.0;
    for (std::size_t a = 0; a < dim; ++a) overlap += axis[a] * s.amplitudes()[base + a * stride];
    for (std::size_t a = 0; a < dim; ++a) out[base + a * stride] -= 2.0 * overlap * axis[a];
  });
  return QState(s.registers(), std::move(out));
}

inline QState reflect_about(const QState& s, const QState& axis,
                            const std::optional<Control>& control = std::nullopt) {
  if (axis.registers().size() != 1) throw ValidationError("reflect_about: axis must be a single register");
  const auto& reg = axis.registers().front();
  if (s.dim(reg.name) != reg.dim) throw ValidationError("reflect_about: register shape mismatch");
  return reflect_about(s, reg.name, axis.amplitudes(), control);
}

struct PostSelection {
  QState state;
  double probability;
};

/// Conditional state given `reg` == outcome, plus that outcome's probability.
inline PostSelection post_select(const QState& s, const std::string& reg, std::size_t outcome) {
  const std::size_t k = s.register_index(reg);
  if (outcome >= s.registers()[k].dim) throw ValidationError("post_select: outcome out of range");
  Vector out(s.size(), 0.0);
  double p = 0.0;
  for (std::size_t f = 0; f < s.size(); ++f)
    if (s.label(f, k) == outcome) {
      out[f] = s.amplitudes()[f];
      p += out[f] * out[f];
    }
  if (!(p > 1e-300)) throw PreconditionError("post_select: outcome has zero probability");
  const double scale = 1.0 / std::sqrt(p);
  for (double& x : out) x *= scale;
  return {QState(s.registers(), std::move(out)), p};
}

struct Measurement {
  std::size_t outcome;
  QState state;
  double probability;
};

inline Measurement measure(const QState& s, const std::string& reg, RandomStream& stream) {
  const Vector probs = s.probabilities(reg);
  const std::size_t outcome = stream.categorical(probs);
  auto ps = post_select(s, reg, outcome);
  return {outcome, std::move(ps.state), ps.probability};
}

/// For a product state, the normalized factor living on `reg`. Throws if the
/// state is entangled across `reg` beyond `tol`.
inline QState extract_factor(const QState& s, const std::string& reg, double tol = 1e-9) {
  const std::size_t k = s.register_index(reg);
  const std::size_t dim = s.registers()[k].dim, stride = s.stride(k);
  // Pick the block (assignment of the other registers) with the largest weight.
  std::size_t best_base = 0;
  double best = -1.0;
  detail::for_each_block(s, k, std::nullopt, [&](std::size_t base) {
    double w = 0.0;
    for (std::size_t a = 0; a < dim; ++a) w += s.amplitudes()[base + a * stride] * s.amplitudes()[base + a * stride];
    if (w > best) {
      best = w;
      best_base = base;
    }
  });
  Vector factor(dim);
  for (std::size_t a = 0; a < dim; ++a) factor[a] = s.amplitudes()[best_base + a * stride];
  factor = normalized(factor);
  // Purity check: every block must be parallel to the factor.
  double residual = 0.0;
  detail::for_each_block(s, k, std::nullopt, [&](std::size_t base) {
    double ov = 0.0, w = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double x = s.amplitudes()[base + a * stride];
      ov += factor[a] * x;
      w += x * x;
    }
    residual += w - ov * ov;
  });
  if (residual > tol) throw PreconditionError("extract_factor: state is not a product across register");
  return QState({s.registers()[k]}, std::move(factor));
}

inline double overlap(const QState& a, const QState& b) {
  if (a.registers() != b.registers()) throw ValidationError("overlap: register shape mismatch");
  return dot(a.amplitudes(), b.amplitudes());
}

}  // namespace qncf
