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

// Complete basis selection: quantum Gram-Schmidt over column states with
// reflections built from noisy Gram-Schmidt coordinates.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qncf/error.hpp"
#include "qncf/estimation.hpp"
#include "qncf/hessian.hpp"
#include "qncf/linalg.hpp"
#include "qncf/ncf.hpp"
#include "qncf/oracle.hpp"
#include "qncf/random.hpp"
#include "qncf/statevector.hpp"

namespace qncf {

inline constexpr double kDependenceTolerance = 1e-8;
inline constexpr double kDegenerateRound = 1e-12;

// ---------------------------------------------------------------------------
// Error constants

struct ErrorConstants {
  double eps1 = std::numeric_limits<double>::infinity();
  double eps3 = 0.0;
  bool single_column = false;
};

/// eps3 = eps^2 / (8 (r-1) ||H||_F^2), eps1 = min Z eps^2 / (48 r^3 ||C_r^-1||^2 ||H||_F^2).
/// r = 1 needs no orthogonalization: eps1 = inf, eps3 unused.
inline ErrorConstants error_constants(std::size_t r, double frobenius, double eps, std::span<const double> z_values,
                                      double c_inv_norm) {
  ErrorConstants e;
  if (r == 0) throw ValidationError("error_constants: r must be positive");
  if (r == 1) {
    e.single_column = true;
    return e;
  }
  const double f2 = frobenius * frobenius;
  e.eps3 = eps * eps / (8.0 * static_cast<double>(r - 1) * f2);
  double zmin = 1.0;
  for (double z : z_values) zmin = std::min(zmin, z);
  const double rr = static_cast<double>(r);
  e.eps1 = zmin * eps * eps / (48.0 * rr * rr * rr * c_inv_norm * c_inv_norm * f2);
  return e;
}

/// Per-round Gram-entry tolerance Z_{m+1} eps3 / (6 m^2 ||C_m^-1||^2), which keeps
/// the constructed state within eps3/2 of the exact one.
inline double round_tolerance(std::size_t m, double z_next, double c_inv_norm, double eps3) {
  const double mm = static_cast<double>(m);
  return z_next * eps3 / (6.0 * mm * mm * c_inv_norm * c_inv_norm);
}

/// 3 m^2 ||C_m^-1||^2 eps1 / Z_{m+1}.
inline double construction_error_bound(std::size_t m, double c_inv_norm, double eps1, double z_next) {
  const double mm = static_cast<double>(m);
  return 3.0 * mm * mm * c_inv_norm * c_inv_norm * eps1 / z_next;
}

// ---------------------------------------------------------------------------
// Gram-Schmidt coordinates

struct GramRow {
  Vector x;              // x_{m+1,1..m+1}
  double z = 0.0;        // Z_{m+1}
  double z_det = 0.0;    // sqrt(|C_{m+1}| / |C_m|)
  double det_residual = 0.0;
};

/// Solves C_m y = b; Z^2 = 1 - b^T y; x = (-y/Z, 1/Z). Cross-checks 1/Z against
/// sqrt(|C_m| / |C_{m+1}|).
inline GramRow gram_schmidt_row(const Matrix& c_m, std::span<const double> b, std::size_t m) {
  if (c_m.rows() != m || c_m.cols() != m || b.size() != m) throw ValidationError("gram_schmidt_row: shape mismatch");
  GramRow row;
  Vector y;
  double det_m = 1.0;
  if (m > 0) {
    const auto f = lu_factor(c_m);
    if (f.singular) throw ConditioningError("gram_schmidt_row: C_m is singular");
    y = lu_solve(f, b);
    det_m = lu_determinant(f);
  }
  const double z2 = 1.0 - dot(b, y);
  if (!(z2 > kDependenceTolerance))
    throw DependenceError("gram_schmidt_row: new column is dependent (Z^2 = " + std::to_string(z2) + ")");
  row.z = std::sqrt(z2);
  row.x.resize(m + 1);
  for (std::size_t i = 0; i < m; ++i) row.x[i] = -y[i] / row.z;
  row.x[m] = 1.0 / row.z;

  Matrix c_next(m + 1, m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) c_next(i, j) = c_m(i, j);
    c_next(i, m) = c_next(m, i) = b[i];
  }
  c_next(m, m) = 1.0;
  const double det_next = determinant(c_next);
  row.z_det = std::sqrt(std::max(det_next / det_m, 0.0));
  row.det_residual = std::abs(1.0 / row.z - std::sqrt(det_m / det_next));
  if (!(row.det_residual <= 1e-8 * std::max(1.0, 1.0 / row.z)))
    throw ConditioningError("gram_schmidt_row: determinant identity violated");
  return row;
}

// ---------------------------------------------------------------------------
// Linear sum of states

struct LcsState {
  Vector state;
  double error = 0.0;       // ||state - exact||
  double modeled_cost = 0.0;  // n^{log2(n / eps3)}
};

/// Normalized sum_i coeffs_i states_i, rotated by exactly eps3/2 toward a random
/// orthogonal direction. eps3 = 0 gives the exact combination.
inline LcsState lcs_prepare(std::span<const double> coeffs, const std::vector<Vector>& states, double eps3,
                            RandomStream& stream) {
  if (coeffs.size() != states.size() || states.empty()) throw ValidationError("lcs_prepare: shape mismatch");
  if (!(eps3 >= 0.0 && eps3 < 2.0)) throw ValidationError("lcs_prepare: require 0 <= eps3 < 2");
  const std::size_t d = states.front().size();
  Vector v(d, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) axpy(coeffs[i], states[i], v);
  const double nv = norm(v);
  if (!(nv > 1e-12)) throw ValidationError("lcs_prepare: zero-norm combination");
  v = scaled(v, 1.0 / nv);
  LcsState out;
  const double n = static_cast<double>(states.size());
  if (eps3 == 0.0) {
    out.state = std::move(v);
    out.modeled_cost = n;
    return out;
  }
  out.modeled_cost = std::pow(n, std::log2(n / eps3));
  if (d == 1) {
    out.state = std::move(v);
    return out;
  }
  Vector q(d);
  double nq = 0.0;
  while (nq < 1e-8) {
    for (double& x : q) x = stream.normal();
    axpy(-dot(q, v), v, q);
    nq = norm(q);
  }
  q = scaled(q, 1.0 / nq);
  const double rho = eps3 / 2.0;
  const double theta = 2.0 * std::asin(rho / 2.0);
  Vector w = scaled(v, std::cos(theta));
  axpy(std::sin(theta), q, w);
  out.error = distance(w, v);
  out.state = std::move(w);
  return out;
}

// ---------------------------------------------------------------------------
// Selection state

/// Branch-0 weights of |phi_1>: ||h_j||^2 ||(R_l + I)/2 s_j||^2 / ||H||_F^2, with
/// R_l the product of reflections about the given axes.
struct Phi1 {
  std::optional<QState> state;  // statevector backend only; registers row, col, anc
  Vector branch_zero;           // per column j
  double p_zero = 0.0;
};

namespace detail {

inline Vector apply_reflections(std::span<const double> v, const std::vector<Vector>& axes) {
  Vector w(v.begin(), v.end());
  for (const auto& t : axes) axpy(-2.0 * dot(t, w), t, w);
  return w;
}

}  // namespace detail

/// Amplitudes of |phi_1> computed column by column.
inline Vector phi1_amplitudes(const KPTree& tree, const std::vector<Vector>& axes) {
  const std::size_t d = tree.dim();
  const double fro = tree.frobenius();
  Vector amps(2 * d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double nj = tree.column_norm(j);
    if (nj == 0.0) continue;
    const Vector s = tree.column_state(j);
    const Vector r = detail::apply_reflections(s, axes);
    for (std::size_t k = 0; k < d; ++k) {
      amps[(j * d + k) * 2 + 0] = nj / fro * 0.5 * (r[k] + s[k]);
      amps[(j * d + k) * 2 + 1] = nj / fro * 0.5 * (r[k] - s[k]);
    }
  }
  return amps;
}

inline Phi1 prepare_phi1(const KPTree& tree, const std::vector<Vector>& axes, Backend backend) {
  const std::size_t d = tree.dim();
  Phi1 out;
  out.branch_zero.assign(d, 0.0);
  if (backend == Backend::kStatevector) {
    if (d > kStatevectorMaxDim) throw ValidationError("statevector backend requires d <= 64");
    QState s = tensor(prepare_joint_state(tree), QState::basis({{"anc", 2}}, {0}));
    s = hadamard(s, "anc");
    for (const auto& t : axes) s = reflect_about(s, "col", t, Control{"anc", 0});
    s = hadamard(s, "anc");
    const auto& a = s.amplitudes();
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) out.branch_zero[j] += a[(j * d + k) * 2] * a[(j * d + k) * 2];
    out.state = std::move(s);
  } else {
    tree.tally().charge_u();
    tree.tally().charge_v();
    const double fro2 = tree.frobenius() * tree.frobenius();
    for (std::size_t j = 0; j < d; ++j) {
      const double nj = tree.column_norm(j);
      if (nj == 0.0) continue;
      const Vector s = tree.column_state(j);
      const Vector r = detail::apply_reflections(s, axes);
      double w = 0.0;
      for (std::size_t k = 0; k < d; ++k) w += 0.25 * (r[k] + s[k]) * (r[k] + s[k]);
      out.branch_zero[j] = nj * nj / fro2 * w;
    }
  }
  for (double w : out.branch_zero) out.p_zero += w;
  return out;
}

struct Selection {
  std::size_t index = 0;
  std::uint64_t repetitions = 0;
};

/// Repeats the circuit until the ancilla reads 0 (geometric count), then
/// measures the column register.
inline Selection select_next_index(const Phi1& phi, RandomStream& stream) {
  if (!(phi.p_zero >= kDegenerateRound))
    throw DegenerateRoundError("select_next_index: outcome 0 has probability " + std::to_string(phi.p_zero));
  Selection sel;
  const double u = stream.uniform();
  if (phi.p_zero >= 1.0) {
    sel.repetitions = 1;
  } else {
    const double extra = std::floor(std::log1p(-u) / std::log1p(-phi.p_zero));
    sel.repetitions = 1 + static_cast<std::uint64_t>(std::min(extra, 0x1.0p62));
  }
  sel.index = stream.categorical(phi.branch_zero);
  return sel;
}

// ---------------------------------------------------------------------------
// Bounds

/// (r - l) eps^2 / (4 ||H||_F^2).
inline double measurement_prob_lower_bound(std::size_t l, std::size_t r, double eps, double frobenius) {
  if (l >= r) return 0.0;
  return static_cast<double>(r - l) * eps * eps / (4.0 * frobenius * frobenius);
}

/// sum_{i > l} lambda_i^2 / ||H||_F^2 with lambda_i^2 sorted descending.
inline double spectral_prob_lower_bound(const SpectralDecomposition& decomp, std::size_t l) {
  Vector sq;
  for (double v : decomp.values) sq.push_back(v * v);
  std::sort(sq.begin(), sq.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = l; i < sq.size(); ++i) s += sq[i];
  return s / (decomp.frobenius * decomp.frobenius);
}

/// l^2 eps3^2 / (P_l - l eps3); +inf when the bound is vacuous.
inline double false_selection_bound(std::size_t l, double eps3, double p_l) {
  if (l == 0) return 0.0;
  const double ll = static_cast<double>(l);
  const double den = p_l - ll * eps3;
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return ll * ll * eps3 * eps3 / den;
}

/// Ideal P_l: weight of the components orthogonal to the span of the selected columns.
inline double ideal_round_probability(const KPTree& tree, std::span<const std::size_t> selected) {
  std::vector<Vector> basis;
  for (std::size_t g : selected) {
    Vector v = tree.column_state(g);
    for (const auto& q : basis) axpy(-dot(q, v), q, v);
    const double n = norm(v);
    if (n > 1e-10) basis.push_back(scaled(v, 1.0 / n));
  }
  const double fro2 = tree.frobenius() * tree.frobenius();
  double p = 0.0;
  for (std::size_t j = 0; j < tree.dim(); ++j) {
    const double nj = tree.column_norm(j);
    if (nj == 0.0) continue;
    Vector v = tree.column_state(j);
    for (const auto& q : basis) axpy(-dot(q, v), q, v);
    p += nj * nj * dot(v, v) / fro2;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Full selection

struct GramCoordinates {
  std::vector<Vector> x;  // row m has m + 1 entries
  Vector z;
};

struct BasisRound {
  std::size_t l = 0;
  std::size_t index = 0;
  std::uint64_t repetitions = 0;
  double p_zero = 0.0;      // circuit probability of outcome 0
  double p_ideal = 0.0;     // with exact reflections
  double p_bound = 0.0;     // (r - l) eps^2 / (4 ||H||_F^2)
  double false_bound = 0.0;
  double eps1 = 0.0;        // Gram-entry tolerance used to build t_{l+1}
  double det_residual = 0.0;
  double construction_error = 0.0;  // ||t~ - t|| for the new axis
};

struct BasisOptions {
  Backend backend = Backend::kAnalytic;
  /// eps3 = 0 and exact Gram entries.
  bool exact = false;
  /// Tolerance constants (Z, ||C_m^-1||) from the exact Gram matrix; otherwise
  /// from a pilot estimate with a 2x safety factor.
  bool oracle_constants = true;
  double pilot_precision = 0.02;
  /// Total confidence budget for Gram-entry estimates.
  double delta = 0.01;
};

struct BasisResult {
  std::vector<std::size_t> indices;
  GramCoordinates coords;
  double eps1 = std::numeric_limits<double>::infinity();  // smallest per-round tolerance used
  double eps3 = 0.0;
  std::vector<BasisRound> transcript;
  std::vector<Vector> axes;  // constructed |t~_m>
  Matrix gram;               // Gram entries as estimated, in selection order
  bool success = false;
  std::string failure;
  std::uint64_t gram_shots = 0;
};

namespace detail {

inline Matrix exact_gram(const KPTree& tree, std::span<const std::size_t> idx) {
  Matrix c(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) c(a, b) = column_overlap(tree, idx[a], idx[b]);
  return c;
}

inline Matrix tree_entries(const KPTree& tree) {
  Matrix m(tree.dim(), tree.dim());
  for (std::size_t i = 0; i < tree.dim(); ++i)
    for (std::size_t j = 0; j < tree.dim(); ++j) m(j, i) = tree.entry(j, i);
  return m;
}

/// Estimated Gram entries keyed by unordered pair, re-estimated when a finer
/// precision is requested.
class GramCache {
 public:
  GramCache(const KPTree& tree, Backend backend, double delta_entry, RandomStream stream)
      : tree_(tree), backend_(backend), delta_(delta_entry), stream_(std::move(stream)) {}

  double get(std::size_t i, std::size_t j, double precision) {
    if (i == j) return 1.0;
    const auto key = std::minmax(i, j);
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second.second <= precision) return it->second.first;
    RandomStream s = stream_.split("c" + std::to_string(key.first) + "," + std::to_string(key.second) + "@" +
                                   std::to_string(++requests_));
    const OverlapEstimate e = hadamard_test_overlap(tree_, key.first, key.second, precision, delta_, backend_, s);
    shots_ = saturating_add(shots_, e.shots);
    cache_[key] = {std::clamp(e.value, -1.0, 1.0), precision};
    return cache_[key].first;
  }

  std::uint64_t shots() const { return shots_; }

 private:
  const KPTree& tree_;
  Backend backend_;
  double delta_;
  RandomStream stream_;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> cache_;
  std::uint64_t shots_ = 0;
  std::uint64_t requests_ = 0;
};

}  // namespace detail

inline BasisResult complete_basis_selection(const KPTree& tree, const SpectralDecomposition& decomp, double eps,
                                            const BasisOptions& options, RandomStream& stream) {
  const std::size_t r = decomp.rank();
  if (r == 0) throw PreconditionError("basis selection requires a nonzero Hessian");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("basis selection: require 0 < eps < 1");
  BasisResult out;
  const double fro = tree.frobenius();
  out.eps3 = options.exact || r == 1 ? 0.0 : error_constants(r, fro, eps, {}, 1.0).eps3;
  const std::size_t pairs = std::max<std::size_t>(1, r * (r - 1) / 2);
  detail::GramCache cache(tree, options.backend, options.delta / static_cast<double>(pairs), stream.split("gram"));
  std::vector<Vector> column_states;

  for (std::size_t l = 0; l < r; ++l) {
    BasisRound round;
    round.l = l;
    RandomStream rs = stream.split(l);
    Phi1 phi;
    Selection sel;
    try {
      phi = prepare_phi1(tree, out.axes, options.backend);
      sel = select_next_index(phi, rs);
    } catch (const DegenerateRoundError& e) {
      out.failure = e.what();
      out.transcript.push_back(round);
      break;
    }
    double lcs_cost = 0.0;
    for (std::size_t m = 0; m < out.axes.size(); ++m) {
      const double n = static_cast<double>(m + 1);
      lcs_cost += 2.0 * (out.eps3 == 0.0 ? n : std::pow(n, std::log2(n / out.eps3)));
    }
    tree.tally().charge_u(sel.repetitions - 1);
    tree.tally().charge_v(sel.repetitions - 1);
    tree.tally().charge_modeled(
        static_cast<std::uint64_t>(std::min(static_cast<double>(sel.repetitions) * lcs_cost, 0x1.0p62)));
    round.index = sel.index;
    round.repetitions = sel.repetitions;
    round.p_zero = phi.p_zero;
    round.p_ideal = ideal_round_probability(tree, out.indices);
    round.p_bound = measurement_prob_lower_bound(l, r, eps, fro);
    round.false_bound = false_selection_bound(l, out.eps3, round.p_bound);

    if (std::find(out.indices.begin(), out.indices.end(), sel.index) != out.indices.end()) {
      out.failure = "round " + std::to_string(l) + " reselected column " + std::to_string(sel.index);
      out.transcript.push_back(round);
      break;
    }
    out.indices.push_back(sel.index);
    column_states.push_back(tree.column_state(sel.index));
    const std::size_t m = l;  // columns already in C_m

    // Tolerance for the entries that define t_{m+1}.
    double eps1 = std::numeric_limits<double>::infinity();
    if (m > 0 && !options.exact) {
      double z_next, c_inv;
      if (options.oracle_constants) {
        const Matrix c_exact = detail::exact_gram(tree, out.indices);
        const Matrix c_m = leading_block(c_exact, m);
        Vector b(m);
        for (std::size_t i = 0; i < m; ++i) b[i] = c_exact(i, m);
        const double z2 = 1.0 - dot(b, solve(c_m, b));
        z_next = std::sqrt(std::max(z2, 0.0));
        c_inv = symmetric_inverse_norm(c_m);
      } else {
        Matrix c_pilot(m + 1, m + 1);
        for (std::size_t i = 0; i <= m; ++i)
          for (std::size_t j = 0; j <= m; ++j)
            c_pilot(i, j) = cache.get(out.indices[i], out.indices[j], options.pilot_precision);
        const Matrix c_m = leading_block(c_pilot, m);
        Vector b(m);
        for (std::size_t i = 0; i < m; ++i) b[i] = c_pilot(i, m);
        double z2 = 0.0;
        try {
          z2 = 1.0 - dot(b, solve(c_m, b));
          c_inv = 2.0 * symmetric_inverse_norm(c_m);
        } catch (const ConditioningError&) {
          z2 = 0.0;
          c_inv = 1.0;
        }
        z_next = 0.5 * std::sqrt(std::max(z2, 0.0));
      }
      eps1 = z_next > 0.0 ? std::min(round_tolerance(m, z_next, c_inv, out.eps3), 0.5) : options.pilot_precision;
      out.eps1 = std::min(out.eps1, eps1);
    }
    round.eps1 = eps1;

    // Coordinates x_{m+1,.}.
    Matrix c_next(m + 1, m + 1);
    const Matrix c_true = detail::exact_gram(tree, out.indices);
    for (std::size_t i = 0; i <= m; ++i)
      for (std::size_t j = 0; j <= m; ++j)
        c_next(i, j) = options.exact ? c_true(i, j) : cache.get(out.indices[i], out.indices[j], eps1);
    out.gram = c_next;
    const Matrix c_m = leading_block(c_next, m);
    Vector b(m);
    for (std::size_t i = 0; i < m; ++i) b[i] = c_next(i, m);
    GramRow row;
    try {
      row = gram_schmidt_row(c_m, b, m);
    } catch (const DependenceError& e) {
      out.failure = e.what();
      out.transcript.push_back(round);
      break;
    } catch (const ConditioningError& e) {
      out.failure = e.what();
      out.transcript.push_back(round);
      break;
    }
    round.det_residual = row.det_residual;
    out.coords.x.push_back(row.x);
    out.coords.z.push_back(row.z);

    if (l + 1 < r) {
      RandomStream ls = rs.split("lcs");
      const LcsState t = lcs_prepare(row.x, column_states, out.eps3, ls);
      // Exact axis from classical Gram-Schmidt on the same columns.
      std::vector<Vector> ortho;
      for (const auto& c : column_states) {
        Vector v = c;
        for (const auto& q : ortho) axpy(-dot(q, v), q, v);
        ortho.push_back(normalized(v));
      }
      const Vector& exact = ortho.back();
      round.construction_error = std::min(distance(t.state, exact), distance(t.state, scaled(exact, -1.0)));
      out.axes.push_back(t.state);
    }
    out.transcript.push_back(round);
  }
  out.gram_shots = cache.shots();
  if (out.failure.empty() && out.indices.size() == r)
    out.success = independence_check(detail::tree_entries(tree), out.indices);
  if (!out.success && out.failure.empty()) out.failure = "selected columns are dependent";
  return out;
}

inline nlohmann::json to_json(const BasisResult& b) {
  auto rounds = nlohmann::json::array();
  for (const auto& r : b.transcript)
    rounds.push_back({{"l", r.l},
                      {"index", r.index},
                      {"repetitions", r.repetitions},
                      {"p_zero", r.p_zero},
                      {"p_bound", r.p_bound},
                      {"false_bound", std::isfinite(r.false_bound) ? nlohmann::json(r.false_bound) : nlohmann::json(nullptr)},
                      {"eps1", std::isfinite(r.eps1) ? nlohmann::json(r.eps1) : nlohmann::json(nullptr)},
                      {"det_residual", r.det_residual}});
  return {{"indices", b.indices},
          {"success", b.success},
          {"failure", b.failure},
          {"eps1", std::isfinite(b.eps1) ? nlohmann::json(b.eps1) : nlohmann::json(nullptr)},
          {"eps3", b.eps3},
          {"z", b.coords.z},
          {"gram_shots", b.gram_shots},
          {"rounds", rounds}};
}

}  // namespace qncf
