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

// Coordinate estimation: the estimated Gram system, its solution, the
// reconstructed eigenvector and the end-to-end checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "json.hpp"
#include "qncf/basis.hpp"
#include "qncf/error.hpp"
#include "qncf/estimation.hpp"
#include "qncf/hessian.hpp"
#include "qncf/linalg.hpp"
#include "qncf/ncf.hpp"
#include "qncf/oracle.hpp"
#include "qncf/random.hpp"

namespace qncf {

struct ReadoutTolerances {
  double eps1 = 0.0;  // Gram entries
  double eps2 = 0.0;  // signed target overlaps
};

/// eps1 = eps / (6 r^2 ||C^-1||^2), eps2 = eps / (6 r ||C^-1||).
inline ReadoutTolerances readout_tolerances(std::size_t r, double c_inv_norm, double eps) {
  if (r == 0) throw ValidationError("tolerances: r must be positive");
  if (!(c_inv_norm >= 1.0 - 1e-12)) throw ValidationError("tolerances: ||C^-1|| must be at least 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("tolerances: require 0 < eps < 1");
  const double rr = static_cast<double>(r);
  return {eps / (6.0 * rr * rr * c_inv_norm * c_inv_norm), eps / (6.0 * rr * c_inv_norm)};
}

// ---------------------------------------------------------------------------
// Gram system

struct GramSystem {
  Matrix c;  // C~
  Vector b;  // b~
  ReadoutTolerances tol;
  double c_inv_norm = 0.0;  // value the tolerances were set from
  std::size_t passes = 0;   // Gram estimation passes
  std::uint64_t shots = 0;
  std::vector<SignedOverlap> b_detail;
};

inline nlohmann::json to_json(const GramSystem& s) {
  auto c = nlohmann::json::array();
  for (std::size_t i = 0; i < s.c.rows(); ++i) c.push_back(Vector(s.c.row(i).begin(), s.c.row(i).end()));
  auto detail = nlohmann::json::array();
  for (const auto& b : s.b_detail) detail.push_back(to_json(b));
  return {{"c", c},
          {"b", s.b},
          {"eps1", s.tol.eps1},
          {"eps2", s.tol.eps2},
          {"c_inv_norm", s.c_inv_norm},
          {"passes", s.passes},
          {"shots", s.shots},
          {"b_detail", detail}};
}

struct ReadoutOptions {
  Backend backend = Backend::kAnalytic;
  /// Classical overlaps in place of every estimate.
  bool exact = false;
  /// Tolerances from the exact ||C^-1||; otherwise from 2 ||C~^-1||, refined at most twice.
  bool oracle_constants = false;
};

namespace detail {

/// C~ from Hadamard tests on both orders of every pair, averaged.
inline Matrix estimate_gram(const KPTree& tree, std::span<const std::size_t> idx, double eps1, double delta_entry,
                            Backend backend, RandomStream& stream, std::uint64_t& shots) {
  const std::size_t r = idx.size();
  Matrix raw(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      RandomStream s = stream.split("c" + std::to_string(i) + "," + std::to_string(j));
      const OverlapEstimate e = hadamard_test_overlap(tree, idx[i], idx[j], eps1, delta_entry, backend, s);
      shots = saturating_add(shots, e.shots);
      raw(i, j) = e.value;
    }
  Matrix c(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) c(i, j) = std::clamp(0.5 * (raw(i, j) + raw(j, i)), -1.0, 1.0);
  return c;
}

}  // namespace detail

/// Estimates C~ at eps1 and b~ at eps2, each entry with confidence delta / (r^2 + r).
inline GramSystem assemble_gram_system(const KPTree& tree, const TargetSource& source, const AnchorResult& anchor,
                                       std::span<const std::size_t> indices, double eps, double delta,
                                       const ReadoutOptions& options, RandomStream& stream) {
  const std::size_t r = indices.size();
  if (r == 0) throw ValidationError("gram system: empty index set");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("gram system: require 0 < delta < 1");
  const double rr = static_cast<double>(r);
  const double delta_entry = delta / (rr * rr + rr);
  GramSystem sys;
  const Matrix exact = detail::exact_gram(tree, indices);

  if (options.exact || options.oracle_constants) {
    sys.c_inv_norm = std::max(symmetric_inverse_norm(exact), 1.0);
    if (!std::isfinite(sys.c_inv_norm)) throw ConditioningError("gram system: selected columns are dependent");
    sys.tol = readout_tolerances(r, sys.c_inv_norm, eps);
  }
  if (options.exact) {
    sys.c = exact;
  } else if (options.oracle_constants) {
    RandomStream gs = stream.split("gram");
    sys.c = detail::estimate_gram(tree, indices, sys.tol.eps1, delta_entry, options.backend, gs, sys.shots);
    sys.passes = 1;
  } else {
    // Pilot at ||C^-1|| = 1, then up to two refinements from 2 ||C~^-1||.
    double norm_used = 1.0;
    sys.tol = readout_tolerances(r, norm_used, eps);
    RandomStream gs = stream.split("gram");
    sys.c = detail::estimate_gram(tree, indices, sys.tol.eps1, delta_entry, options.backend, gs, sys.shots);
    sys.passes = 1;
    for (int pass = 0; pass < 2; ++pass) {
      const double est = 2.0 * symmetric_inverse_norm(sys.c);
      if (!std::isfinite(est)) throw ConditioningError("gram system: estimated Gram matrix is singular");
      if (est <= norm_used) break;
      norm_used = est;
      sys.tol = readout_tolerances(r, norm_used, eps);
      RandomStream ps = stream.split("gram-pass" + std::to_string(pass + 1));
      sys.c = detail::estimate_gram(tree, indices, sys.tol.eps1, delta_entry, options.backend, ps, sys.shots);
      ++sys.passes;
    }
    sys.c_inv_norm = norm_used;
  }

  sys.b.assign(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    if (options.exact) {
      sys.b[i] = classical_signed_overlap(tree, source.primary_vector(), anchor.index, indices[i]);
      continue;
    }
    RandomStream bs = stream.split("b" + std::to_string(i));
    SignedOverlap so = signed_overlap_b(tree, source, anchor, indices[i], sys.tol.eps2, delta_entry,
                                        options.backend, bs);
    sys.shots = saturating_add(sys.shots, so.shots);
    sys.b[i] = so.value;
    sys.b_detail.push_back(std::move(so));
  }
  return sys;
}

/// Solves C~ x = b~ by Gaussian elimination with partial pivoting.
inline Vector solve_coordinates(const GramSystem& sys) {
  const std::size_t r = sys.c.rows();
  if (!sys.c.square() || sys.b.size() != r) throw ValidationError("solve_coordinates: shape mismatch");
  const auto f = lu_factor(sys.c);
  if (f.singular) throw ConditioningError("solve_coordinates: C~ is singular");
  const double cond = symmetric_spectral_norm(sys.c) * symmetric_inverse_norm(sys.c);
  const double limit = sys.tol.eps1 > 0.0 ? 1.0 / (2.0 * static_cast<double>(r) * sys.tol.eps1) : 1e12;
  if (!(cond < limit))
    throw ConditioningError("solve_coordinates: condition number " + std::to_string(cond) + " exceeds " +
                            std::to_string(limit));
  Vector x = lu_solve(f, sys.b);
  const Vector res = subtract(matvec(sys.c, x), sys.b);
  if (!(norm(res) <= 1e-10 * std::max(norm(sys.b), std::numeric_limits<double>::min())))
    throw ConditioningError("solve_coordinates: residual too large");
  return x;
}

/// u~ = sum_i x_i h_g(i) / ||h_g(i)||.
inline Vector reconstruct(const Hessian& h, std::span<const std::size_t> indices, std::span<const double> x) {
  if (indices.size() != x.size()) throw ValidationError("reconstruct: shape mismatch");
  Vector u(h.d, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (!std::isfinite(x[i])) throw ValidationError("reconstruct: non-finite coordinate");
    const Vector col = h.entries.column(indices[i]);
    const double n = norm(col);
    if (n == 0.0) throw ValidationError("reconstruct: zero column");
    axpy(x[i] / n, col, u);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Verification

struct ReadoutReport {
  bool applicable = false;
  double norm = 0.0;
  double rayleigh_raw = 0.0;  // u~^T H u~
  double rayleigh = 0.0;      // of u~ / ||u~||
  double distance = 0.0;      // min(||u~ - u||, ||u~ + u||)
  bool rayleigh_pass = false; // rayleigh <= -alpha + eps
  bool distance_pass = false; // distance <= eps / 2
  bool norm_pass = false;     // ||u~|| in [1 - eps/2, 1 + eps/2]
};

inline nlohmann::json to_json(const ReadoutReport& r) {
  if (!r.applicable) return {{"applicable", false}};
  return {{"applicable", true},       {"norm", r.norm},
          {"rayleigh_raw", r.rayleigh_raw}, {"rayleigh", r.rayleigh},
          {"distance", r.distance},   {"rayleigh_pass", r.rayleigh_pass},
          {"distance_pass", r.distance_pass}, {"norm_pass", r.norm_pass}};
}

struct ReadoutResult {
  std::vector<std::size_t> indices;
  Vector x;
  Vector u;
  GramSystem system;
  ReadoutReport report;
};

inline nlohmann::json to_json(const ReadoutResult& r) {
  return {{"indices", r.indices}, {"x", r.x}, {"u", r.u}, {"system", to_json(r.system)},
          {"report", to_json(r.report)}};
}

/// Checks u~ against the classical eigenvector `reference`.
inline ReadoutReport verify_readout(const Hessian& h, const NCFParams& params, std::span<const double> u,
                                    std::span<const double> reference) {
  ReadoutReport rep;
  if (u.size() != h.d || reference.size() != h.d) throw ValidationError("verify_readout: dimension mismatch");
  rep.applicable = true;
  rep.norm = norm(u);
  const Vector hu = matvec(h.entries, u);
  rep.rayleigh_raw = dot(u, hu);
  rep.rayleigh = rep.norm > 0.0 ? rep.rayleigh_raw / (rep.norm * rep.norm) : 0.0;
  rep.distance = sign_agnostic_distance(u, reference);
  rep.rayleigh_pass = rep.norm > 0.0 && rep.rayleigh <= -params.alpha + params.epsilon;
  rep.distance_pass = rep.distance <= params.epsilon / 2.0;
  rep.norm_pass = std::abs(rep.norm - 1.0) <= params.epsilon / 2.0;
  return rep;
}

inline ReadoutReport verify_readout(const Hessian& h, const NCFParams& params, const ReadoutResult& result,
                                    std::span<const double> reference) {
  return verify_readout(h, params, result.u, reference);
}

/// Report for runs that produce no vector.
inline ReadoutReport not_applicable_report() { return {}; }

// ---------------------------------------------------------------------------
// Perturbation check

struct PerturbationCheck {
  bool all_pass = true;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_distance = 0.0;
  ReadoutTolerances tol;
};

/// Applies `trials` symmetric perturbations |dC_ij| <= eps1
/// and |db_i| <= eps2 to an exact system and measures sqrt(dx^T C dx) against
/// eps / 2. Odd trials put every entry at a corner of the box.
inline PerturbationCheck perturbation_bound_check(const Matrix& c, std::span<const double> b, double eps,
                                                  std::size_t trials, RandomStream& stream) {
  const std::size_t r = c.rows();
  if (!c.square() || b.size() != r) throw ValidationError("perturbation check: shape mismatch");
  PerturbationCheck out;
  out.tol = readout_tolerances(r, std::max(symmetric_inverse_norm(c), 1.0), eps);
  const Vector x = solve(c, b);
  auto draw = [&](double bound, bool corner) {
    return corner ? (stream.uniform() < 0.5 ? -bound : bound) : stream.uniform(-bound, bound);
  };
  for (std::size_t t = 0; t < trials; ++t) {
    const bool corner = t % 2 == 1;
    Matrix cp = c;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = i; j < r; ++j) {
        const double d = draw(out.tol.eps1, corner);
        cp(i, j) += d;
        if (j != i) cp(j, i) += d;
      }
    Vector bp(b.begin(), b.end());
    for (double& v : bp) v += draw(out.tol.eps2, corner);
    const Vector dx = subtract(solve(cp, bp), x);
    const double dist = std::sqrt(std::max(dot(dx, matvec(c, dx)), 0.0));
    out.max_distance = std::max(out.max_distance, dist);
    ++out.trials;
    if (!(dist <= eps / 2.0)) {
      ++out.violations;
      out.all_pass = false;
    }
  }
  return out;
}

}  // namespace qncf
