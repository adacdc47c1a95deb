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

// Low-rank symmetric Hessians, their structural assumptions, and the exact
// classical eigendecomposition every simulated subroutine is checked against.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qncf/error.hpp"
#include "qncf/linalg.hpp"
#include "qncf/random.hpp"

namespace qncf {

inline constexpr double kRankTolerance = 1e-10;       // relative to ||H||_F
inline constexpr double kSymmetryTolerance = 1e-12;   // relative to max(1, ||H||_F)

struct Hessian {
  std::size_t d = 0;
  std::size_t r = 0;
  double lipschitz = 1.0;
  Matrix entries;

  Vector column(std::size_t i) const { return entries.column(i); }
  double column_norm(std::size_t i) const { return norm(entries.column(i)); }
  double frobenius() const { return frobenius_norm(entries); }
};

/// Eigenpairs with nonzero eigenvalue, sorted by descending |lambda|.
struct SpectralDecomposition {
  Vector values;
  std::vector<Vector> vectors;
  double frobenius = 0.0;
  std::size_t dim = 0;

  std::size_t rank() const { return values.size(); }

  /// Smallest eigenvalue of the full matrix, counting the null space as 0.
  double lambda_min() const {
    double m = rank() < dim ? 0.0 : INFINITY;
    for (double v : values) m = std::min(m, v);
    return rank() == 0 ? 0.0 : m;
  }

  Matrix reconstruct() const {
    Matrix h(dim, dim);
    for (std::size_t k = 0; k < rank(); ++k)
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          h(i, j) += values[k] * vectors[k][i] * vectors[k][j];
    return h;
  }
};

struct NCFParams {
  double alpha = 0.5;
  double epsilon = 0.2;
  double delta = 0.01;

  /// Threshold for a proper eigenvalue: lambda <= -alpha + epsilon / 2.
  double proper_threshold() const { return -alpha + epsilon / 2.0; }

  void validate(double lipschitz) const {
    if (!(epsilon > 0.0 && epsilon < alpha))
      throw ValidationError("NCF params: require 0 < epsilon < alpha");
    if (!(alpha < lipschitz))
      throw ValidationError("NCF params: require alpha < L");
    if (!(delta > 0.0 && delta < 1.0))
      throw ValidationError("NCF params: require 0 < delta < 1");
  }
};

/// Wraps a dense matrix; checks only shape and symmetry.
inline Hessian make_hessian(Matrix entries, std::size_t rank, double lipschitz) {
  if (!entries.square() || entries.rows() == 0)
    throw ValidationError("Hessian must be a non-empty square matrix");
  const double tol = kSymmetryTolerance * std::max(1.0, frobenius_norm(entries));
  if (max_asymmetry(entries) > tol) throw ValidationError("Hessian is not symmetric");
  if (!(lipschitz > 0.0)) throw ValidationError("Lipschitz constant must be positive");
  if (rank == 0 || rank > entries.rows())
    throw ValidationError("rank must satisfy 1 <= r <= d");
  Hessian h;
  h.d = entries.rows();
  h.r = rank;
  h.lipschitz = lipschitz;
  h.entries = std::move(entries);
  return h;
}

inline SpectralDecomposition eigendecompose(const Matrix& m) {
  if (!m.square()) throw ValidationError("eigendecompose: matrix is not square");
  const double fro = frobenius_norm(m);
  if (max_asymmetry(m) > kSymmetryTolerance * std::max(1.0, fro))
    throw ValidationError("eigendecompose: matrix is not symmetric");

  const auto es = jacobi_eigensystem(m);
  const std::size_t n = m.rows();
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(es.values[k]) > kRankTolerance * fro) keep.push_back(k);
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(es.values[a]), mb = std::abs(es.values[b]);
    if (ma != mb) return ma > mb;
    return es.values[a] < es.values[b];
  });

  SpectralDecomposition out;
  out.frobenius = fro;
  out.dim = n;
  for (std::size_t k : keep) {
    Vector u = es.vectors.column(k);
    // Canonical sign: the largest-magnitude component is positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(u[i]) > std::abs(u[arg]) + 1e-12) arg = i;
    if (u[arg] < 0.0)
      for (double& x : u) x = -x;
    out.values.push_back(es.values[k]);
    out.vectors.push_back(std::move(u));
  }
  return out;
}

inline SpectralDecomposition eigendecompose(const Hessian& h) { return eigendecompose(h.entries); }

/// True iff all pairwise gaps between the nonzero |lambda| exceed eps.
inline bool separation_check(const SpectralDecomposition& decomp, double eps) {
  std::vector<double> mags;
  for (double v : decomp.values) mags.push_back(std::abs(v));
  std::sort(mags.begin(), mags.end());
  for (std::size_t i = 1; i < mags.size(); ++i)
    if (!(mags[i] - mags[i - 1] > eps)) return false;
  return true;
}

inline bool separation_check(std::span<const double> magnitudes, double eps) {
  SpectralDecomposition d;
  d.values.assign(magnitudes.begin(), magnitudes.end());
  return separation_check(d, eps);
}

/// ||H||_F <= sqrt(r) L
inline bool frobenius_bound_check(const Hessian& h) {
  return h.frobenius() <= std::sqrt(static_cast<double>(h.r)) * h.lipschitz + 1e-12;
}

/// Checks every structural assumption; throws ValidationError naming the
/// first one violated. `separation` of 0 skips the separation check.
inline SpectralDecomposition validate_assumptions(const Hessian& h, double separation = 0.0) {
  auto decomp = eigendecompose(h);
  if (decomp.rank() != h.r)
    throw ValidationError("rank assumption violated: declared r=" + std::to_string(h.r) +
                          ", numerical rank " + std::to_string(decomp.rank()));
  for (double v : decomp.values)
    if (std::abs(v) > h.lipschitz * (1.0 + 1e-12))
      throw ValidationError("Lipschitz assumption violated: |lambda| > L");
  if (!frobenius_bound_check(h))
    throw ValidationError("Frobenius bound violated: ||H||_F > sqrt(r) L");
  if (separation > 0.0 && !separation_check(decomp, separation))
    throw ValidationError("separation assumption violated: eigenvalue magnitudes not " +
                          std::to_string(separation) + "-separated");
  return decomp;
}

/// r orthonormal d-vectors from the QR factorization of a Gaussian matrix.
inline std::vector<Vector> random_orthonormal_set(std::size_t d, std::size_t r,
                                                  RandomStream& stream) {
  std::vector<Vector> q;
  while (q.size() < r) {
    Vector g(d);
    for (double& x : g) x = stream.normal();
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& prev : q) axpy(-dot(prev, g), prev, g);
    const double n = norm(g);
    if (n < 1e-8) continue;
    for (double& x : g) x /= n;
    q.push_back(std::move(g));
  }
  return q;
}

inline Matrix sum_of_outer_products(std::span<const double> values,
                                    const std::vector<Vector>& vectors, std::size_t d) {
  Matrix h(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) s += values[k] * vectors[k][i] * vectors[k][j];
      h(i, j) = h(j, i) = s;
    }
  return h;
}

/// H = sum_j lambda_j u_j u_j^T with a seeded random orthonormal set {u_j}.
/// `separation` > 0 additionally enforces eps-separated magnitudes.
inline Hessian generate_synthetic(std::size_t d, std::span<const double> spectrum, double lipschitz,
                                  std::uint64_t seed, double separation = 0.0) {
  const std::size_t r = spectrum.size();
  if (r == 0 || r > d) throw ValidationError("rank assumption violated: require 1 <= r <= d");
  if (!(lipschitz > 0.0)) throw ValidationError("Lipschitz constant must be positive");
  for (double v : spectrum) {
    if (v == 0.0 || !std::isfinite(v))
      throw ValidationError("rank assumption violated: spectrum has a zero eigenvalue");
    if (std::abs(v) > lipschitz)
      throw ValidationError("Lipschitz assumption violated: |lambda| > L");
  }
  if (separation > 0.0 && !separation_check(spectrum, separation))
    throw ValidationError("separation assumption violated: eigenvalue magnitudes not " +
                          std::to_string(separation) + "-separated");
  RandomStream stream(seed, "generate");
  const auto basis = random_orthonormal_set(d, r, stream);
  return make_hessian(sum_of_outer_products(spectrum, basis, d), r, lipschitz);
}

enum class NcfVerdict { kProper, kBoundary, kNoVector };

inline const char* to_string(NcfVerdict v) {
  switch (v) {
    case NcfVerdict::kProper: return "proper";
    case NcfVerdict::kBoundary: return "boundary";
    case NcfVerdict::kNoVector: return "no-vector";
  }
  return "?";
}

struct ClassicalNcfResult {
  NcfVerdict verdict = NcfVerdict::kNoVector;
  double lambda_min = 0.0;
  std::optional<Vector> vector;
  std::optional<std::size_t> eigen_index;
};

/// Reference answer from the exact spectrum.
///   lambda_min <  -alpha               -> proper vector
///   -alpha <= lambda_min <= -alpha+e/2  -> boundary (either answer admissible)
///   lambda_min >  -alpha+e/2           -> no-vector
inline ClassicalNcfResult classical_ncf(const SpectralDecomposition& decomp, const NCFParams& params) {
  ClassicalNcfResult out;
  out.lambda_min = decomp.lambda_min();
  if (out.lambda_min > params.proper_threshold() || decomp.rank() == 0) {
    out.verdict = NcfVerdict::kNoVector;
    return out;
  }
  out.verdict = out.lambda_min < -params.alpha ? NcfVerdict::kProper : NcfVerdict::kBoundary;
  for (std::size_t k = 0; k < decomp.rank(); ++k)
    if (decomp.values[k] == out.lambda_min) {
      out.eigen_index = k;
      out.vector = decomp.vectors[k];
    }
  return out;
}

inline ClassicalNcfResult classical_ncf(const Hessian& h, const NCFParams& params) {
  return classical_ncf(eigendecompose(h), params);
}

/// Independence test: columns {h_g(i)} of a symmetric rank-|g| matrix are
/// independent iff the principal submatrix H'_{jk} = h_{g(j) g(k)} is nonsingular.
/// `flops`, when given, receives the arithmetic operation count.
inline bool independence_check(const Matrix& entries, std::span<const std::size_t> indices,
                               std::uint64_t* flops = nullptr) {
  const std::size_t d = entries.rows();
  std::set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= d) throw ValidationError("independence_check: index out of range");
    if (!seen.insert(i).second) throw ValidationError("independence_check: repeated index");
  }
  const std::size_t r = indices.size();
  Matrix sub(r, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t k = 0; k < r; ++k) sub(j, k) = entries(indices[j], indices[k]);
  const auto f = lu_factor(sub);
  double scale = 1.0;
  for (std::size_t i : indices) {
    double n = 0.0;
    for (std::size_t k = 0; k < d; ++k) n += entries(k, i) * entries(k, i);
    scale *= std::sqrt(n);
  }
  if (flops) *flops = f.flops + r;
  return std::abs(lu_determinant(f)) > 1e-10 * scale;
}

inline bool independence_check(const Hessian& h, std::span<const std::size_t> indices,
                               std::uint64_t* flops = nullptr) {
  if (indices.size() != h.r)
    throw ValidationError("independence_check: need exactly r indices");
  return independence_check(h.entries, indices, flops);
}

}  // namespace qncf
