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

// Small dense linear algebra kernels: just enough for the simulator to be
// self-contained and bit-reproducible. Everything is double precision and
// row-major.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "qncf/error.hpp"

namespace qncf {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void set_column(std::size_t j, std::span<const double> v) {
    assert(v.size() == rows_);
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vector scaled(std::span<const double> a, double s) {
  Vector out(a.begin(), a.end());
  for (double& x : out) x *= s;
  return out;
}

inline Vector normalized(std::span<const double> a) { return scaled(a, 1.0 / norm(a)); }

/// y += s * x
inline void axpy(double s, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  axpy(-1.0, b, out);
  return out;
}

inline Vector add(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  axpy(1.0, b, out);
  return out;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return norm(subtract(a, b));
}

/// min(|a - b|, |a + b|)
inline double sign_agnostic_distance(std::span<const double> a, std::span<const double> b) {
  return std::min(norm(subtract(a, b)), norm(add(a, b)));
}

inline Vector matvec(const Matrix& m, std::span<const double> x) {
  assert(m.cols() == x.size());
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  return worst;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] -= b.data()[k];
  return out;
}

inline double max_asymmetry(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

/// Full eigensystem of a symmetric matrix. Column k of `vectors` pairs with
/// `values[k]`; no particular order.
struct SymmetricEigensystem {
  Vector values;
  Matrix vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
inline SymmetricEigensystem jacobi_eigensystem(Matrix a, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  assert(a.square());
  Matrix v = Matrix::identity(n);
  const double scale = std::max(frobenius_norm(a), 1e-300);
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymmetricEigensystem out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  out.sweeps = sweep;
  return out;
}

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
inline double symmetric_spectral_norm(const Matrix& m) {
  const auto es = jacobi_eigensystem(m);
  double best = 0.0;
  for (double x : es.values) best = std::max(best, std::abs(x));
  return best;
}

/// ||M^{-1}|| for symmetric M, i.e. 1 / min |eigenvalue|. Infinity if singular.
inline double symmetric_inverse_norm(const Matrix& m) {
  const auto es = jacobi_eigensystem(m);
  double smallest = INFINITY;
  for (double x : es.values) smallest = std::min(smallest, std::abs(x));
  return smallest > 0.0 ? 1.0 / smallest : INFINITY;
}

struct LuResult {
  Matrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
  std::uint64_t flops = 0;
};

/// Gaussian elimination with partial pivoting. Pivots with magnitude below
/// `pivot_tol` mark the factorization singular.
inline LuResult lu_factor(Matrix a, double pivot_tol = 0.0) {
  const std::size_t n = a.rows();
  assert(a.square());
  LuResult r;
  r.perm.resize(n);
  std::iota(r.perm.begin(), r.perm.end(), std::size_t{0});
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (best <= pivot_tol || best == 0.0) {
      r.singular = true;
      continue;
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(r.perm[k], r.perm[piv]);
      r.sign = -r.sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = f;
      ++r.flops;
      for (std::size_t j = k + 1; j < n; ++j) {
        a(i, j) -= f * a(k, j);
        r.flops += 2;
      }
    }
  }
  r.lu = std::move(a);
  return r;
}

inline double lu_determinant(const LuResult& f) {
  if (f.singular) return 0.0;
  double det = f.sign;
  for (std::size_t i = 0; i < f.lu.rows(); ++i) det *= f.lu(i, i);
  return det;
}

inline Vector lu_solve(const LuResult& f, std::span<const double> b) {
  const std::size_t n = f.lu.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
    x[i] /= f.lu(i, i);
  }
  return x;
}

inline double determinant(const Matrix& m) { return lu_determinant(lu_factor(m)); }

/// Solve m x = b; throws ConditioningError if m is numerically singular.
inline Vector solve(const Matrix& m, std::span<const double> b, double pivot_tol = 0.0) {
  const auto f = lu_factor(m, pivot_tol);
  if (f.singular) throw ConditioningError("linear system is singular");
  return lu_solve(f, b);
}

/// Leading k x k block.
inline Matrix leading_block(const Matrix& m, std::size_t k) {
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, j) = m(i, j);
  return out;
}

/// Gram matrix of the columns of `cols` (each entry a vector).
inline Matrix gram_matrix(const std::vector<Vector>& cols) {
  Matrix g(cols.size(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t j = i; j < cols.size(); ++j) g(i, j) = g(j, i) = dot(cols[i], cols[j]);
  return g;
}

}  // namespace qncf
