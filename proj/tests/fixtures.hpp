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

#pragma once

#include <array>
#include <cmath>

#include "qncf/hessian.hpp"

namespace qncf::testing {

inline constexpr std::array<double, 4> kSeed7Spectrum{-0.6, 0.4, -0.2, 0.1};

/// d=16, r=4, spectrum {-0.6, 0.4, -0.2, 0.1}, L=1, seed 7.
inline const Hessian& seed7() {
  static const Hessian h = generate_synthetic(16, kSeed7Spectrum, 1.0, 7);
  return h;
}

inline Hessian diagonal(std::initializer_list<double> diag, std::size_t rank, double lipschitz = 1.0) {
  Matrix m(diag.size(), diag.size());
  std::size_t i = 0;
  for (double x : diag) m(i, i) = x, ++i;
  return make_hessian(std::move(m), rank, lipschitz);
}

/// Direct Frobenius norm, entry by entry.
inline double frobenius_direct(const Hessian& h) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.d; ++i)
    for (std::size_t j = 0; j < h.d; ++j) s += h.entries(i, j) * h.entries(i, j);
  return std::sqrt(s);
}

/// Normalized column s_i computed from the raw matrix.
inline Vector unit_column(const Hessian& h, std::size_t i) {
  Vector c(h.d);
  double n = 0.0;
  for (std::size_t j = 0; j < h.d; ++j) {
    c[j] = h.entries(j, i);
    n += c[j] * c[j];
  }
  n = std::sqrt(n);
  for (double& x : c) x /= n;
  return c;
}

}  // namespace qncf::testing
