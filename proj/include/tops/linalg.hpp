/*
 * Copyright 2026 the tops authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TOPS_LINALG_HPP
#define TOPS_LINALG_HPP

#include <cmath>
#include <optional>
#include <vector>

namespace tops::detail {

/// Cholesky factorization of a symmetric matrix stored row-major; returns
/// false when a pivot is not safely positive. On success `a` holds L in its
/// lower triangle.
inline bool cholesky_in_place(std::vector<double>& a, int n) {
  for (int k = 0; k < n; ++k) {
    double pivot = a[static_cast<std::size_t>(k) * n + k];
    for (int j = 0; j < k; ++j) {
      const double l = a[static_cast<std::size_t>(k) * n + j];
      pivot -= l * l;
    }
    if (!(pivot > 1e-300) || !std::isfinite(pivot)) return false;
    const double lkk = std::sqrt(pivot);
    a[static_cast<std::size_t>(k) * n + k] = lkk;
    for (int i = k + 1; i < n; ++i) {
      double v = a[static_cast<std::size_t>(i) * n + k];
      for (int j = 0; j < k; ++j)
        v -= a[static_cast<std::size_t>(i) * n + j] *
             a[static_cast<std::size_t>(k) * n + j];
      a[static_cast<std::size_t>(i) * n + k] = v / lkk;
    }
  }
  return true;
}

inline std::vector<double> cholesky_solve_factored(const std::vector<double>& l,
                                                   int n,
                                                   std::vector<double> b) {
  for (int i = 0; i < n; ++i) {
    double v = b[static_cast<std::size_t>(i)];
    for (int j = 0; j < i; ++j)
      v -= l[static_cast<std::size_t>(i) * n + j] * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] = v / l[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j)
      v -= l[static_cast<std::size_t>(j) * n + i] * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] = v / l[static_cast<std::size_t>(i) * n + i];
  }
  return b;
}

inline std::optional<std::vector<double>> try_solve_spd(std::vector<double> a,
                                                        int n,
                                                        std::vector<double> b) {
  if (!cholesky_in_place(a, n)) return std::nullopt;
  return cholesky_solve_factored(a, n, std::move(b));
}

/// Solves A x = b for a symmetric PSD normal-equation matrix. When A is
/// singular the system is re-solved with a ridge of eps, scaled by the mean
/// diagonal so the fallback works at any data magnitude.
inline std::vector<double> solve_normal_equations(const std::vector<double>& a,
                                                  int n,
                                                  const std::vector<double>& b,
                                                  double eps) {
  if (auto x = try_solve_spd(a, n, b)) return *x;
  double diag = 0.0;
  for (int i = 0; i < n; ++i) diag += a[static_cast<std::size_t>(i) * n + i];
  const double scale = 1.0 + diag / n;
  std::vector<double> ridged = a;
  double ridge = eps * scale;
  for (int attempt = 0; attempt < 4; ++attempt) {
    for (int i = 0; i < n; ++i)
      ridged[static_cast<std::size_t>(i) * n + i] =
          a[static_cast<std::size_t>(i) * n + i] + ridge;
    if (auto x = try_solve_spd(ridged, n, b)) return *x;
    ridge *= 1e3;
  }
  // PSD + ridge cannot fail unless inputs are pathological.
  std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
  return zero;
}

}  // namespace tops::detail

#endif  // TOPS_LINALG_HPP
