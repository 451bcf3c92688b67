// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "fcca/common.hpp"

namespace fcca {

// Small dense row-major matrix. Everything in this project is desk scale
// (p <= 128), so the arithmetic is deliberately plain loops: deterministic
// accumulation order, no hidden threading, no external BLAS.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Mat matmul(const Mat& A, const Mat& B) {
  if (A.cols != B.rows) throw invalid_argument("matmul: inner dimensions differ");
  Mat C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

inline std::vector<double> matvec(const Mat& A, const std::vector<double>& x) {
  if (A.cols != x.size()) throw invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(A.rows, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat transpose(const Mat& A) {
  Mat T(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

inline Mat operator+(const Mat& A, const Mat& B) {
  if (A.rows != B.rows || A.cols != B.cols) throw invalid_argument("mat add: shape mismatch");
  Mat C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
  return C;
}

inline Mat operator-(const Mat& A, const Mat& B) {
  if (A.rows != B.rows || A.cols != B.cols) throw invalid_argument("mat sub: shape mismatch");
  Mat C = A;
  for (std::size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
  return C;
}

inline Mat operator*(double c, const Mat& A) {
  Mat C = A;
  for (double& v : C.a) v *= c;
  return C;
}

inline double frob_norm(const Mat& A) {
  double s = 0.0;
  for (double v : A.a) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const Mat& A) {
  double m = 0.0;
  for (double v : A.a) m = std::max(m, std::abs(v));
  return m;
}

// Cyclic Jacobi eigensolver for symmetric matrices.
//
// Sweeps all (p,q) pairs in row order, rotating until the off-diagonal
// Frobenius mass falls below off_tol_rel * ||A0||_F. Convergence is
// quadratic once small; the sweep cap is generous at this scale. Rotation
// formulas follow the numerically stable tan-based variant, which keeps V
// orthogonal to machine precision without re-orthogonalization.
//
// Returns eigenvalues in descending order with matching eigenvector columns.
// Column signs are fixed deterministically: the entry of largest magnitude
// (first such index on ties) is made positive, so repeated runs and different
// thread counts produce identical output.
struct SymEig {
  std::vector<double> values; // descending
  Mat vectors;                // columns are eigenvectors, orthonormal
};

inline SymEig jacobi_eig(Mat A, double off_tol_rel = kJacobiTol,
                         int max_sweeps = kJacobiMaxSweeps) {
  if (A.rows != A.cols) throw invalid_argument("jacobi_eig: matrix not square");
  const std::size_t n = A.rows;
  Mat V = Mat::identity(n);
  if (n == 0) return {{}, V};

  const double target = off_tol_rel * std::max(frob_norm(A), 1e-300);
  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * A(i, j) * A(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > target) {
    if (sweep++ >= max_sweeps)
      throw numerical_error("jacobi_eig: no convergence after " +
                            std::to_string(max_sweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double app = A(p, p), aqq = A(q, q);
        // Skip rotations that cannot move the result at double precision.
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 1.0 / (2.0 * theta); // avoid overflow in theta*theta
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        A(p, p) = app - t * apq;
        A(q, q) = aqq + t * apq;
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != p && k != q) {
            const double akp = A(k, p), akq = A(k, q);
            A(k, p) = akp - s * (akq + tau * akp);
            A(k, q) = akq + s * (akp - tau * akq);
            A(p, k) = A(k, p);
            A(q, k) = A(k, q);
          }
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = vkp - s * (vkq + tau * vkp);
          V(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
    }
  }

  // Sort descending (stable selection keeps ordering deterministic).
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (A(order[j], order[j]) > A(order[best], order[best])) best = j;
    std::swap(order[i], order[best]);
  }

  SymEig out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = A(src, src);
    std::size_t imax = 0;
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(V(i, src)) > vmax) {
        vmax = std::abs(V(i, src));
        imax = i;
      }
    }
    const double sign = V(imax, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * V(i, src);
  }
  return out;
}

} // namespace fcca
