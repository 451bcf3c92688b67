// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fcca/common.hpp"
#include "fcca/grid.hpp"
#include "fcca/mat.hpp"

namespace fcca {

// Linear operator between two gridded L2 spaces.
//
// Convention: the stored matrix acts on VALUE vectors, (Af)(s_i) =
// sum_j m(i,j) f(t_j). An integral operator with kernel k(s,t) therefore
// discretizes as m = K * diag(w_domain), and composition of operators is a
// plain matrix product. Quadrature weights enter only through adjoints,
// inner products and norms:
//
//   adjoint:    m* = W_d^{-1} m^T W_r
//   HS inner:   <A,B> = sum_ij A(i,j) B(i,j) w_r(i) / w_d(j)
//   op norm:    largest singular value of W_r^{1/2} m W_d^{-1/2}
//
// The conjugation A~ = W_r^{1/2} m W_d^{-1/2} maps everything to orthonormal
// coordinates, where self-adjointness is plain symmetry and the HS norm is
// the Frobenius norm; several routines below round-trip through it.
struct LinOp {
  Mat m;
  Grid domain;
  Grid range;

  LinOp() = default;
  LinOp(Mat mat, Grid dom, Grid rng)
      : m(std::move(mat)), domain(std::move(dom)), range(std::move(rng)) {
    if (m.rows != range.size() || m.cols != domain.size())
      throw invalid_argument("linop: matrix shape does not match grids");
  }

  static LinOp identity(const Grid& g) { return LinOp(Mat::identity(g.size()), g, g); }
  static LinOp zero(const Grid& dom, const Grid& rng) {
    return LinOp(Mat(rng.size(), dom.size()), dom, rng);
  }
};

// Discretizes an integral operator from kernel samples K(i,j) = k(s_i, t_j).
inline LinOp op_from_kernel(const Mat& K, const Grid& domain, const Grid& range) {
  if (K.rows != range.size() || K.cols != domain.size())
    throw invalid_argument("op_from_kernel: kernel sample shape mismatch");
  Mat m = K;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) *= domain.weights[j];
  return LinOp(std::move(m), domain, range);
}

inline FunctionVec apply(const LinOp& A, const FunctionVec& f) {
  if (!same_grid(A.domain, f.grid))
    throw invalid_argument("apply: function grid differs from operator domain");
  return FunctionVec(A.range, matvec(A.m, f.values));
}

// compose(A, B) is the operator A B: first B, then A.
inline LinOp compose(const LinOp& A, const LinOp& B) {
  if (!same_grid(A.domain, B.range))
    throw invalid_argument("compose: inner grids do not match");
  return LinOp(matmul(A.m, B.m), B.domain, A.range);
}

inline LinOp adjoint(const LinOp& A) {
  Mat t = transpose(A.m);
  for (std::size_t i = 0; i < t.rows; ++i)
    for (std::size_t j = 0; j < t.cols; ++j)
      t(i, j) *= A.range.weights[j] / A.domain.weights[i];
  return LinOp(std::move(t), A.range, A.domain);
}

inline LinOp operator+(const LinOp& A, const LinOp& B) {
  if (!same_grid(A.domain, B.domain) || !same_grid(A.range, B.range))
    throw invalid_argument("linop add: grid mismatch");
  return LinOp(A.m + B.m, A.domain, A.range);
}

inline LinOp operator-(const LinOp& A, const LinOp& B) {
  if (!same_grid(A.domain, B.domain) || !same_grid(A.range, B.range))
    throw invalid_argument("linop sub: grid mismatch");
  return LinOp(A.m - B.m, A.domain, A.range);
}

inline LinOp operator*(double c, const LinOp& A) { return LinOp(c * A.m, A.domain, A.range); }

// Rank-one operator h |-> <f, h> g, written g (x) f. Matrix entries
// g(i) f(j) w_f(j); domain is f's grid, range is g's.
inline LinOp tensor_outer(const FunctionVec& f, const FunctionVec& g) {
  Mat m(g.size(), f.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < f.size(); ++j)
      m(i, j) = g.values[i] * f.values[j] * f.grid.weights[j];
  return LinOp(std::move(m), f.grid, g.grid);
}

inline double hs_inner(const LinOp& A, const LinOp& B) {
  if (!same_grid(A.domain, B.domain) || !same_grid(A.range, B.range))
    throw invalid_argument("hs_inner: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < A.m.rows; ++i)
    for (std::size_t j = 0; j < A.m.cols; ++j)
      s += A.m(i, j) * B.m(i, j) * A.range.weights[i] / A.domain.weights[j];
  return s;
}

inline double hs_norm(const LinOp& A) { return std::sqrt(std::max(hs_inner(A, A), 0.0)); }

// Maps to orthonormal coordinates: W_r^{1/2} m W_d^{-1/2}.
inline Mat to_orthonormal(const LinOp& A) {
  Mat t = A.m;
  for (std::size_t i = 0; i < t.rows; ++i)
    for (std::size_t j = 0; j < t.cols; ++j)
      t(i, j) *= std::sqrt(A.range.weights[i]) / std::sqrt(A.domain.weights[j]);
  return t;
}

inline LinOp from_orthonormal(Mat t, const Grid& domain, const Grid& range) {
  if (t.rows != range.size() || t.cols != domain.size())
    throw invalid_argument("from_orthonormal: shape mismatch");
  for (std::size_t i = 0; i < t.rows; ++i)
    for (std::size_t j = 0; j < t.cols; ++j)
      t(i, j) *= std::sqrt(domain.weights[j]) / std::sqrt(range.weights[i]);
  return LinOp(std::move(t), domain, range);
}

inline double op_norm(const LinOp& A) {
  const Mat t = to_orthonormal(A);
  // Largest singular value via the Gram matrix; symmetric by construction.
  const Mat g = matmul(transpose(t), t);
  const SymEig e = jacobi_eig(g);
  return e.values.empty() ? 0.0 : std::sqrt(std::max(e.values.front(), 0.0));
}

inline double self_adjoint_defect(const LinOp& A) {
  if (!same_grid(A.domain, A.range)) return hs_norm(A); // cannot be self-adjoint
  return hs_norm(A - adjoint(A));
}

// Full spectral decomposition of a self-adjoint operator. Eigenvalues are
// descending; eigenfunctions are L2-orthonormal on the grid. `groups` holds
// [begin, end) index ranges of numerically coincident eigenvalues, the unit
// every perturbation statement below is phrased in.
struct EigenSystem {
  std::vector<double> values;
  std::vector<FunctionVec> functions;
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  Grid grid;

  std::size_t size() const { return values.size(); }
};

inline std::vector<std::pair<std::size_t, std::size_t>>
group_eigenvalues(const std::vector<double>& values, double group_tol = kGroupTol) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  if (values.empty()) return groups;
  const double scale = std::max(std::abs(values.front()), 1e-300);
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= values.size(); ++i) {
    if (i == values.size() || std::abs(values[i] - values[i - 1]) > group_tol * scale) {
      groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return groups;
}

// Eigendecomposition via cyclic Jacobi on the orthonormal-coordinate image.
// Requires the self-adjointness defect to be at most 1e-8 of the operator's
// HS norm; the defect that remains is symmetrized away before rotating.
inline EigenSystem eig_self_adjoint(const LinOp& A, double group_tol = kGroupTol) {
  if (!same_grid(A.domain, A.range))
    throw invalid_argument("eig_self_adjoint: domain and range differ");
  const double scale = std::max(hs_norm(A), 1e-300);
  if (self_adjoint_defect(A) > 1e-8 * scale)
    throw invariant_failure("eig_self_adjoint: operator is not self-adjoint");

  Mat t = to_orthonormal(A);
  for (std::size_t i = 0; i < t.rows; ++i)
    for (std::size_t j = i + 1; j < t.cols; ++j) {
      const double s = 0.5 * (t(i, j) + t(j, i));
      t(i, j) = s;
      t(j, i) = s;
    }
  const SymEig e = jacobi_eig(t);

  EigenSystem es;
  es.grid = A.domain;
  es.values = e.values;
  es.functions.reserve(e.values.size());
  const std::size_t n = e.values.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = e.vectors(i, k) / std::sqrt(es.grid.weights[i]);
    // Deterministic sign: make the largest-magnitude sample positive.
    std::size_t imax = 0;
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(v[i]) > vmax) { vmax = std::abs(v[i]); imax = i; }
    if (v[imax] < 0.0)
      for (double& x : v) x = -x;
    es.functions.emplace_back(es.grid, std::move(v));
  }
  es.groups = group_eigenvalues(es.values, group_tol);
  return es;
}

// sum_k f(lambda_k) phi_k (x) phi_k. The workhorse behind every function of
// a self-adjoint operator in the library.
inline LinOp spectral_apply(const EigenSystem& es, const std::function<double(double)>& f) {
  const std::size_t n = es.size();
  Mat m(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = f(es.values[k]);
    if (c == 0.0) continue;
    const std::vector<double>& phi = es.functions[k].values;
    for (std::size_t i = 0; i < n; ++i) {
      const double ci = c * phi[i];
      if (ci == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) m(i, j) += ci * phi[j] * es.grid.weights[j];
    }
  }
  return LinOp(std::move(m), es.grid, es.grid);
}

inline LinOp reconstruct(const EigenSystem& es) {
  return spectral_apply(es, [](double x) { return x; });
}

inline LinOp group_projector(const EigenSystem& es, std::size_t group_index) {
  if (group_index >= es.groups.size())
    throw invalid_argument("group_projector: group index out of range");
  const auto [b, e] = es.groups[group_index];
  LinOp P = LinOp::zero(es.grid, es.grid);
  for (std::size_t k = b; k < e; ++k)
    P = P + tensor_outer(es.functions[k], es.functions[k]);
  return P;
}

// Projector onto the span of the leading r eigenfunctions.
inline LinOp leading_projector(const EigenSystem& es, std::size_t r) {
  if (r > es.size()) throw invalid_argument("leading_projector: rank exceeds dimension");
  LinOp P = LinOp::zero(es.grid, es.grid);
  for (std::size_t k = 0; k < r; ++k)
    P = P + tensor_outer(es.functions[k], es.functions[k]);
  return P;
}

inline void require_psd(const EigenSystem& es, double rank_tol, const char* who) {
  if (es.values.empty()) return;
  const double top = std::max(es.values.front(), 0.0);
  for (double v : es.values)
    if (v < -rank_tol * std::max(top, 1e-300))
      throw invariant_failure(std::string(who) + ": operator is not positive semidefinite");
}

// Moore-Penrose pseudoinverse of a PSD operator: invert eigenvalues above
// rank_tol * lambda_1, zero the rest.
inline LinOp moore_penrose(const EigenSystem& es, double rank_tol = kRankTol) {
  require_psd(es, rank_tol, "moore_penrose");
  const double cut = rank_tol * std::max(es.values.empty() ? 0.0 : es.values.front(), 0.0);
  return spectral_apply(es, [cut](double x) { return x > cut ? 1.0 / x : 0.0; });
}

inline LinOp moore_penrose(const LinOp& A, double rank_tol = kRankTol) {
  return moore_penrose(eig_self_adjoint(A), rank_tol);
}

inline std::size_t psd_rank(const EigenSystem& es, double rank_tol = kRankTol) {
  const double cut = rank_tol * std::max(es.values.empty() ? 0.0 : es.values.front(), 0.0);
  std::size_t r = 0;
  for (double v : es.values)
    if (v > cut) ++r;
  return r;
}

// PSD square root; eigenvalues within rank_tol of zero clamp to zero first.
inline LinOp sqrt_psd(const EigenSystem& es, double rank_tol = kRankTol) {
  require_psd(es, rank_tol, "sqrt_psd");
  return spectral_apply(es, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

inline LinOp sqrt_psd(const LinOp& A, double rank_tol = kRankTol) {
  return sqrt_psd(eig_self_adjoint(A), rank_tol);
}

enum class RegKind { tikhonov, tsvd };

// Regularized pseudoinverse of a PSD operator: a spectral filter composed
// with the Moore-Penrose inverse, so the kernel always maps to zero.
//   tikhonov: retained eigenvalue x maps to 1 / (x + alpha)
//   tsvd:     retained eigenvalue x maps to 1/x when x^2 > alpha, else 0
// As alpha -> 0 both converge to the Moore-Penrose inverse. Note this
// differs from the resolvent (A + alpha)^{-1} only on ker(A), which the
// covariance factor products never reach.
inline LinOp regularized_pinv(const EigenSystem& es, double alpha, RegKind kind,
                              double rank_tol = kRankTol) {
  if (!(alpha > 0.0)) throw invalid_argument("regularized_pinv: alpha must be positive");
  require_psd(es, rank_tol, "regularized_pinv");
  const double cut = rank_tol * std::max(es.values.empty() ? 0.0 : es.values.front(), 0.0);
  if (kind == RegKind::tikhonov)
    return spectral_apply(es, [alpha, cut](double x) {
      return x > cut ? 1.0 / (x + alpha) : 0.0;
    });
  return spectral_apply(es, [alpha, cut](double x) {
    return (x > cut && x * x > alpha) ? 1.0 / x : 0.0;
  });
}

inline LinOp regularized_pinv(const LinOp& A, double alpha, RegKind kind,
                              double rank_tol = kRankTol) {
  return regularized_pinv(eig_self_adjoint(A), alpha, kind, rank_tol);
}

// ---------------------------------------------------------------------------
// Complex side: only the resolvent and the contour integrals that consume it
// live over C. Kept to the minimum the perturbation bounds need.

struct CMat {
  std::size_t rows = 0, cols = 0;
  std::vector<std::complex<double>> a;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, {0.0, 0.0}) {}

  std::complex<double>& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  std::complex<double> operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

struct CLinOp {
  CMat m;
  Grid domain;
  Grid range;
};

inline CLinOp to_complex(const LinOp& A) {
  CLinOp C;
  C.m = CMat(A.m.rows, A.m.cols);
  for (std::size_t i = 0; i < A.m.a.size(); ++i) C.m.a[i] = A.m.a[i];
  C.domain = A.domain;
  C.range = A.range;
  return C;
}

inline CLinOp compose(const CLinOp& A, const CLinOp& B) {
  if (!same_grid(A.domain, B.range))
    throw invalid_argument("compose: inner grids do not match");
  CMat C(A.m.rows, B.m.cols);
  for (std::size_t i = 0; i < A.m.rows; ++i)
    for (std::size_t k = 0; k < A.m.cols; ++k) {
      const std::complex<double> aik = A.m(i, k);
      if (aik == std::complex<double>(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < B.m.cols; ++j) C(i, j) += aik * B.m(k, j);
    }
  return CLinOp{std::move(C), B.domain, A.range};
}

inline CLinOp axpy(const std::complex<double>& c, const CLinOp& A, const CLinOp& B) {
  if (!same_grid(A.domain, B.domain) || !same_grid(A.range, B.range))
    throw invalid_argument("axpy: grid mismatch");
  CLinOp R = B;
  for (std::size_t i = 0; i < R.m.a.size(); ++i) R.m.a[i] += c * A.m.a[i];
  return R;
}

inline double hs_norm(const CLinOp& A) {
  double s = 0.0;
  for (std::size_t i = 0; i < A.m.rows; ++i)
    for (std::size_t j = 0; j < A.m.cols; ++j)
      s += std::norm(A.m(i, j)) * A.range.weights[i] / A.domain.weights[j];
  return std::sqrt(s);
}

// Real part as a LinOp; the contour projections end up real, so this is the
// exit from the complex detour.
inline LinOp real_part(const CLinOp& A) {
  Mat m(A.m.rows, A.m.cols);
  for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = A.m.a[i].real();
  return LinOp(std::move(m), A.domain, A.range);
}

inline double max_imag_abs(const CLinOp& A) {
  double m = 0.0;
  for (const auto& v : A.m.a) m = std::max(m, std::abs(v.imag()));
  return m;
}

// Resolvent (A - z)^{-1} of a self-adjoint operator at a (possibly complex)
// shift, built from the spectral decomposition. Shifts closer to an
// eigenvalue than 1e-12 of the spectral scale are refused rather than
// amplified into garbage.
inline CLinOp resolvent(const EigenSystem& es, std::complex<double> z) {
  const std::size_t n = es.size();
  double scale = 1.0;
  for (double v : es.values) scale = std::max(scale, std::abs(v));
  CMat m(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::complex<double> d = es.values[k] - z;
    if (std::abs(d) < 1e-12 * scale)
      throw numerical_error("resolvent: shift coincides with an eigenvalue");
    const std::complex<double> c = 1.0 / d;
    const std::vector<double>& phi = es.functions[k].values;
    for (std::size_t i = 0; i < n; ++i) {
      const std::complex<double> ci = c * phi[i];
      for (std::size_t j = 0; j < n; ++j)
        m(i, j) += ci * (phi[j] * es.grid.weights[j]);
    }
  }
  return CLinOp{std::move(m), es.grid, es.grid};
}

inline CLinOp resolvent(const LinOp& A, std::complex<double> z) {
  return resolvent(eig_self_adjoint(A), z);
}

} // namespace fcca
