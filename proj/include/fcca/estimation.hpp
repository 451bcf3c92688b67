// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "fcca/cca.hpp"
#include "fcca/common.hpp"
#include "fcca/model.hpp"
#include "fcca/operators.hpp"
#include "fcca/rkhs.hpp"
#include "fcca/tikhonov.hpp"
#include "fcca/tsvd.hpp"

namespace fcca {

struct SampleCovariance {
  BlockCovariance blocks;
  std::size_t n = 0;
  FunctionVec mean1, mean2;
};

// Centered sample covariance blocks with 1/n normalization. Centering is
// always on: the estimator subtracts the sample mean even when the model mean
// is zero, so the fitted object is exactly the one the asymptotics describe.
inline SampleCovariance sample_covariance(const SamplePaths& paths) {
  if (paths.n < 2)
    throw invalid_argument("sample_covariance: needs at least two paths");
  const std::size_t n = paths.n;
  const std::size_t p1 = paths.grid1.size();
  const std::size_t p2 = paths.grid2.size();

  std::vector<double> m1(p1, 0.0), m2(p2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p1; ++a) m1[a] += paths.x1(i, a);
    for (std::size_t a = 0; a < p2; ++a) m2[a] += paths.x2(i, a);
  }
  for (double& v : m1) v /= static_cast<double>(n);
  for (double& v : m2) v /= static_cast<double>(n);

  Mat k11(p1, p1), k22(p2, p2), k12(p1, p2);
  std::vector<double> d1(p1), d2(p2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p1; ++a) d1[a] = paths.x1(i, a) - m1[a];
    for (std::size_t a = 0; a < p2; ++a) d2[a] = paths.x2(i, a) - m2[a];
    for (std::size_t a = 0; a < p1; ++a) {
      const double da = d1[a];
      double* row = &k11(a, 0);
      for (std::size_t b = 0; b < p1; ++b) row[b] += da * d1[b];
    }
    for (std::size_t a = 0; a < p2; ++a) {
      const double da = d2[a];
      double* row = &k22(a, 0);
      for (std::size_t b = 0; b < p2; ++b) row[b] += da * d2[b];
    }
    for (std::size_t a = 0; a < p1; ++a) {
      const double da = d1[a];
      double* row = &k12(a, 0);
      for (std::size_t b = 0; b < p2; ++b) row[b] += da * d2[b];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : k11.a) v *= inv_n;
  for (double& v : k22.a) v *= inv_n;
  for (double& v : k12.a) v *= inv_n;

  SampleCovariance out;
  out.n = n;
  out.mean1 = FunctionVec{paths.grid1, std::move(m1)};
  out.mean2 = FunctionVec{paths.grid2, std::move(m2)};
  out.blocks = make_blocks(op_from_kernel(k11, paths.grid1, paths.grid1),
                           op_from_kernel(k22, paths.grid2, paths.grid2),
                           op_from_kernel(k12, paths.grid2, paths.grid1));
  return out;
}

inline CCAResult fit_tikhonov(const SamplePaths& paths, double alpha,
                              std::size_t k_max) {
  return cca_tikhonov(sample_covariance(paths).blocks, alpha, k_max);
}

inline CCAResult fit_tsvd(const SamplePaths& paths, std::size_t m,
                          std::size_t k_max) {
  return cca_tsvd(sample_covariance(paths).blocks, m, k_max);
}

inline CCAResult fit_tikhonov_tsvd(const SamplePaths& paths, double alpha,
                                   std::size_t m, std::size_t k_max) {
  return cca_tikhonov_tsvd(sample_covariance(paths).blocks, alpha, m, k_max);
}

// Pseudoinverse CCA with no regularization at all. When n - 1 <= p the
// leading sample correlation is 1 regardless of the data; this exists as the
// cautionary demonstration of why the regularized fits are the real product.
inline CCAResult fit_unregularized(const SamplePaths& paths,
                                   std::size_t k_max = 4) {
  const SampleCovariance cov = sample_covariance(paths);
  CCAResult res = population_cca(cov.blocks, k_max);
  res.degenerate =
      paths.n - 1 <= std::min(paths.grid1.size(), paths.grid2.size());
  return res;
}

// Per-path basis scores <x_i - xbar, phi_j> for every eigenfunction of es.
inline Mat basis_scores(const Mat& x, const FunctionVec& mean,
                        const EigenSystem& es) {
  if (x.cols != es.grid.size() || mean.values.size() != es.grid.size())
    throw invalid_argument("basis_scores: grid size mismatch");
  const std::size_t n = x.rows, p = x.cols, r = es.size();
  Mat z(n, r);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      double s = 0.0;
      const auto& phi = es.functions[j].values;
      for (std::size_t t = 0; t < p; ++t)
        s += (x(i, t) - mean.values[t]) * phi[t] * es.grid.weights[t];
      z(i, j) = s;
    }
  }
  return z;
}

struct ScoreTable {
  std::vector<std::vector<double>> u, v; // [component][path]
  std::vector<bool> defined;             // side-2 availability per component
};

// Canonical variables per path: U_k = Psi_1(f_k), V_k = Psi_2(g_k), evaluated
// through the score representation of the RKHS functionals. Paths are
// centered by their own sample mean, matching the covariance estimator.
inline ScoreTable canonical_scores(const CCAResult& result,
                                   const SamplePaths& paths) {
  if (!result.source1 || !result.source2)
    throw invalid_argument("canonical_scores: result has no eigensystem sources");
  if (!same_grid(result.source1->grid, paths.grid1) ||
      !same_grid(result.source2->grid, paths.grid2))
    throw invalid_argument("canonical_scores: paths on a different grid");

  const SampleCovariance cov = sample_covariance(paths);
  const Mat z1 = basis_scores(paths.x1, cov.mean1, *result.source1);
  const Mat z2 = basis_scores(paths.x2, cov.mean2, *result.source2);

  const std::size_t n = paths.n, kk = result.rho.size();
  ScoreTable table;
  table.u.resize(kk);
  table.v.resize(kk);
  table.defined.assign(kk, false);
  std::vector<double> row1(z1.cols), row2(z2.cols);
  for (std::size_t k = 0; k < kk; ++k) {
    table.u[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < z1.cols; ++j) row1[j] = z1(i, j);
      table.u[k][i] = psi_score(result.weights1[k], row1);
    }
    if (!result.weight2_defined[k]) continue;
    table.defined[k] = true;
    table.v[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < z2.cols; ++j) row2[j] = z2(i, j);
      table.v[k][i] = psi_score(result.weights2[k], row2);
    }
  }
  return table;
}

// Checked single-component accessor; the side-2 variable does not exist when
// rho_k is numerically zero.
inline std::pair<std::vector<double>, std::vector<double>> score_pair(
    const CCAResult& result, const SamplePaths& paths, std::size_t k) {
  if (k >= result.rho.size())
    throw invalid_argument("score_pair: component index out of range");
  if (!result.weight2_defined[k])
    throw invalid_argument("score_pair: side-2 scores undefined for this component");
  const ScoreTable t = canonical_scores(result, paths);
  return {t.u[k], t.v[k]};
}

} // namespace fcca
