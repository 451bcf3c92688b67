// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fcca/cca.hpp"
#include "fcca/common.hpp"
#include "fcca/grid.hpp"
#include "fcca/mat.hpp"
#include "fcca/operators.hpp"
#include "fcca/rng.hpp"

namespace fcca {

// Ground-truth process pair in truncated Karhunen-Loeve form:
//   X_i = sum_{j<J} Z_ij basis_i[j],  Cov(Z_1j, Z_2k) = gamma(j,k),
//   Var(Z_ij) = lambda_i[j], scores jointly Gaussian with mean zero.
struct ProcessModel {
  Grid grid1, grid2;
  std::size_t J = 0;
  std::vector<double> lambda1, lambda2;   // descending, positive
  std::vector<FunctionVec> basis1, basis2; // discrete-orthonormal per side
  Mat gamma;                               // J x J, gamma(j,k) = E[Z_1j Z_2k]
};

struct SamplePaths {
  Mat x1; // n x p1, one path per row
  Mat x2; // n x p2
  Grid grid1, grid2;
  std::size_t n = 0;
};

struct ModelDiagnostics {
  double min_joint_eigenvalue = 0.0;
  double max_abs_correlation = 0.0;
  double basis_residual1 = 0.0; // worst orthonormality defect
  double basis_residual2 = 0.0;
};

// Joint 2J x 2J covariance of the stacked score vector (Z_1, Z_2).
inline Mat joint_score_covariance(const ProcessModel& m) {
  const std::size_t J = m.J;
  Mat s(2 * J, 2 * J);
  for (std::size_t j = 0; j < J; ++j) {
    s(j, j) = m.lambda1[j];
    s(J + j, J + j) = m.lambda2[j];
  }
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < J; ++k) {
      s(j, J + k) = m.gamma(j, k);
      s(J + k, j) = m.gamma(j, k);
    }
  return s;
}

inline ModelDiagnostics validate_model(const ProcessModel& m) {
  if (m.J == 0) throw invariant_failure("model: J must be at least 1");
  if (m.lambda1.size() != m.J || m.lambda2.size() != m.J ||
      m.basis1.size() != m.J || m.basis2.size() != m.J ||
      m.gamma.rows != m.J || m.gamma.cols != m.J)
    throw invariant_failure("model: field sizes inconsistent with J");
  for (std::size_t j = 0; j < m.J; ++j) {
    if (!(m.lambda1[j] > 0.0) || !(m.lambda2[j] > 0.0))
      throw invariant_failure("model: nonpositive score variance");
    if (j > 0 && (m.lambda1[j] > m.lambda1[j - 1] || m.lambda2[j] > m.lambda2[j - 1]))
      throw invariant_failure("model: score variances not descending");
  }

  ModelDiagnostics d;
  for (int side = 0; side < 2; ++side) {
    const auto& basis = side == 0 ? m.basis1 : m.basis2;
    const Grid& g = side == 0 ? m.grid1 : m.grid2;
    double worst = 0.0;
    for (std::size_t i = 0; i < m.J; ++i) {
      if (!same_grid(basis[i].grid, g))
        throw invariant_failure("model: basis function on wrong grid");
      for (std::size_t j = i; j < m.J; ++j) {
        const double ip = l2_inner(basis[i], basis[j]);
        worst = std::max(worst, std::abs(ip - (i == j ? 1.0 : 0.0)));
      }
    }
    (side == 0 ? d.basis_residual1 : d.basis_residual2) = worst;
    if (worst > 1e-8)
      throw invariant_failure("model: basis not orthonormal (residual " +
                              std::to_string(worst) + ")");
  }

  for (std::size_t j = 0; j < m.J; ++j)
    for (std::size_t k = 0; k < m.J; ++k) {
      const double rho = m.gamma(j, k) / std::sqrt(m.lambda1[j] * m.lambda2[k]);
      d.max_abs_correlation = std::max(d.max_abs_correlation, std::abs(rho));
    }
  if (d.max_abs_correlation > 1.0 + 1e-10)
    throw invariant_failure("model: implied score correlation exceeds 1 (" +
                            std::to_string(d.max_abs_correlation) + ")");

  const SymEig je = jacobi_eig(joint_score_covariance(m));
  d.min_joint_eigenvalue = je.values.back();
  if (d.min_joint_eigenvalue < -1e-10)
    throw invariant_failure("model: joint score covariance not PSD (min eig " +
                            std::to_string(d.min_joint_eigenvalue) + ")");
  return d;
}

// Population covariance blocks by Mercer synthesis: S_i = sum_j lambda_ij
// phi_ij (x) phi_ij and <phi_1j, S12 phi_2k> = gamma(j,k).
inline BlockCovariance population_operators(const ProcessModel& m) {
  validate_model(m);
  LinOp S1 = LinOp::zero(m.grid1, m.grid1);
  LinOp S2 = LinOp::zero(m.grid2, m.grid2);
  LinOp S12 = LinOp::zero(m.grid2, m.grid1);
  for (std::size_t j = 0; j < m.J; ++j) {
    S1 = S1 + m.lambda1[j] * tensor_outer(m.basis1[j], m.basis1[j]);
    S2 = S2 + m.lambda2[j] * tensor_outer(m.basis2[j], m.basis2[j]);
  }
  for (std::size_t j = 0; j < m.J; ++j)
    for (std::size_t k = 0; k < m.J; ++k)
      if (m.gamma(j, k) != 0.0)
        S12 = S12 + m.gamma(j, k) * tensor_outer(m.basis2[k], m.basis1[j]);
  return make_blocks(std::move(S1), std::move(S2), std::move(S12));
}

enum class KernelKind { K1, K2, K12, Phi1, Phi2 };

namespace detail {
inline std::size_t locate_grid_point(const Grid& g, double t) {
  const double span = g.points.back() - g.points.front();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.points[i] - t) <= 1e-12 * std::max(span, 1.0)) return i;
  throw invalid_argument("kernel_eval: point is not a grid abscissa (no interpolation)");
}
} // namespace detail

// Pointwise Mercer sums, truncated at J. s and t must be grid abscissae;
// there is deliberately no interpolation.
inline double kernel_eval(const ProcessModel& m, double s, double t, KernelKind which) {
  switch (which) {
    case KernelKind::K1:
    case KernelKind::Phi1: {
      const std::size_t i = detail::locate_grid_point(m.grid1, s);
      const std::size_t j = detail::locate_grid_point(m.grid1, t);
      double sum = 0.0;
      for (std::size_t k = 0; k < m.J; ++k) {
        const double w = which == KernelKind::K1 ? m.lambda1[k] : std::sqrt(m.lambda1[k]);
        sum += w * m.basis1[k].values[i] * m.basis1[k].values[j];
      }
      return sum;
    }
    case KernelKind::K2:
    case KernelKind::Phi2: {
      const std::size_t i = detail::locate_grid_point(m.grid2, s);
      const std::size_t j = detail::locate_grid_point(m.grid2, t);
      double sum = 0.0;
      for (std::size_t k = 0; k < m.J; ++k) {
        const double w = which == KernelKind::K2 ? m.lambda2[k] : std::sqrt(m.lambda2[k]);
        sum += w * m.basis2[k].values[i] * m.basis2[k].values[j];
      }
      return sum;
    }
    case KernelKind::K12: {
      const std::size_t i = detail::locate_grid_point(m.grid1, s);
      const std::size_t j = detail::locate_grid_point(m.grid2, t);
      double sum = 0.0;
      for (std::size_t a = 0; a < m.J; ++a)
        for (std::size_t b = 0; b < m.J; ++b)
          sum += m.gamma(a, b) * m.basis1[a].values[i] * m.basis2[b].values[j];
      return sum;
    }
  }
  throw invalid_argument("kernel_eval: unknown kernel kind");
}

// Factor of the joint score covariance for sampling: L = V sqrt(max(D,0)) V'.
inline Mat score_covariance_factor(const ProcessModel& m) {
  const SymEig e = jacobi_eig(joint_score_covariance(m));
  const std::size_t d = e.values.size();
  Mat L(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = std::sqrt(std::max(e.values[k], 0.0));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        L(i, j) += s * e.vectors(i, k) * e.vectors(j, k);
  }
  return L;
}

// Draws n path pairs by KL synthesis. Path i consumes the RNG stream with
// index i derived from the seed, so the output is independent of how callers
// distribute paths across threads and identical run to run.
inline SamplePaths sample_paths(const ProcessModel& m, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw invalid_argument("sample_paths: need n >= 1");
  validate_model(m);
  const Mat L = score_covariance_factor(m);
  const std::size_t J = m.J;
  SamplePaths out;
  out.grid1 = m.grid1;
  out.grid2 = m.grid2;
  out.n = n;
  out.x1 = Mat(n, m.grid1.size());
  out.x2 = Mat(n, m.grid2.size());
  std::vector<double> xi(2 * J), z(2 * J);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    for (std::size_t a = 0; a < 2 * J; ++a) xi[a] = rng.gaussian();
    for (std::size_t a = 0; a < 2 * J; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < 2 * J; ++b) s += L(a, b) * xi[b];
      z[a] = s;
    }
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t t = 0; t < m.grid1.size(); ++t)
        out.x1(i, t) += z[j] * m.basis1[j].values[t];
      for (std::size_t t = 0; t < m.grid2.size(); ++t)
        out.x2(i, t) += z[J + j] * m.basis2[j].values[t];
    }
  }
  return out;
}

// Scores of each path against the model bases: row i = (Z_1, Z_2) for path i.
inline Mat path_scores(const SamplePaths& p, const ProcessModel& m) {
  if (!same_grid(p.grid1, m.grid1) || !same_grid(p.grid2, m.grid2))
    throw invalid_argument("path_scores: paths and model on different grids");
  Mat z(p.n, 2 * m.J);
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t j = 0; j < m.J; ++j) {
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t t = 0; t < m.grid1.size(); ++t)
        s1 += m.grid1.weights[t] * p.x1(i, t) * m.basis1[j].values[t];
      for (std::size_t t = 0; t < m.grid2.size(); ++t)
        s2 += m.grid2.weights[t] * p.x2(i, t) * m.basis2[j].values[t];
      z(i, j) = s1;
      z(i, m.J + j) = s2;
    }
  return z;
}

// Shared two-component fixture: cosine bases on [0,1] with 64 midpoint
// cells, score variances (1.0, 0.5) and (0.8, 0.4), diagonal coupling with
// correlations (0.9, 0.3). Canonical correlations are exactly (0.9, 0.3)
// with weight directions along the basis functions, so every downstream
// quantity has a scalar closed form.
inline ProcessModel toy_model_2() {
  ProcessModel m;
  m.grid1 = uniform_grid(0.0, 1.0, 64);
  m.grid2 = m.grid1;
  m.J = 2;
  m.lambda1 = {1.0, 0.5};
  m.lambda2 = {0.8, 0.4};
  std::vector<FunctionVec> raw;
  for (std::size_t j = 1; j <= 2; ++j) {
    std::vector<double> v(64);
    for (std::size_t t = 0; t < 64; ++t)
      v[t] = std::sqrt(2.0) * std::cos(static_cast<double>(j) * M_PI * m.grid1.points[t]);
    raw.emplace_back(m.grid1, std::move(v));
  }
  m.basis1 = discrete_orthonormalize(raw);
  m.basis2 = m.basis1;
  m.gamma = Mat(2, 2);
  m.gamma(0, 0) = 0.9 * std::sqrt(m.lambda1[0] * m.lambda2[0]);
  m.gamma(1, 1) = 0.3 * std::sqrt(m.lambda1[1] * m.lambda2[1]);
  return m;
}

// High-rank fixture: J cosine components per side with polynomially decaying
// variances and independent sides. With J comfortably above n-1 the sample
// covariances saturate the centered-sample rank and unregularized canonical
// correlation degenerates to 1, which is what this fixture demonstrates.
inline ProcessModel rank_rich_model(std::size_t J = 16, std::size_t p = 64) {
  ProcessModel m;
  m.grid1 = uniform_grid(0.0, 1.0, p);
  m.grid2 = m.grid1;
  m.J = J;
  std::vector<FunctionVec> raw;
  for (std::size_t j = 1; j <= J; ++j) {
    std::vector<double> v(p);
    for (std::size_t t = 0; t < p; ++t)
      v[t] = std::sqrt(2.0) * std::cos(static_cast<double>(j) * M_PI * m.grid1.points[t]);
    raw.emplace_back(m.grid1, std::move(v));
    const double lam = 1.0 / (static_cast<double>(j) * static_cast<double>(j));
    m.lambda1.push_back(lam);
    m.lambda2.push_back(0.8 * lam);
  }
  m.basis1 = discrete_orthonormalize(raw);
  m.basis2 = m.basis1;
  m.gamma = Mat(J, J);
  return m;
}

} // namespace fcca
