// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include "fcca/asymptotics.hpp"
#include "fcca/cca.hpp"
#include "fcca/grid.hpp"
#include "fcca/mat.hpp"
#include "fcca/model.hpp"
#include "fcca/operators.hpp"
#include "fcca/rng.hpp"

namespace testutil {

inline fcca::Mat random_mat(std::size_t r, std::size_t c, fcca::Rng& rng) {
  fcca::Mat m(r, c);
  for (double& v : m.a) v = rng.gaussian();
  return m;
}

inline fcca::FunctionVec random_function(const fcca::Grid& g, fcca::Rng& rng) {
  std::vector<double> v(g.size());
  for (double& x : v) x = rng.gaussian();
  return fcca::FunctionVec(g, std::move(v));
}

// Random self-adjoint operator: symmetric in orthonormal coordinates.
inline fcca::LinOp random_self_adjoint(const fcca::Grid& g, fcca::Rng& rng) {
  fcca::Mat z = random_mat(g.size(), g.size(), rng);
  fcca::Mat s(g.size(), g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) s(i, j) = 0.5 * (z(i, j) + z(j, i));
  return fcca::from_orthonormal(std::move(s), g, g);
}

// Random PSD operator of the given rank: Z^T Z in orthonormal coordinates.
inline fcca::LinOp random_psd(const fcca::Grid& g, std::size_t rank, fcca::Rng& rng) {
  fcca::Mat z = random_mat(rank, g.size(), rng);
  return fcca::from_orthonormal(fcca::matmul(fcca::transpose(z), z), g, g);
}

// Random valid block covariance in coefficient space: distinct decreasing
// score variances and a coupling gamma = L1^{1/2} R L2^{1/2} with the
// operator norm of R scaled below one, which keeps the joint score
// covariance positive semidefinite (Schur complement argument) and all
// squared canonical correlations strictly inside [0, 1).
inline fcca::BlockCovariance random_blocks(fcca::Rng& rng, std::size_t J,
                                           bool diagonal_gamma = false) {
  using namespace fcca;
  const Grid g = coefficient_space(J);
  Mat l1(J, J), l2(J, J), ga(J, J);
  std::vector<double> v1(J), v2(J);
  double a1 = 2.0 + rng.uniform01(), a2 = 1.5 + rng.uniform01();
  for (std::size_t j = 0; j < J; ++j) {
    v1[j] = a1;
    v2[j] = a2;
    l1(j, j) = a1;
    l2(j, j) = a2;
    a1 *= 0.35 + 0.3 * rng.uniform01();
    a2 *= 0.35 + 0.3 * rng.uniform01();
  }
  if (diagonal_gamma) {
    for (std::size_t j = 0; j < J; ++j)
      ga(j, j) = (1.8 * rng.uniform01() - 0.9) * std::sqrt(v1[j] * v2[j]);
  } else {
    Mat r = random_mat(J, J, rng);
    const double rn = op_norm(LinOp{r, g, g});
    for (std::size_t i = 0; i < J; ++i)
      for (std::size_t j = 0; j < J; ++j)
        ga(i, j) = 0.9 / rn * std::sqrt(v1[i]) * r(i, j) * std::sqrt(v2[j]);
  }
  return make_blocks(LinOp{l1, g, g}, LinOp{l2, g, g}, LinOp{ga, g, g});
}

// Random process model on [0, 1]: orthonormalized cosine bases, the same
// variance/coupling construction as random_blocks.
inline fcca::ProcessModel random_model(fcca::Rng& rng, std::size_t J, std::size_t p,
                                       bool diagonal_gamma = false) {
  using namespace fcca;
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
  }
  m.basis1 = discrete_orthonormalize(raw);
  m.basis2 = m.basis1;
  const BlockCovariance b = random_blocks(rng, J, diagonal_gamma);
  m.lambda1.resize(J);
  m.lambda2.resize(J);
  m.gamma = Mat(J, J);
  for (std::size_t i = 0; i < J; ++i) {
    m.lambda1[i] = b.S1.m(i, i);
    m.lambda2[i] = b.S2.m(i, i);
    for (std::size_t j = 0; j < J; ++j) m.gamma(i, j) = b.S12.m(i, j);
  }
  return m;
}

// Random perturbation direction with self-adjoint diagonal blocks and
// adjoint-linked off-diagonal blocks, matching the structure of a
// covariance-estimate fluctuation.
inline fcca::PerturbationDraw random_direction(fcca::Rng& rng, const fcca::Grid& g1,
                                               const fcca::Grid& g2) {
  using namespace fcca;
  PerturbationDraw d;
  d.n1 = random_self_adjoint(g1, rng);
  d.n2 = random_self_adjoint(g2, rng);
  fcca::Mat z = random_mat(g1.size(), g2.size(), rng);
  d.n12 = from_orthonormal(std::move(z), g2, g1);
  d.n21 = adjoint(d.n12);
  d.kind = PerturbationDraw::Kind::gaussian;
  return d;
}

} // namespace testutil
