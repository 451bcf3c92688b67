// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include "fcca/common.hpp"
#include "fcca/operators.hpp"

namespace fcca {

// ---------------------------------------------------------------------------
// Gap between subspaces.
// ---------------------------------------------------------------------------

struct GapResult {
  double delta_mn = 0.0; // sup over unit u in M of dist(u, N)
  double delta_nm = 0.0;
  double gap = 0.0; // max of the two, in [0, 1]
};

namespace detail {

inline void require_projection(const LinOp& P, const char* who) {
  const double scale = std::max(hs_norm(P), 1.0);
  if (self_adjoint_defect(P) > 1e-8 * scale ||
      hs_norm(compose(P, P) - P) > 1e-8 * scale)
    throw invalid_argument(std::string(who) + ": input is not an orthogonal projection");
}

} // namespace detail

inline GapResult gap_subspace(const LinOp& p_m, const LinOp& p_n) {
  detail::require_projection(p_m, "gap_subspace");
  detail::require_projection(p_n, "gap_subspace");
  const LinOp id = LinOp::identity(p_m.domain);
  GapResult out;
  out.delta_mn = op_norm(compose(id - p_n, p_m));
  out.delta_nm = op_norm(compose(id - p_m, p_n));
  out.gap = std::max(out.delta_mn, out.delta_nm);
  return out;
}

// ---------------------------------------------------------------------------
// Contour-integral eigenprojections.
// ---------------------------------------------------------------------------

struct SpectralCircle {
  double center = 0.0;
  double radius = 0.0;
  std::size_t nodes = 64;
};

namespace detail {

inline void validate_circle(const SpectralCircle& c) {
  if (!(c.radius > 0.0))
    throw invalid_argument("spectral circle: radius must be positive");
  if (c.nodes < 16)
    throw invalid_argument("spectral circle: needs at least 16 quadrature nodes");
}

inline void require_off_circle(const EigenSystem& es, const SpectralCircle& c) {
  for (double lam : es.values)
    if (std::abs(std::abs(lam - c.center) - c.radius) < 1e-10)
      throw numerical_error("spectral circle: eigenvalue on the contour");
}

// Operator norm of the resolvent at z, exact for a self-adjoint operator.
inline double resolvent_norm(const EigenSystem& es, std::complex<double> z) {
  double dmin = std::numeric_limits<double>::infinity();
  for (double lam : es.values) dmin = std::min(dmin, std::abs(lam - z));
  return 1.0 / dmin;
}

} // namespace detail

// -(2 pi i)^{-1} times the contour integral of the resolvent over the circle,
// by the trapezoid rule: with z_j = c + r e^{i theta_j} the quadrature
// collapses to -(r/K) sum_j e^{i theta_j} R(z_j). Equals the sum of the
// eigenprojections of the eigenvalues inside the circle, to quadrature
// accuracy (exponentially small in the node count).
inline LinOp contour_projection(const EigenSystem& es, const SpectralCircle& c) {
  detail::validate_circle(c);
  detail::require_off_circle(es, c);
  const double k = static_cast<double>(c.nodes);
  CLinOp acc{CMat(es.grid.size(), es.grid.size()), es.grid, es.grid};
  for (std::size_t j = 0; j < c.nodes; ++j) {
    const double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(j) / k;
    const std::complex<double> e{std::cos(theta), std::sin(theta)};
    const std::complex<double> z = c.center + c.radius * e;
    acc = axpy(-(c.radius / k) * e, resolvent(es, z), acc);
  }
  return real_part(acc);
}

// ---------------------------------------------------------------------------
// First-order perturbation of an eigenprojection.
// ---------------------------------------------------------------------------

struct ProjectionPerturbation {
  LinOp delta;             // first-order term of P_j(B + A) - P_j(B)
  bool gap_warning = false; // set when the spectral gap does not dominate ||A||
};

// First-order change of the j-th group eigenprojection under B -> B + A:
// sum over modes k outside the group of (lambda_j - lambda_k)^{-1}
// (P_k A P_j + P_j A P_k). The remainder is O(||A||^2) once the group gap
// dominates ||A||; the warning flag reports when it does not.
inline ProjectionPerturbation projection_perturbation(const EigenSystem& es,
                                                      const LinOp& A,
                                                      std::size_t group_index) {
  if (group_index >= es.groups.size())
    throw invalid_argument("projection_perturbation: group index out of range");
  const auto [b, e] = es.groups[group_index];
  const double lam = es.values[b];

  LinOp q = LinOp::zero(es.grid, es.grid);
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < es.size(); ++j) {
    if (b <= j && j < e) continue;
    const double gap = lam - es.values[j];
    min_gap = std::min(min_gap, std::abs(gap));
    q = q + (1.0 / gap) * tensor_outer(es.functions[j], es.functions[j]);
  }
  const LinOp p = group_projector(es, group_index);

  ProjectionPerturbation out;
  out.delta = compose(q, compose(A, p)) + compose(p, compose(A, q));
  out.gap_warning = min_gap < op_norm(A);
  return out;
}

// ---------------------------------------------------------------------------
// Resolvent-difference Neumann expansion and the crude projection bound.
// ---------------------------------------------------------------------------

// Truncated Neumann expansion of R~(z) - R(z) for B -> B~:
// R (B - B~) R sum_{k <= order} [(B - B~) R]^k. Valid when
// ||B - B~|| ||R(z)|| < 1; the truncation error decays geometrically.
inline CLinOp resolvent_difference(const EigenSystem& es, const LinOp& b_tilde,
                                   std::complex<double> z, std::size_t order) {
  const LinOp b = reconstruct(es);
  const LinOp diff = b - b_tilde;
  const double eta = op_norm(diff) * detail::resolvent_norm(es, z);
  if (!(eta < 1.0))
    throw numerical_error("resolvent_difference: Neumann expansion diverges at z");

  const CLinOp r = resolvent(es, z);
  const CLinOp d = to_complex(diff);
  const CLinOp dr = compose(d, r);
  CLinOp sum = to_complex(LinOp::identity(es.grid));
  CLinOp term = sum;
  for (std::size_t k = 1; k <= order; ++k) {
    term = compose(term, dr);
    sum = axpy(1.0, term, sum);
  }
  return compose(r, compose(d, compose(r, sum)));
}

// Crude uniform bound on ||P~_j - P_j|| from the Neumann expansion along the
// contour: r sup_z ||D|| ||R(z)||^2 / (1 - ||D|| ||R(z)||) over the
// quadrature nodes, with D = B~ - B.
inline double projection_bound(const EigenSystem& es, const LinOp& b_tilde,
                               const SpectralCircle& c) {
  detail::validate_circle(c);
  detail::require_off_circle(es, c);
  const double dnorm = op_norm(b_tilde - reconstruct(es));
  double worst = 0.0;
  const double k = static_cast<double>(c.nodes);
  for (std::size_t j = 0; j < c.nodes; ++j) {
    const double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(j) / k;
    const std::complex<double> z =
        c.center + c.radius * std::complex<double>{std::cos(theta), std::sin(theta)};
    const double rnorm = detail::resolvent_norm(es, z);
    const double eta = dnorm * rnorm;
    if (!(eta < 1.0))
      throw numerical_error("projection_bound: Neumann expansion diverges on the contour");
    worst = std::max(worst, dnorm * rnorm * rnorm / (1.0 - eta));
  }
  return c.radius * worst;
}

} // namespace fcca
