// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fcca/common.hpp"
#include "fcca/grid.hpp"
#include "fcca/operators.hpp"
#include "fcca/rkhs.hpp"

namespace fcca {

// The two-process covariance structure: diagonal blocks S1, S2 and the
// coupling block S12 (from side-2 functions to side-1 functions), with
// S21 = S12* maintained as an exact identity.
struct BlockCovariance {
  LinOp S1, S2, S12, S21;
};

inline BlockCovariance make_blocks(LinOp S1, LinOp S2, LinOp S12) {
  BlockCovariance c;
  c.S21 = adjoint(S12);
  c.S1 = std::move(S1);
  c.S2 = std::move(S2);
  c.S12 = std::move(S12);
  if (!same_grid(c.S12.range, c.S1.domain) || !same_grid(c.S12.domain, c.S2.domain))
    throw invalid_argument("blocks: cross block grids inconsistent with diagonal blocks");
  return c;
}

inline void validate_blocks(const BlockCovariance& c) {
  const double s1 = std::max(hs_norm(c.S1), 1e-300);
  const double s2 = std::max(hs_norm(c.S2), 1e-300);
  if (self_adjoint_defect(c.S1) > 1e-9 * s1 || self_adjoint_defect(c.S2) > 1e-9 * s2)
    throw invariant_failure("blocks: diagonal block not self-adjoint");
  if (hs_norm(c.S21 - adjoint(c.S12)) > 1e-10 * std::max(1.0, hs_norm(c.S12)))
    throw invariant_failure("blocks: S21 is not the adjoint of S12");
}

// Which regularization produced a CCAResult.
struct FitParameter {
  enum class Kind { none, alpha, m, alpha_m } kind = Kind::none;
  double alpha = 0.0;
  std::size_t m = 0;
};

struct CCAResult {
  std::vector<double> rho; // descending canonical correlations, clipped to [0,1]
  std::vector<RkhsElement> weights1; // unit H(K1) norm
  std::vector<RkhsElement> weights2; // unit H(K2) norm where defined
  std::vector<bool> weight2_defined; // false when rho_k is numerically zero
  std::vector<LinOp> projections;    // L2 eigenprojection (group) of the side-1 operator, per k
  std::vector<bool> eigvec_simple;   // false when k sits in a multiplicity group
  EigenSystemPtr source1, source2;   // eigensystems of S1, S2 (RKHS geometry)
  FitParameter param;
  bool degenerate = false; // set by the unregularized sample route when n-1 <= p
};

// Cross-correlation operator R = S1^{1/2+} S12 S2^{1/2+}. For covariance
// blocks of a genuine pair of processes, |R| <= 1.
inline LinOp build_R(const BlockCovariance& c, double rank_tol = kRankTol) {
  const EigenSystem e1 = eig_self_adjoint(c.S1);
  const EigenSystem e2 = eig_self_adjoint(c.S2);
  require_psd(e1, rank_tol, "build_R");
  require_psd(e2, rank_tol, "build_R");
  const double cut1 = rank_tol * std::max(e1.values.empty() ? 0.0 : e1.values.front(), 0.0);
  const double cut2 = rank_tol * std::max(e2.values.empty() ? 0.0 : e2.values.front(), 0.0);
  const LinOp h1 = spectral_apply(e1, [cut1](double x) {
    return x > cut1 ? 1.0 / std::sqrt(x) : 0.0;
  });
  const LinOp h2 = spectral_apply(e2, [cut2](double x) {
    return x > cut2 ? 1.0 / std::sqrt(x) : 0.0;
  });
  return compose(h1, compose(c.S12, h2));
}

// Flips the sign of `candidate` so its RKHS inner product with `reference`
// is nonnegative. An (almost) orthogonal pair has no meaningful alignment
// and is refused.
inline RkhsElement align_sign(const RkhsElement& candidate, const RkhsElement& reference) {
  const double ip = rkhs_inner(candidate, reference);
  if (std::abs(ip) < 1e-12)
    throw invariant_failure("align_sign: candidate and reference are orthogonal");
  return ip < 0.0 ? -1.0 * candidate : candidate;
}

namespace detail {

// Shared assembly: given the side-1 symmetric operator's eigensystem (whose
// eigenvalues are squared correlations), a map u_k -> weight-1 function, a
// map u_k -> (rho, weight-2 function), build the CCAResult. Weight recovery
// differs between the unregularized/tikhonov/tsvd routes; everything else
// (clipping, normalization, grouping, projections) is identical.
struct WeightRecovery {
  // returns the side-1 weight function (pre-normalization) for eigvec u
  std::function<FunctionVec(const FunctionVec&)> side1;
  // returns the side-2 weight function given eigvec u and rho > 0
  std::function<FunctionVec(const FunctionVec&, double)> side2;
};

inline RkhsElement zero_rkhs_element(EigenSystemPtr src, double rank_tol = kRankTol) {
  RkhsElement e;
  e.base = FunctionVec(src->grid, std::vector<double>(src->grid.size(), 0.0));
  e.source = src;
  e.coeffs.assign(src->size(), 0.0);
  e.rank = retained_rank(*src, rank_tol);
  return e;
}

inline CCAResult assemble_cca(const EigenSystem& es_side1, const WeightRecovery& rec,
                              EigenSystemPtr src1, EigenSystemPtr src2,
                              std::size_t k_max, FitParameter param,
                              double rank_tol = kRankTol) {
  if (!src1 || !src2) throw invalid_argument("cca: null eigensystem source");
  CCAResult out;
  out.param = param;
  out.source1 = src1;
  out.source2 = src2;
  const std::size_t n_report = std::min<std::size_t>(k_max, es_side1.size());
  for (std::size_t k = 0; k < n_report; ++k) {
    double lam = es_side1.values[k];
    if (lam < 0.0 && lam > -1e-10) lam = 0.0;
    const double rho = lam > 0.0 ? std::sqrt(lam) : 0.0;
    out.rho.push_back(std::min(rho, 1.0 + 1e-8));

    // group projector containing k (L2-orthogonal, from the symmetric form)
    std::size_t gi = 0;
    for (std::size_t g = 0; g < es_side1.groups.size(); ++g)
      if (k >= es_side1.groups[g].first && k < es_side1.groups[g].second) gi = g;
    out.projections.push_back(group_projector(es_side1, gi));
    const bool simple =
        es_side1.groups[gi].second - es_side1.groups[gi].first == 1;
    out.eigvec_simple.push_back(simple);

    FunctionVec w1 = rec.side1(es_side1.functions[k]);
    RkhsElement e1 = make_rkhs_element(w1, src1, rank_tol);
    const double n1 = rkhs_norm(e1);
    if (n1 > 1e-14) e1 = (1.0 / n1) * e1;
    out.weights1.push_back(std::move(e1));

    if (rho > 1e-10) {
      FunctionVec w2 = rec.side2(es_side1.functions[k], rho);
      RkhsElement e2 = make_rkhs_element(w2, src2, rank_tol);
      const double n2 = rkhs_norm(e2);
      if (n2 > 1e-14) e2 = (1.0 / n2) * e2;
      out.weights2.push_back(std::move(e2));
      out.weight2_defined.push_back(true);
    } else {
      out.weights2.push_back(zero_rkhs_element(src2, rank_tol));
      out.weight2_defined.push_back(false);
    }
  }
  return out;
}

} // namespace detail

// Population canonical correlation analysis from covariance blocks. The
// side-1 operator R R* is eigendecomposed; its eigenvalues are the squared
// canonical correlations and its eigenfunctions the L2 directions f_k. The
// reported weights are the RKHS images: weight1_k = Gamma_1 f_k (computed as
// S1^{1/2} f_k and renormalized), weight2_k = Gamma_2 g_k with
// g_k = R* f_k / rho_k defined only for rho_k > 1e-10.
inline CCAResult population_cca(const BlockCovariance& c, std::size_t k_max,
                                double rank_tol = kRankTol) {
  validate_blocks(c);
  auto src1 = std::make_shared<const EigenSystem>(eig_self_adjoint(c.S1));
  auto src2 = std::make_shared<const EigenSystem>(eig_self_adjoint(c.S2));
  require_psd(*src1, rank_tol, "population_cca");
  require_psd(*src2, rank_tol, "population_cca");

  const LinOp R = build_R(c, rank_tol);
  const LinOp Rstar = adjoint(R);
  const EigenSystem es = eig_self_adjoint(compose(R, Rstar));

  const LinOp s1_half = sqrt_psd(*src1, rank_tol);
  const LinOp s2_half = sqrt_psd(*src2, rank_tol);

  detail::WeightRecovery rec;
  rec.side1 = [&s1_half](const FunctionVec& u) { return apply(s1_half, u); };
  rec.side2 = [&Rstar, &s2_half](const FunctionVec& u, double rho) {
    return apply(s2_half, (1.0 / rho) * apply(Rstar, u));
  };
  return detail::assemble_cca(es, rec, src1, src2, k_max,
                              FitParameter{FitParameter::Kind::none, 0.0, 0},
                              rank_tol);
}

} // namespace fcca
