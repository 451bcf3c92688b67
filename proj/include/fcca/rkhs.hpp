// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "fcca/common.hpp"
#include "fcca/grid.hpp"
#include "fcca/operators.hpp"

namespace fcca {

// The reproducing-kernel space attached to a covariance operator S is the
// range of S^{1/2} with inner product <f,g> = sum_j <f,phi_j><g,phi_j> /
// lambda_j. Everything here works in the eigencoordinates of a shared
// EigenSystem; the dense S^{1/2+} is never formed, which would square the
// condition number for nothing.
//
// Coefficient convention: coeffs[j] stores <f, phi_j>_{L2}. The alternative
// parameterization f = sum_j lambda_j f_j phi_j that appears in the score
// functional uses f_j = coeffs[j] / lambda_j; see score_functional.

using EigenSystemPtr = std::shared_ptr<const EigenSystem>;

inline std::size_t retained_rank(const EigenSystem& es, double rank_tol = kRankTol) {
  return psd_rank(es, rank_tol);
}

struct RkhsElement {
  FunctionVec base;        // the function, projected onto the retained span
  EigenSystemPtr source;   // eigensystem of the generating covariance
  std::vector<double> coeffs; // <f, phi_j> for every eigenpair; RKHS sums stop at rank
  std::size_t rank = 0;    // retained rank of the source
};

struct PicardResult {
  double norm_sq = 0.0;
  bool in_range = true;
};

// Picard diagnostic: the 1/lambda-weighted coefficient sum over the retained
// span, plus a range flag. At finite rank the literal Picard series is always
// finite, so failure is signaled by mass outside the retained span instead.
// Residual after projecting onto the retained span, measured on the residual
// vector itself. Subtracting squared norms instead would lose half the digits
// to cancellation and sit exactly at the 1e-8 decision threshold.
inline double span_residual(const FunctionVec& f, const EigenSystem& es,
                            std::size_t r) {
  FunctionVec res = f;
  for (std::size_t j = 0; j < r; ++j) {
    const double c = l2_inner(f, es.functions[j]);
    for (std::size_t i = 0; i < res.values.size(); ++i)
      res.values[i] -= c * es.functions[j].values[i];
  }
  return l2_norm(res);
}

inline PicardResult picard_norm(const FunctionVec& f, const EigenSystem& es,
                                double rank_tol = kRankTol) {
  if (!same_grid(f.grid, es.grid))
    throw invalid_argument("picard_norm: function grid differs from eigensystem grid");
  const std::size_t r = retained_rank(es, rank_tol);
  PicardResult out;
  for (std::size_t j = 0; j < r; ++j) {
    const double c = l2_inner(f, es.functions[j]);
    out.norm_sq += c * c / es.values[j];
  }
  out.in_range = span_residual(f, es, r) <=
                 1e-8 * std::max(l2_norm(f), 1e-150);
  return out;
}

inline RkhsElement make_rkhs_element(const FunctionVec& f, EigenSystemPtr source,
                                     double rank_tol = kRankTol) {
  if (!source) throw invalid_argument("rkhs element: null source");
  if (!same_grid(f.grid, source->grid))
    throw invalid_argument("rkhs element: function grid differs from source grid");
  RkhsElement e;
  e.source = std::move(source);
  e.rank = retained_rank(*e.source, rank_tol);
  e.coeffs.resize(e.source->size());
  std::vector<double> proj(f.grid.size(), 0.0);
  for (std::size_t j = 0; j < e.source->size(); ++j) {
    e.coeffs[j] = l2_inner(f, e.source->functions[j]);
    if (j < e.rank)
      for (std::size_t i = 0; i < proj.size(); ++i)
        proj[i] += e.coeffs[j] * e.source->functions[j].values[i];
  }
  e.base = FunctionVec(f.grid, std::move(proj));
  return e;
}

inline void require_shared_source(const RkhsElement& f, const RkhsElement& g,
                                  const char* who) {
  if (f.source != g.source)
    throw invalid_argument(std::string(who) + ": elements have different sources");
}

inline double rkhs_inner(const RkhsElement& f, const RkhsElement& g) {
  require_shared_source(f, g, "rkhs_inner");
  double s = 0.0;
  for (std::size_t j = 0; j < f.rank; ++j)
    s += f.coeffs[j] * g.coeffs[j] / f.source->values[j];
  return s;
}

inline double rkhs_norm(const RkhsElement& f) {
  return std::sqrt(std::max(rkhs_inner(f, f), 0.0));
}

inline RkhsElement operator-(const RkhsElement& f, const RkhsElement& g) {
  require_shared_source(f, g, "rkhs sub");
  RkhsElement h = f;
  h.base = f.base - g.base;
  for (std::size_t j = 0; j < h.coeffs.size(); ++j) h.coeffs[j] -= g.coeffs[j];
  return h;
}

inline RkhsElement operator*(double c, const RkhsElement& f) {
  RkhsElement h = f;
  for (double& v : h.coeffs) v *= c;
  h.base = c * h.base;
  return h;
}

// The congruence between L2 and the RKHS: Gamma g = sum_j sqrt(lambda_j)
// <g,phi_j> phi_j, an isometry from ker(S)-perp onto H(K). The input must
// live in the retained span up to 1e-8 relative mass.
inline RkhsElement gamma_apply(const FunctionVec& g, EigenSystemPtr source,
                               double rank_tol = kRankTol) {
  if (!source) throw invalid_argument("gamma_apply: null source");
  if (!same_grid(g.grid, source->grid))
    throw invalid_argument("gamma_apply: grid mismatch");
  const std::size_t r = retained_rank(*source, rank_tol);
  std::vector<double> gj(r);
  for (std::size_t j = 0; j < r; ++j) gj[j] = l2_inner(g, source->functions[j]);
  if (span_residual(g, *source, r) > 1e-8 * std::max(l2_norm(g), 1e-150))
    throw invalid_argument("gamma_apply: input has mass outside ker(S)-perp");

  RkhsElement e;
  e.source = std::move(source);
  e.rank = r;
  e.coeffs.assign(e.source->size(), 0.0);
  std::vector<double> vals(g.grid.size(), 0.0);
  for (std::size_t j = 0; j < r; ++j) {
    e.coeffs[j] = std::sqrt(e.source->values[j]) * gj[j];
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] += e.coeffs[j] * e.source->functions[j].values[i];
  }
  e.base = FunctionVec(g.grid, std::move(vals));
  return e;
}

inline FunctionVec gamma_inv(const RkhsElement& f) {
  std::vector<double> vals(f.base.grid.size(), 0.0);
  for (std::size_t j = 0; j < f.rank; ++j) {
    const double c = f.coeffs[j] / std::sqrt(f.source->values[j]);
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] += c * f.source->functions[j].values[i];
  }
  return FunctionVec(f.base.grid, std::move(vals));
}

// Evaluation of the canonical-variable functional on one sample path:
// Psi(f) = sum_j (coeffs_j / lambda_j) Z_j, with Z_j = <X, phi_j> the path's
// scores against the source eigenfunctions. Parzen's isometry makes
// Var[Psi(f)] = |f|^2_{H(K)} when X has covariance S.
inline double psi_score(const RkhsElement& f, const std::vector<double>& scores) {
  if (scores.size() < f.rank)
    throw invalid_argument("psi_score: fewer scores than retained coefficients");
  double s = 0.0;
  for (std::size_t j = 0; j < f.rank; ++j)
    s += f.coeffs[j] / f.source->values[j] * scores[j];
  return s;
}

// Column of the Mercer kernel: K(., t_index) = sum_j lambda_j phi_j(t) phi_j,
// the canonical element whose RKHS inner products reproduce point values.
inline FunctionVec kernel_column(const EigenSystem& es, std::size_t t_index,
                                 double rank_tol = kRankTol) {
  if (t_index >= es.grid.size())
    throw invalid_argument("kernel_column: index out of range");
  const std::size_t r = retained_rank(es, rank_tol);
  std::vector<double> vals(es.grid.size(), 0.0);
  for (std::size_t j = 0; j < r; ++j) {
    const double c = es.values[j] * es.functions[j].values[t_index];
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] += c * es.functions[j].values[i];
  }
  return FunctionVec(es.grid, std::move(vals));
}

} // namespace fcca
