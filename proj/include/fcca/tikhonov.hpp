// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fcca/cca.hpp"
#include "fcca/common.hpp"
#include "fcca/operators.hpp"
#include "fcca/rkhs.hpp"

namespace fcca {

// Eigendecompositions of the two diagonal blocks, shared across the
// regularized fits so sweeps do not redo the most expensive step per
// parameter value.
struct SideEigs {
  EigenSystemPtr e1, e2;
};

inline SideEigs make_side_eigs(const BlockCovariance& c) {
  SideEigs s;
  s.e1 = std::make_shared<const EigenSystem>(eig_self_adjoint(c.S1));
  s.e2 = std::make_shared<const EigenSystem>(eig_self_adjoint(c.S2));
  return s;
}

// Ridge-regularized squared-correlation operator.
//
// The defining product S12 (S2+aI)^{-1} S21 (S1+aI)^{-1} is self-adjoint
// only when the blocks commute, so the eigendecomposition is taken of the
// congruent symmetric form
//     M = (S1+aI)^{-1/2} S12 (S2+aI)^{-1} S21 (S1+aI)^{-1/2},
// which shares the product form's spectrum ((S1+aI)^{1/2} similarity) and is
// symmetric in floating point by construction. Right eigenvectors of the
// product form are recovered as (S1+aI)^{+1/2} u, left ones as
// (S1+aI)^{-1/2} u; the pair is automatically biorthogonal.
struct TikhonovOperator {
  double alpha = 0.0;
  LinOp op;        // the defining product form
  LinOp sym;       // the symmetric congruent form M
  EigenSystem eig; // of sym; eigenvalues are the squared regularized correlations
  LinOp res1, res2;       // (S_i + aI)^{-1}
  LinOp half1, half_inv1; // (S1 + aI)^{+1/2}, (S1 + aI)^{-1/2}
  LinOp half2, half_inv2;
  EigenSystemPtr src1, src2;
};

inline TikhonovOperator s1_alpha(const BlockCovariance& c, double alpha,
                                 const SideEigs* pre = nullptr) {
  if (!(alpha > 0.0)) throw invalid_argument("s1_alpha: alpha must be positive");
  TikhonovOperator t;
  t.alpha = alpha;
  SideEigs eigs = pre ? *pre : make_side_eigs(c);
  t.src1 = eigs.e1;
  t.src2 = eigs.e2;
  require_psd(*t.src1, kRankTol, "s1_alpha");
  require_psd(*t.src2, kRankTol, "s1_alpha");

  auto shifted = [alpha](double p) {
    return [alpha, p](double x) { return std::pow(std::max(x, 0.0) + alpha, p); };
  };
  t.res1 = spectral_apply(*t.src1, shifted(-1.0));
  t.res2 = spectral_apply(*t.src2, shifted(-1.0));
  t.half1 = spectral_apply(*t.src1, shifted(0.5));
  t.half_inv1 = spectral_apply(*t.src1, shifted(-0.5));
  t.half2 = spectral_apply(*t.src2, shifted(0.5));
  t.half_inv2 = spectral_apply(*t.src2, shifted(-0.5));

  const LinOp B = compose(c.S12, compose(t.res2, c.S21));
  t.op = compose(B, t.res1);
  // M M* with M = (S1+aI)^{-1/2} S12 (S2+aI)^{-1/2} equals
  // (S1+aI)^{-1/2} B (S1+aI)^{-1/2}, and the Gram form is exactly symmetric
  // in floating point; composing the three factors directly is not, and the
  // defect blows up with 1/alpha through the kernel block.
  const LinOp M = compose(t.half_inv1, compose(c.S12, t.half_inv2));
  const Mat tm = to_orthonormal(M);
  t.sym = from_orthonormal(matmul(tm, transpose(tm)), M.range, M.range);
  t.eig = eig_self_adjoint(t.sym);
  return t;
}

// Regularized cross-correlation operator (S1+aI)^{-1/2} S12 (S2+aI)^{-1/2}.
inline LinOp r_alpha(const BlockCovariance& c, double alpha,
                     const SideEigs* pre = nullptr) {
  if (!(alpha > 0.0)) throw invalid_argument("r_alpha: alpha must be positive");
  SideEigs eigs = pre ? *pre : make_side_eigs(c);
  auto inv_half = [alpha](double x) { return 1.0 / std::sqrt(std::max(x, 0.0) + alpha); };
  const LinOp h1 = spectral_apply(*eigs.e1, inv_half);
  const LinOp h2 = spectral_apply(*eigs.e2, inv_half);
  return compose(h1, compose(c.S12, h2));
}

inline CCAResult cca_tikhonov(const BlockCovariance& c, double alpha,
                              std::size_t k_max, const SideEigs* pre = nullptr) {
  const TikhonovOperator t = s1_alpha(c, alpha, pre);
  detail::WeightRecovery rec;
  rec.side1 = [&t](const FunctionVec& u) { return apply(t.half1, u); };
  rec.side2 = [&t, &c](const FunctionVec& u, double rho) {
    return (1.0 / rho) * apply(c.S21, apply(t.half_inv1, u));
  };
  FitParameter p;
  p.kind = FitParameter::Kind::alpha;
  p.alpha = alpha;
  return detail::assemble_cca(t.eig, rec, t.src1, t.src2, k_max, p);
}

// One sweep row: diagnostics of a regularized fit against the reference.
// weight_err_rkhs is NaN when either side of the comparison sits in a
// multiplicity group (eigenvectors are only defined up to rotation there)
// or when sign alignment is ambiguous.
struct ConvergenceRow {
  double param = 0.0;  // alpha or m
  std::size_t k = 0;   // 1-based component index
  double rho = 0.0;
  double proj_err_hs = 0.0;
  double weight_err_rkhs = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::string param_name; // "alpha" or "m"
  std::vector<ConvergenceRow> rows;
};

namespace detail {

inline void append_diagnostic_rows(ConvergenceTable& table, double param,
                                   const CCAResult& fit, const CCAResult& ref,
                                   std::size_t k_max) {
  const std::size_t kk = std::min({k_max, fit.rho.size(), ref.rho.size()});
  for (std::size_t k = 0; k < kk; ++k) {
    ConvergenceRow row;
    row.param = param;
    row.k = k + 1;
    row.rho = fit.rho[k];
    row.proj_err_hs = hs_norm(fit.projections[k] - ref.projections[k]);
    if (fit.eigvec_simple[k] && ref.eigvec_simple[k]) {
      try {
        const RkhsElement aligned = align_sign(fit.weights1[k], ref.weights1[k]);
        row.weight_err_rkhs = rkhs_norm(aligned - ref.weights1[k]);
      } catch (const invariant_failure&) {
        // orthogonal pair: leave NaN
      }
    }
    table.rows.push_back(row);
  }
}

} // namespace detail

// Convergence diagnostics along a descending ridge-parameter path. The
// reference is normally the unregularized population result on the same
// blocks; its eigensystem sources are reused so RKHS comparisons are exact.
inline ConvergenceTable sweep_alpha(const BlockCovariance& c,
                                    const std::vector<double>& alphas,
                                    const CCAResult& reference,
                                    std::size_t k_max) {
  if (alphas.empty()) throw invalid_argument("sweep_alpha: empty alpha list");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw invalid_argument("sweep_alpha: alphas must be positive");
    if (i > 0 && !(alphas[i] < alphas[i - 1]))
      throw invalid_argument("sweep_alpha: alphas must be strictly descending");
  }
  SideEigs eigs{reference.source1, reference.source2};
  if (!eigs.e1 || !eigs.e2) eigs = make_side_eigs(c);

  ConvergenceTable table;
  table.param_name = "alpha";
  for (double a : alphas) {
    const CCAResult fit = cca_tikhonov(c, a, k_max, &eigs);
    detail::append_diagnostic_rows(table, a, fit, reference, k_max);
  }
  return table;
}

} // namespace fcca
