// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fcca/cca.hpp"
#include "fcca/common.hpp"
#include "fcca/operators.hpp"
#include "fcca/tikhonov.hpp"

namespace fcca {

namespace detail {

// sum_{j < m} (lambda_j + alpha)^p  phi_j phi_j^T W, eigenvalues clipped at 0.
inline LinOp truncated_power(const EigenSystem& es, std::size_t m, double alpha,
                             double p) {
  LinOp out = LinOp::zero(es.grid, es.grid);
  for (std::size_t j = 0; j < m; ++j) {
    const double lam = std::max(es.values[j], 0.0) + alpha;
    out = out + std::pow(lam, p) * tensor_outer(es.functions[j], es.functions[j]);
  }
  return out;
}

// m must keep whole eigenvalue groups together and, when the retained modes
// are inverted, stay within the numerical rank (a zero mode cannot be
// inverted; need_rank is false for maps like the projector that never divide
// by a retained eigenvalue).
inline void check_truncation(const EigenSystem& es, std::size_t m, bool need_rank,
                             const char* who) {
  if (m == 0) throw invalid_argument(std::string(who) + ": m must be at least 1");
  if (m > es.size())
    throw invalid_argument(std::string(who) + ": m exceeds the dimension");
  const double scale = std::max(std::abs(es.values[0]), 1e-300);
  if (m < es.size() &&
      std::abs(es.values[m - 1] - es.values[m]) <= kGroupTol * scale)
    throw invalid_argument(std::string(who) +
                           ": truncation level m splits an eigenvalue group");
  if (need_rank && es.values[m - 1] <= kRankTol * scale)
    throw invalid_argument(std::string(who) + ": m exceeds the numerical rank");
}

} // namespace detail

// Spectral-truncation analogue of the ridge operator. With alpha == 0 this is
// plain truncation (retained eigenvalues inverted exactly); with alpha > 0 it
// is the truncated ridge hybrid, whose coefficients are 1/(lambda_j + alpha)
// on the leading m modes of each side and 0 beyond.
//
// As with the ridge form, the defining product S12 D2 S21 D1 need not be
// self-adjoint, so the spectrum is read off the congruent symmetric form
//     M = E1 S12 D2 S21 E1,   E_i = sum_{j<=m} (lambda_ij + alpha)^{-1/2} P_ij.
// Right eigenvectors are recovered through the truncated square root
// H1 = sum_{j<=m} (lambda_1j + alpha)^{+1/2} P_1j.
struct TruncatedOperator {
  double alpha = 0.0; // 0 for pure truncation
  std::size_t m = 0;
  LinOp op;        // defining product form Pi1(m) S12 D2 S21 D1
  LinOp sym;       // symmetric congruent form M
  EigenSystem eig; // of sym
  LinOp half1;     // truncated (S1 + aI)^{+1/2}
  LinOp e1;        // truncated (S1 + aI)^{-1/2}
  LinOp half2;     // truncated (S2 + aI)^{+1/2}
  LinOp r_star;    // E2 S21 E1, adjoint of the truncated correlation operator
  // HS distance between the hybrid product form and the pure-truncation one
  // at the same m; 0 when alpha == 0, NaN when the pure form is undefined
  // because m exceeds a side's numerical rank.
  double hybrid_gap_hs = 0.0;
  EigenSystemPtr src1, src2;
};

inline TruncatedOperator s1_alpha_m(const BlockCovariance& c, double alpha,
                                    std::size_t m, const SideEigs* pre = nullptr) {
  if (alpha < 0.0) throw invalid_argument("s1_alpha_m: alpha must be nonnegative");
  TruncatedOperator t;
  t.alpha = alpha;
  t.m = m;
  SideEigs eigs = pre ? *pre : make_side_eigs(c);
  t.src1 = eigs.e1;
  t.src2 = eigs.e2;
  require_psd(*t.src1, kRankTol, "s1_alpha_m");
  require_psd(*t.src2, kRankTol, "s1_alpha_m");
  detail::check_truncation(*t.src1, m, alpha == 0.0, "s1_alpha_m");
  detail::check_truncation(*t.src2, m, alpha == 0.0, "s1_alpha_m");

  const LinOp d1 = detail::truncated_power(*t.src1, m, alpha, -1.0);
  const LinOp d2 = detail::truncated_power(*t.src2, m, alpha, -1.0);
  t.e1 = detail::truncated_power(*t.src1, m, alpha, -0.5);
  const LinOp e2 = detail::truncated_power(*t.src2, m, alpha, -0.5);
  t.half1 = detail::truncated_power(*t.src1, m, alpha, 0.5);
  t.half2 = detail::truncated_power(*t.src2, m, alpha, 0.5);
  const LinOp pi1 = detail::truncated_power(*t.src1, m, alpha, 0.0);

  const LinOp mid = compose(c.S12, compose(d2, c.S21));
  t.op = compose(pi1, compose(mid, d1));
  t.sym = compose(t.e1, compose(mid, t.e1));
  t.eig = eig_self_adjoint(t.sym);
  t.r_star = compose(e2, compose(c.S21, t.e1));

  if (alpha > 0.0) {
    const double scale1 = std::max(std::abs(t.src1->values[0]), 1e-300);
    const double scale2 = std::max(std::abs(t.src2->values[0]), 1e-300);
    if (t.src1->values[m - 1] <= kRankTol * scale1 ||
        t.src2->values[m - 1] <= kRankTol * scale2) {
      t.hybrid_gap_hs = std::numeric_limits<double>::quiet_NaN();
    } else {
      const LinOp d1p = detail::truncated_power(*t.src1, m, 0.0, -1.0);
      const LinOp d2p = detail::truncated_power(*t.src2, m, 0.0, -1.0);
      const LinOp pure =
          compose(pi1, compose(compose(c.S12, compose(d2p, c.S21)), d1p));
      t.hybrid_gap_hs = hs_norm(t.op - pure);
    }
  }
  return t;
}

inline TruncatedOperator s1_m(const BlockCovariance& c, std::size_t m,
                              const SideEigs* pre = nullptr) {
  return s1_alpha_m(c, 0.0, m, pre);
}

namespace detail {

inline CCAResult cca_truncated(const BlockCovariance& c, const TruncatedOperator& t,
                               std::size_t k_max, FitParameter param) {
  detail::WeightRecovery rec;
  rec.side1 = [&t](const FunctionVec& u) { return apply(t.half1, u); };
  rec.side2 = [&t](const FunctionVec& u, double rho) {
    return (1.0 / rho) * apply(t.half2, apply(t.r_star, u));
  };
  (void)c;
  return detail::assemble_cca(t.eig, rec, t.src1, t.src2, k_max, param);
}

} // namespace detail

inline CCAResult cca_tsvd(const BlockCovariance& c, std::size_t m,
                          std::size_t k_max, const SideEigs* pre = nullptr) {
  const TruncatedOperator t = s1_m(c, m, pre);
  FitParameter p;
  p.kind = FitParameter::Kind::m;
  p.m = m;
  return detail::cca_truncated(c, t, k_max, p);
}

inline CCAResult cca_tikhonov_tsvd(const BlockCovariance& c, double alpha,
                                   std::size_t m, std::size_t k_max,
                                   const SideEigs* pre = nullptr) {
  if (!(alpha > 0.0))
    throw invalid_argument("cca_tikhonov_tsvd: alpha must be positive");
  const TruncatedOperator t = s1_alpha_m(c, alpha, m, pre);
  FitParameter p;
  p.kind = FitParameter::Kind::alpha_m;
  p.alpha = alpha;
  p.m = m;
  return detail::cca_truncated(c, t, k_max, p);
}

// Convergence diagnostics along an ascending truncation-level path.
inline ConvergenceTable sweep_m(const BlockCovariance& c,
                                const std::vector<std::size_t>& ms,
                                const CCAResult& reference, std::size_t k_max) {
  if (ms.empty()) throw invalid_argument("sweep_m: empty m list");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i] == 0) throw invalid_argument("sweep_m: m must be at least 1");
    if (i > 0 && !(ms[i] > ms[i - 1]))
      throw invalid_argument("sweep_m: ms must be strictly increasing");
  }
  SideEigs eigs{reference.source1, reference.source2};
  if (!eigs.e1 || !eigs.e2) eigs = make_side_eigs(c);

  ConvergenceTable table;
  table.param_name = "m";
  for (std::size_t m : ms) {
    const CCAResult fit = cca_tsvd(c, m, k_max, &eigs);
    detail::append_diagnostic_rows(table, static_cast<double>(m), fit, reference,
                                   k_max);
  }
  return table;
}

} // namespace fcca
