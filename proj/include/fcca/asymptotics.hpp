// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fcca/cca.hpp"
#include "fcca/common.hpp"
#include "fcca/estimation.hpp"
#include "fcca/model.hpp"
#include "fcca/operators.hpp"
#include "fcca/rng.hpp"
#include "fcca/threads.hpp"
#include "fcca/tikhonov.hpp"
#include "fcca/tsvd.hpp"

namespace fcca {

// ---------------------------------------------------------------------------
// Eigencoordinate representation. The limit theory is exact in the span of
// the model's 2J basis functions, so everything here runs on J-dimensional
// coefficient grids instead of the p-point quadrature grid.
// ---------------------------------------------------------------------------

inline BlockCovariance coefficient_blocks(const ProcessModel& m) {
  const Grid g1 = coefficient_space(m.J), g2 = coefficient_space(m.J);
  Mat s1(m.J, m.J), s2(m.J, m.J);
  for (std::size_t j = 0; j < m.J; ++j) {
    s1(j, j) = m.lambda1[j];
    s2(j, j) = m.lambda2[j];
  }
  LinOp S1{s1, g1, g1}, S2{s2, g2, g2}, S12{m.gamma, g2, g1};
  return make_blocks(S1, S2, S12);
}

// Fourth-moment covariance of vec(X (x) X - S) in the model's joint
// eigencoordinates: for centered Gaussian scores with joint covariance L,
// Cov(z_a z_b, z_c z_d) = L_ac L_bd + L_ad L_bc.
struct CltCovariance {
  std::size_t J = 0;
  Mat lambda;     // 2J x 2J joint score covariance
  Mat sigma;      // (2J)^2 x (2J)^2 fourth-moment covariance
  Mat sqrt_sigma; // PSD square root used by the Gaussian sampler
};

namespace detail {

inline void finish_clt(CltCovariance& out) {
  const std::size_t dd = out.sigma.rows;
  double defect = 0.0, scale = 1e-300;
  for (std::size_t i = 0; i < dd; ++i)
    for (std::size_t j = 0; j < dd; ++j) {
      defect = std::max(defect, std::abs(out.sigma(i, j) - out.sigma(j, i)));
      scale = std::max(scale, std::abs(out.sigma(i, j)));
    }
  if (defect > 1e-8 * scale)
    throw invariant_failure("clt_covariance: fourth-moment array not symmetric");

  const Grid g = coefficient_space(dd);
  LinOp as_op{out.sigma, g, g};
  EigenSystem es = eig_self_adjoint(as_op);
  if (es.values.back() < -1e-8 * std::max(es.values.front(), 1e-300))
    throw invariant_failure("clt_covariance: fourth-moment array not PSD");
  out.sqrt_sigma = Mat(dd, dd);
  for (std::size_t k = 0; k < dd; ++k) {
    const double s = std::sqrt(std::max(es.values[k], 0.0));
    for (std::size_t i = 0; i < dd; ++i)
      for (std::size_t j = 0; j < dd; ++j)
        out.sqrt_sigma(i, j) +=
            s * es.functions[k].values[i] * es.functions[k].values[j];
  }
}

} // namespace detail

inline CltCovariance clt_covariance(const ProcessModel& m) {
  CltCovariance out;
  out.J = m.J;
  out.lambda = joint_score_covariance(m);
  const std::size_t d = 2 * m.J;
  out.sigma = Mat(d * d, d * d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t e = 0; e < d; ++e)
          out.sigma(a * d + b, c * d + e) =
              out.lambda(a, c) * out.lambda(b, e) +
              out.lambda(a, e) * out.lambda(b, c);
  detail::finish_clt(out);
  return out;
}

// Empirical fourth-moment estimate from simulated paths. The estimator
// covariance is centered (the outer product of the mean is subtracted), which
// is what a covariance of estimators requires.
inline CltCovariance clt_covariance_empirical(const ProcessModel& m,
                                              const SamplePaths& paths) {
  if (paths.n < 100)
    throw invalid_argument("clt_covariance_empirical: needs at least 100 paths");
  CltCovariance out;
  out.J = m.J;
  const std::size_t d = 2 * m.J, n = paths.n;
  const Mat z = path_scores(paths, m);

  std::vector<double> zbar(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) zbar[a] += z(i, a);
  for (double& v : zbar) v /= static_cast<double>(n);

  out.lambda = Mat(d, d);
  std::vector<double> vmean(d * d, 0.0), vi(d * d);
  Mat sum(d * d, d * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        vi[a * d + b] = (z(i, a) - zbar[a]) * (z(i, b) - zbar[b]);
    for (std::size_t x = 0; x < d * d; ++x) {
      vmean[x] += vi[x];
      double* row = &sum(x, 0);
      const double vx = vi[x];
      for (std::size_t y = 0; y < d * d; ++y) row[y] += vx * vi[y];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : vmean) v *= inv_n;
  out.sigma = Mat(d * d, d * d);
  for (std::size_t x = 0; x < d * d; ++x)
    for (std::size_t y = 0; y < d * d; ++y)
      out.sigma(x, y) = sum(x, y) * inv_n - vmean[x] * vmean[y];
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) out.lambda(a, b) = vmean[a * d + b];
  detail::finish_clt(out);
  return out;
}

// One realization of the operator-valued CLT limit: the blocks of a Gaussian
// element with the fourth-moment covariance, or the exact scaled estimation
// error sqrt(n)(S_hat - S) of a concrete sample.
struct PerturbationDraw {
  LinOp n1, n2;  // self-adjoint diagonal blocks
  LinOp n12, n21;
  enum class Kind { gaussian, empirical } kind = Kind::gaussian;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

namespace detail {

inline PerturbationDraw blocks_from_joint(const Mat& w, std::size_t J) {
  const Grid g1 = coefficient_space(J), g2 = coefficient_space(J);
  Mat m1(J, J), m2(J, J), m12(J, J);
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      m1(i, j) = w(i, j);
      m2(i, j) = w(J + i, J + j);
      m12(i, j) = w(i, J + j);
    }
  PerturbationDraw d;
  d.n1 = LinOp{m1, g1, g1};
  d.n2 = LinOp{m2, g2, g2};
  d.n12 = LinOp{m12, g2, g1};
  d.n21 = adjoint(d.n12);
  return d;
}

} // namespace detail

inline PerturbationDraw draw_perturbation(const CltCovariance& cov,
                                          std::uint64_t seed) {
  const std::size_t d = 2 * cov.J;
  if (cov.sqrt_sigma.rows != d * d)
    throw invalid_argument("draw_perturbation: covariance has no square root");
  Rng rng(seed, 0);
  std::vector<double> xi(d * d);
  for (double& v : xi) v = rng.gaussian();
  Mat w(d, d);
  for (std::size_t x = 0; x < d * d; ++x) {
    double s = 0.0;
    const double* row = &cov.sqrt_sigma.a[x * d * d];
    for (std::size_t y = 0; y < d * d; ++y) s += row[y] * xi[y];
    w(x / d, x % d) = s;
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) {
      const double s = 0.5 * (w(a, b) + w(b, a));
      w(a, b) = s;
      w(b, a) = s;
    }
  PerturbationDraw out = detail::blocks_from_joint(w, cov.J);
  out.kind = PerturbationDraw::Kind::gaussian;
  out.seed = seed;
  return out;
}

inline PerturbationDraw empirical_perturbation(const SamplePaths& paths,
                                               const ProcessModel& m) {
  if (paths.n < 2)
    throw invalid_argument("empirical_perturbation: needs at least two paths");
  const std::size_t d = 2 * m.J, n = paths.n;
  const Mat z = path_scores(paths, m);
  std::vector<double> zbar(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) zbar[a] += z(i, a);
  for (double& v : zbar) v /= static_cast<double>(n);

  const Mat lambda = joint_score_covariance(m);
  Mat w(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        w(a, b) += (z(i, a) - zbar[a]) * (z(i, b) - zbar[b]);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      w(a, b) = root_n * (w(a, b) / static_cast<double>(n) - lambda(a, b));

  PerturbationDraw out = detail::blocks_from_joint(w, m.J);
  out.kind = PerturbationDraw::Kind::empirical;
  out.n = n;
  return out;
}

// ---------------------------------------------------------------------------
// Frechet derivatives of spectral maps.
// ---------------------------------------------------------------------------

namespace detail {

inline Mat eig_basis(const EigenSystem& es) {
  const std::size_t p = es.grid.size(), r = es.size();
  Mat P(p, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t t = 0; t < p; ++t) P(t, j) = es.functions[j].values[t];
  return P;
}

// A in the orthonormal eigenbasis: A~(k,j) = <phi_k, A phi_j>.
inline Mat eig_matrix(const EigenSystem& es, const LinOp& A) {
  if (!same_grid(A.domain, es.grid) || !same_grid(A.range, es.grid))
    throw invalid_argument("eig_matrix: operator not on the eigensystem grid");
  const Mat P = eig_basis(es);
  Mat AP = matmul(A.m, P);
  for (std::size_t t = 0; t < AP.rows; ++t)
    for (std::size_t j = 0; j < AP.cols; ++j) AP(t, j) *= es.grid.weights[t];
  return matmul(transpose(P), AP);
}

inline LinOp from_eig_matrix(const EigenSystem& es, const Mat& B) {
  const std::size_t p = es.grid.size(), r = es.size();
  const Mat P = eig_basis(es);
  Mat Ptw(r, p);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t t = 0; t < p; ++t) Ptw(j, t) = P(t, j) * es.grid.weights[t];
  return LinOp{matmul(matmul(P, B), Ptw), es.grid, es.grid};
}

// Entrywise divided-difference multiplier on the eigenbasis matrix of A:
// diagonal and near-degenerate pairs get fprime, separated pairs get the
// divided difference of fvals.
inline LinOp indexed_frechet(const EigenSystem& es, const LinOp& A,
                             const std::vector<double>& fvals,
                             const std::vector<double>& fprime,
                             double group_tol = kGroupTol) {
  const std::size_t r = es.size();
  Mat B = eig_matrix(es, A);
  const double scale = std::max(std::abs(es.values[0]), 1e-300);
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < r; ++j) {
      const double gap = es.values[k] - es.values[j];
      const double c = (std::abs(gap) <= group_tol * scale)
                           ? fprime[k]
                           : (fvals[k] - fvals[j]) / gap;
      B(k, j) *= c;
    }
  return from_eig_matrix(es, B);
}

} // namespace detail

// Derivative of E |-> phi(E) at the operator with eigensystem es, in
// direction A: phi'(lambda_j) on diagonal blocks, divided differences of phi
// across distinct eigenvalues.
inline LinOp frechet_map(const EigenSystem& es, const LinOp& A,
                         const std::function<double(double)>& phi,
                         const std::function<double(double)>& phi_prime,
                         double group_tol = kGroupTol) {
  const std::size_t r = es.size();
  std::vector<double> fvals(r), fprime(r);
  for (std::size_t k = 0; k < r; ++k) {
    fvals[k] = phi(es.values[k]);
    fprime[k] = phi_prime(es.values[k]);
  }
  return detail::indexed_frechet(es, A, fvals, fprime, group_tol);
}

// Derivative of the shifted inverse E |-> (E + aI)^{-1}: the diagonal blocks
// carry -(lambda_k + a)^{-2}, off-diagonal pairs the divided difference
// -[(lambda_k + a)(lambda_j + a)]^{-1}.
inline LinOp phi_prime_alpha(const EigenSystem& es, const LinOp& N, double alpha) {
  if (!(alpha > 0.0))
    throw invalid_argument("phi_prime_alpha: alpha must be positive");
  return frechet_map(
      es, N, [alpha](double x) { return 1.0 / (x + alpha); },
      [alpha](double x) { return -1.0 / ((x + alpha) * (x + alpha)); });
}

// Derivative of the rank-m truncated pseudoinverse, including the rotation of
// the retained eigenspace: retained/retained pairs follow the 1/z rule,
// retained/discarded pairs carry 1/(lambda_j (lambda_j - lambda_k)).
inline LinOp truncated_pinv_derivative(const EigenSystem& es, const LinOp& N,
                                       std::size_t m) {
  detail::check_truncation(es, m, true, "truncated_pinv_derivative");
  const std::size_t r = es.size();
  std::vector<double> fvals(r, 0.0), fprime(r, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    fvals[k] = 1.0 / es.values[k];
    fprime[k] = -1.0 / (es.values[k] * es.values[k]);
  }
  return detail::indexed_frechet(es, N, fvals, fprime);
}

// Limit of the truncated pseudoinverse error when the eigenspace rotation is
// ignored: only retained/retained pairs contribute, -1/lambda_j^2 on the
// diagonal and -1/(lambda_k lambda_j) off it.
inline LinOp b_i_m(const EigenSystem& es, const LinOp& N, std::size_t m) {
  detail::check_truncation(es, m, true, "b_i_m");
  Mat B = detail::eig_matrix(es, N);
  const std::size_t r = es.size();
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < r; ++j) {
      const double c = (k < m && j < m) ? -1.0 / (es.values[k] * es.values[j]) : 0.0;
      B(k, j) *= c;
    }
  return detail::from_eig_matrix(es, B);
}

// Derivative of the rank-m eigenprojection: entirely cross-block, coupling
// each retained mode j to each discarded mode k with weight
// 1/(lambda_j - lambda_k).
inline LinOp a_i_m(const EigenSystem& es, const LinOp& N, std::size_t m) {
  detail::check_truncation(es, m, false, "a_i_m");
  const std::size_t r = es.size();
  std::vector<double> fvals(r, 0.0), fprime(r, 0.0);
  for (std::size_t k = 0; k < m; ++k) fvals[k] = 1.0;
  return detail::indexed_frechet(es, N, fvals, fprime);
}

// ---------------------------------------------------------------------------
// Gaussian limit elements of the regularized squared-correlation operators.
// ---------------------------------------------------------------------------

// Derivative of C |-> S12 (S2+aI)^{-1} S21 (S1+aI)^{-1} in the direction of
// the draw: one term per perturbed factor.
inline LinOp g1_alpha(const BlockCovariance& c, const PerturbationDraw& d,
                      double alpha, const SideEigs* pre = nullptr) {
  if (!(alpha > 0.0)) throw invalid_argument("g1_alpha: alpha must be positive");
  const SideEigs eigs = pre ? *pre : make_side_eigs(c);
  auto inv = [alpha](double x) { return 1.0 / (x + alpha); };
  const LinOp phi1 = spectral_apply(*eigs.e1, inv);
  const LinOp phi2 = spectral_apply(*eigs.e2, inv);

  const LinOp tail1 = compose(c.S21, phi1);
  const LinOp g11 = compose(d.n12, compose(phi2, tail1));
  const LinOp g12 = compose(c.S12, compose(phi_prime_alpha(*eigs.e2, d.n2, alpha), tail1));
  const LinOp g13 = compose(c.S12, compose(phi2, compose(d.n21, phi1)));
  const LinOp g14 = compose(c.S12, compose(phi2, compose(c.S21, phi_prime_alpha(*eigs.e1, d.n1, alpha))));
  return g11 + g12 + g13 + g14;
}

// Derivative of C |-> Pi1(m) S12 S2(m)^+ S21 S1(m)^+ in the direction of the
// draw: five terms, one per factor, with the projector and pseudoinverse
// factors differentiated by a_i_m and truncated_pinv_derivative.
inline LinOp f1_m(const BlockCovariance& c, const PerturbationDraw& d,
                  std::size_t m, const SideEigs* pre = nullptr) {
  const SideEigs eigs = pre ? *pre : make_side_eigs(c);
  detail::check_truncation(*eigs.e1, m, true, "f1_m");
  detail::check_truncation(*eigs.e2, m, true, "f1_m");

  const LinOp pi1 = detail::truncated_power(*eigs.e1, m, 0.0, 0.0);
  const LinOp d1 = detail::truncated_power(*eigs.e1, m, 0.0, -1.0);
  const LinOp d2 = detail::truncated_power(*eigs.e2, m, 0.0, -1.0);

  const LinOp core = compose(c.S12, compose(d2, compose(c.S21, d1)));
  const LinOp t1 = compose(a_i_m(*eigs.e1, d.n1, m), core);
  const LinOp t2 = compose(pi1, compose(d.n12, compose(d2, compose(c.S21, d1))));
  const LinOp t3 = compose(pi1, compose(c.S12, compose(truncated_pinv_derivative(*eigs.e2, d.n2, m), compose(c.S21, d1))));
  const LinOp t4 = compose(pi1, compose(c.S12, compose(d2, compose(d.n21, d1))));
  const LinOp t5 = compose(pi1, compose(c.S12, compose(d2, compose(c.S21, truncated_pinv_derivative(*eigs.e1, d.n1, m)))));
  return t1 + t2 + t3 + t4 + t5;
}

// ---------------------------------------------------------------------------
// Per-eigenpair limit statistics.
// ---------------------------------------------------------------------------

struct LimitStats {
  LinOp proj_limit;
  FunctionVec eigvec_limit; // valid only when eigvec_defined
  bool eigvec_defined = false;
  Mat eigval_block; // d_k x d_k block of G in the group's eigenbasis
  double eigval_scalar = std::numeric_limits<double>::quiet_NaN();
};

// Limit laws for the k-th eigenvalue group of the operator behind es, with G
// a realization of the Gaussian limit element: the projection limit is the
// reduced-resolvent sandwich, the eigenvalue limit the within-group block.
inline LimitStats limit_stats(const LinOp& G, const EigenSystem& es,
                              std::size_t group_index) {
  if (group_index >= es.groups.size())
    throw invalid_argument("limit_stats: group index out of range");
  const auto [b, e] = es.groups[group_index];
  const double lam = es.values[b];

  LinOp Q = LinOp::zero(es.grid, es.grid);
  for (std::size_t g = 0; g < es.groups.size(); ++g) {
    if (g == group_index) continue;
    for (std::size_t j = es.groups[g].first; j < es.groups[g].second; ++j)
      Q = Q + (1.0 / (es.values[j] - lam)) *
                  tensor_outer(es.functions[j], es.functions[j]);
  }
  const LinOp P = group_projector(es, group_index);

  LimitStats out;
  out.proj_limit = compose(P, compose(G, Q)) + compose(Q, compose(G, P));
  const std::size_t dk = e - b;
  out.eigval_block = Mat(dk, dk);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t c = 0; c < dk; ++c)
      out.eigval_block(a, c) =
          l2_inner(es.functions[b + a], apply(G, es.functions[b + c]));
  if (dk == 1) {
    out.eigval_scalar = out.eigval_block(0, 0);
    out.eigvec_limit = apply(Q, apply(G, es.functions[b]));
    out.eigvec_defined = true;
  }
  return out;
}

// Checked accessor for the eigenvector limit, which only exists for a simple
// eigenvalue.
inline FunctionVec eigvec_limit(const LinOp& G, const EigenSystem& es,
                                std::size_t group_index) {
  const LimitStats s = limit_stats(G, es, group_index);
  if (!s.eigvec_defined)
    throw invalid_argument("eigvec_limit: eigenvalue has multiplicity > 1");
  return s.eigvec_limit;
}

// ---------------------------------------------------------------------------
// Plug-in asymptotic variance and the Monte Carlo validation harness.
// ---------------------------------------------------------------------------

namespace detail {

// Left/right eigenvector sandwich for the eigenvalue derivative of the
// (generally non-self-adjoint) regularized product form.
struct PivotSandwich {
  std::vector<FunctionVec> left, right;
  std::vector<double> value; // population eigenvalue per requested k
};

inline PivotSandwich pivot_sandwich(const BlockCovariance& c, FitParameter param,
                                    const std::vector<std::size_t>& ks,
                                    const SideEigs* pre) {
  PivotSandwich out;
  const auto grab = [&](const EigenSystem& eig, const LinOp& to_left,
                        const LinOp& to_right) {
    for (std::size_t k : ks) {
      if (k >= eig.size())
        throw invalid_argument("sigma_plugin: component index out of range");
      std::size_t g = 0;
      while (!(eig.groups[g].first <= k && k < eig.groups[g].second)) ++g;
      if (eig.groups[g].second - eig.groups[g].first != 1)
        throw invalid_argument("sigma_plugin: eigenvalue has multiplicity > 1");
      out.left.push_back(apply(to_left, eig.functions[k]));
      out.right.push_back(apply(to_right, eig.functions[k]));
      out.value.push_back(eig.values[k]);
    }
  };
  if (param.kind == FitParameter::Kind::alpha) {
    const TikhonovOperator t = s1_alpha(c, param.alpha, pre);
    grab(t.eig, t.half_inv1, t.half1);
  } else if (param.kind == FitParameter::Kind::m) {
    const TruncatedOperator t = s1_m(c, param.m, pre);
    grab(t.eig, t.e1, t.half1);
  } else if (param.kind == FitParameter::Kind::alpha_m) {
    const TruncatedOperator t = s1_alpha_m(c, param.alpha, param.m, pre);
    grab(t.eig, t.e1, t.half1);
  } else {
    throw invalid_argument("sigma_plugin: parameter must be alpha or m");
  }
  return out;
}

inline LinOp limit_element(const BlockCovariance& c, const PerturbationDraw& d,
                           FitParameter param, const SideEigs* pre) {
  if (param.kind == FitParameter::Kind::alpha) return g1_alpha(c, d, param.alpha, pre);
  if (param.kind == FitParameter::Kind::m) return f1_m(c, d, param.m, pre);
  throw invalid_argument("limit_element: parameter must be alpha or m");
}

} // namespace detail

struct SigmaPlugin {
  std::vector<std::size_t> ks;
  std::vector<double> diag; // sigma_kk per requested k
  Mat cross;                // sigma_jk across requested ks
  std::size_t n_draws = 0;
};

// Monte Carlo estimate of the limit covariance of the eigenvalue pivots
// sqrt(n)(rho_k^2(param)-hat - rho_k^2(param)): each Gaussian draw is pushed
// through the limit element and sandwiched between the left/right
// eigenvectors of the population operator.
inline SigmaPlugin sigma_plugin(const BlockCovariance& c, const CltCovariance& cov,
                                FitParameter param, const std::vector<std::size_t>& ks,
                                std::size_t n_draws, std::uint64_t seed,
                                std::size_t threads = 1) {
  if (ks.empty()) throw invalid_argument("sigma_plugin: no components requested");
  if (n_draws < 2) throw invalid_argument("sigma_plugin: needs at least 2 draws");
  const SideEigs pre = make_side_eigs(c);
  const detail::PivotSandwich sw = detail::pivot_sandwich(c, param, ks, &pre);

  const std::size_t nk = ks.size();
  std::vector<double> stats(n_draws * nk);
  parallel_for(n_draws, resolve_threads(threads), [&](std::size_t i) {
    const PerturbationDraw d = draw_perturbation(cov, mix_seed(seed, i));
    const LinOp G = detail::limit_element(c, d, param, &pre);
    for (std::size_t a = 0; a < nk; ++a)
      stats[i * nk + a] = l2_inner(sw.left[a], apply(G, sw.right[a]));
  });

  std::vector<double> mean(nk, 0.0);
  for (std::size_t i = 0; i < n_draws; ++i)
    for (std::size_t a = 0; a < nk; ++a) mean[a] += stats[i * nk + a];
  for (double& v : mean) v /= static_cast<double>(n_draws);

  SigmaPlugin out;
  out.ks = ks;
  out.n_draws = n_draws;
  out.cross = Mat(nk, nk);
  for (std::size_t i = 0; i < n_draws; ++i)
    for (std::size_t a = 0; a < nk; ++a)
      for (std::size_t b = 0; b < nk; ++b)
        out.cross(a, b) += (stats[i * nk + a] - mean[a]) * (stats[i * nk + b] - mean[b]);
  for (double& v : out.cross.a) v /= static_cast<double>(n_draws);
  out.diag.resize(nk);
  for (std::size_t a = 0; a < nk; ++a) out.diag[a] = out.cross(a, a);
  return out;
}

inline double sigma_kk_plugin(const BlockCovariance& c, const CltCovariance& cov,
                              FitParameter param, std::size_t k,
                              std::size_t n_draws, std::uint64_t seed,
                              std::size_t threads = 1) {
  return sigma_plugin(c, cov, param, {k}, n_draws, seed, threads).diag[0];
}

// ---------------------------------------------------------------------------
// Monte Carlo study of the pivot distribution.
// ---------------------------------------------------------------------------

struct McConfig {
  ProcessModel model;
  FitParameter param;              // kind alpha or m
  std::vector<std::size_t> n_list; // ascending sample sizes
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0; // 0-based component under study
  std::size_t sigma_draws = 4000;
  std::size_t threads = 1;
};

struct McPerN {
  std::size_t n = 0;
  std::vector<double> pivot;      // sqrt(n)(rho_k^2-hat - rho_k^2) per replication
  std::vector<double> op_err;     // HS error of the regularized operator
  std::vector<double> proj_err;   // HS error of the k-th eigenprojection
  std::vector<double> weight_err; // L2 error of the k-th weight function
  double pivot_mean = std::numeric_limits<double>::quiet_NaN();
  double pivot_var = std::numeric_limits<double>::quiet_NaN();
  double pivot_skew = std::numeric_limits<double>::quiet_NaN();
  double pivot_exkurt = std::numeric_limits<double>::quiet_NaN();
  double unscaled_var = std::numeric_limits<double>::quiet_NaN();
  double median_op_err = std::numeric_limits<double>::quiet_NaN();
};

struct McReport {
  FitParameter param;
  std::vector<std::size_t> n_list;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double rho2_pop = std::numeric_limits<double>::quiet_NaN();
  std::vector<McPerN> per_n;
  bool under_replicated = false;
  // Var of the unscaled error at the smallest n over the largest n; the
  // n^{-1/2} rate makes this n_last/n_first.
  double variance_ratio_unscaled = std::numeric_limits<double>::quiet_NaN();
  // Var of the sqrt(n)-scaled pivot at the smallest over the largest n; the
  // CLT makes this 1.
  double variance_ratio_scaled = std::numeric_limits<double>::quiet_NaN();
  double sigma_plugin_value = std::numeric_limits<double>::quiet_NaN();
  double plugin_over_empirical = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline void pivot_moments(McPerN& pn) {
  const std::size_t r = pn.pivot.size();
  double m1 = 0.0;
  for (double x : pn.pivot) m1 += x;
  m1 /= static_cast<double>(r);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : pn.pivot) {
    const double d = x - m1;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(r);
  m3 /= static_cast<double>(r);
  m4 /= static_cast<double>(r);
  pn.pivot_mean = m1;
  pn.pivot_var = m2;
  pn.pivot_skew = m3 / std::pow(m2, 1.5);
  pn.pivot_exkurt = m4 / (m2 * m2) - 3.0;
  pn.unscaled_var = m2 / static_cast<double>(pn.n);
  pn.median_op_err = median_of(pn.op_err);
}

inline std::size_t group_of(const EigenSystem& es, std::size_t k) {
  for (std::size_t g = 0; g < es.groups.size(); ++g)
    if (es.groups[g].first <= k && k < es.groups[g].second) return g;
  throw invalid_argument("group_of: index outside the spectrum");
}

struct RegularizedFit {
  double eigenvalue = 0.0;
  LinOp op;
  LinOp proj;
  FunctionVec weight; // L2-normalized right eigenvector recovery
};

inline RegularizedFit regularized_fit(const BlockCovariance& c, FitParameter param,
                                      std::size_t k, const SideEigs* pre) {
  RegularizedFit out;
  const auto finish = [&](const EigenSystem& eig, const LinOp& half) {
    out.proj = group_projector(eig, group_of(eig, k));
    out.weight = apply(half, eig.functions[k]);
    const double nrm = l2_norm(out.weight);
    if (nrm > 0.0) out.weight = (1.0 / nrm) * out.weight;
    out.eigenvalue = eig.values[k];
  };
  if (param.kind == FitParameter::Kind::alpha) {
    TikhonovOperator t = s1_alpha(c, param.alpha, pre);
    out.op = t.op;
    finish(t.eig, t.half1);
  } else if (param.kind == FitParameter::Kind::m) {
    TruncatedOperator t = s1_m(c, param.m, pre);
    out.op = t.op;
    finish(t.eig, t.half1);
  } else if (param.kind == FitParameter::Kind::alpha_m) {
    TruncatedOperator t = s1_alpha_m(c, param.alpha, param.m, pre);
    out.op = t.op;
    finish(t.eig, t.half1);
  } else {
    throw invalid_argument("mc_study: parameter must be alpha or m");
  }
  return out;
}

} // namespace detail

// Replicated sampling study of the pivot sqrt(n)(rho_k^2(param)-hat -
// rho_k^2(param)) with deterministic per-replication seeds: replication r at
// position i of n_list draws its paths from mix_seed(seed, i*R + r), so the
// report is identical for every thread count.
inline McReport mc_study(const McConfig& cfg) {
  validate_model(cfg.model);
  if (cfg.replications < 1) throw invalid_argument("mc_study: needs replications >= 1");
  if (cfg.n_list.empty()) throw invalid_argument("mc_study: empty n list");
  for (std::size_t n : cfg.n_list)
    if (n < 2) throw invalid_argument("mc_study: sample sizes must be >= 2");
  if (cfg.k >= cfg.model.J) throw invalid_argument("mc_study: component outside the model rank");

  const BlockCovariance pop = population_operators(cfg.model);
  const SideEigs pre = make_side_eigs(pop);
  const detail::RegularizedFit truth = detail::regularized_fit(pop, cfg.param, cfg.k, &pre);

  McReport rep;
  rep.param = cfg.param;
  rep.n_list = cfg.n_list;
  rep.replications = cfg.replications;
  rep.seed = cfg.seed;
  rep.k = cfg.k;
  rep.rho2_pop = truth.eigenvalue;
  rep.under_replicated = cfg.replications < 2;

  const std::size_t R = cfg.replications;
  const std::size_t threads = resolve_threads(cfg.threads);
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    const std::size_t n = cfg.n_list[ni];
    McPerN pn;
    pn.n = n;
    pn.pivot.resize(R);
    pn.op_err.resize(R);
    pn.proj_err.resize(R);
    pn.weight_err.resize(R);
    parallel_for(R, threads, [&](std::size_t r) {
      const std::uint64_t rep_seed = mix_seed(cfg.seed, ni * R + r);
      const SamplePaths paths = sample_paths(cfg.model, n, rep_seed);
      const SampleCovariance cov = sample_covariance(paths);
      const detail::RegularizedFit fit =
          detail::regularized_fit(cov.blocks, cfg.param, cfg.k, nullptr);
      pn.pivot[r] = std::sqrt(static_cast<double>(n)) *
                    (fit.eigenvalue - truth.eigenvalue);
      pn.op_err[r] = hs_norm(fit.op - truth.op);
      pn.proj_err[r] = hs_norm(fit.proj - truth.proj);
      FunctionVec w = fit.weight;
      if (l2_inner(w, truth.weight) < 0.0) w = -1.0 * w;
      pn.weight_err[r] = l2_norm(w - truth.weight);
    });
    if (R >= 2) detail::pivot_moments(pn);
    rep.per_n.push_back(std::move(pn));
  }

  if (R >= 2 && rep.per_n.size() >= 2) {
    rep.variance_ratio_unscaled =
        rep.per_n.front().unscaled_var / rep.per_n.back().unscaled_var;
    rep.variance_ratio_scaled =
        rep.per_n.front().pivot_var / rep.per_n.back().pivot_var;
  }
  if (R >= 2) {
    const CltCovariance cov = clt_covariance(cfg.model);
    const BlockCovariance cblocks = coefficient_blocks(cfg.model);
    rep.sigma_plugin_value =
        sigma_kk_plugin(cblocks, cov, cfg.param, cfg.k, cfg.sigma_draws,
                        mix_seed(cfg.seed, 0x51C3A11ULL), threads);
    rep.plugin_over_empirical =
        rep.sigma_plugin_value / rep.per_n.back().pivot_var;
  }
  return rep;
}

} // namespace fcca
