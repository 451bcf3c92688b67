// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcca/model.hpp"
#include "fcca/tikhonov.hpp"
#include "helpers.hpp"

using namespace fcca;

TEST_CASE("ridge operator on the toy model has the closed-form spectrum") {
  const BlockCovariance c = population_operators(toy_model_2());
  const TikhonovOperator t = s1_alpha(c, 0.1);
  // gamma_k^2 / ((lambda_1k + a)(lambda_2k + a)) for the two coupled modes
  CHECK(t.eig.values[0] == Catch::Approx(0.648 / (1.1 * 0.9)).margin(1e-10));
  CHECK(t.eig.values[1] == Catch::Approx(0.018 / (0.6 * 0.5)).margin(1e-10));
}

TEST_CASE("ridge spectrum sweeps through the closed-form values") {
  const BlockCovariance c = population_operators(toy_model_2());
  const SideEigs eigs = make_side_eigs(c);
  double prev = 0.0;
  for (double a : {1.0, 0.1, 0.01, 0.001, 1e-6}) {
    const TikhonovOperator t = s1_alpha(c, a, &eigs);
    const double expected = 0.648 / ((1.0 + a) * (0.8 + a));
    CHECK(t.eig.values[0] == Catch::Approx(expected).margin(1e-9));
    CHECK(t.eig.values[0] > prev);
    prev = t.eig.values[0];
  }
  const TikhonovOperator t = s1_alpha(c, 0.001, &eigs);
  CHECK(std::abs(t.eig.values[0] - 0.81) <= 2e-3);
}

TEST_CASE("product and symmetric forms share their spectrum") {
  Rng rng(701);
  for (int rep = 0; rep < 10; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 4);
    const TikhonovOperator t = s1_alpha(c, 0.05);
    // compare via traces of powers, which are similarity invariants
    const double tr1 = hs_inner(LinOp::identity(t.op.domain), t.op);
    const double tr1s = hs_inner(LinOp::identity(t.sym.domain), t.sym);
    CHECK(tr1 == Catch::Approx(tr1s).margin(1e-9 * std::max(1.0, std::abs(tr1))));
    double tr2_direct = 0.0;
    const LinOp sq = compose(t.op, t.op);
    for (std::size_t i = 0; i < sq.m.rows; ++i) tr2_direct += sq.m(i, i);
    double eig_sq = 0.0;
    for (double v : t.eig.values) eig_sq += v * v;
    CHECK(tr2_direct == Catch::Approx(eig_sq).margin(1e-9 * std::max(1.0, eig_sq)));
  }
}

TEST_CASE("symmetric form is self-adjoint and its spectrum lies in the unit interval") {
  Rng rng(702);
  for (int rep = 0; rep < 10; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 5);
    const TikhonovOperator t = s1_alpha(c, 0.02);
    CHECK(self_adjoint_defect(t.sym) <= 1e-10 * std::max(1.0, hs_norm(t.sym)));
    for (double v : t.eig.values) {
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("product form is self-adjoint when the blocks commute") {
  Rng rng(703);
  for (int rep = 0; rep < 5; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 4, true);
    const TikhonovOperator t = s1_alpha(c, 0.1);
    CHECK(self_adjoint_defect(t.op) <= 1e-10 * std::max(1.0, hs_norm(t.op)));
  }
}

TEST_CASE("eigenvector recovery gives biorthogonal left and right pairs") {
  Rng rng(704);
  for (int rep = 0; rep < 5; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 4);
    const TikhonovOperator t = s1_alpha(c, 0.05);
    for (std::size_t k = 0; k < 2; ++k) {
      const FunctionVec& u = t.eig.functions[k];
      const double lam = t.eig.values[k];
      const FunctionVec v = apply(t.half1, u);
      const FunctionVec w = apply(t.half_inv1, u);
      CHECK(l2_norm(apply(t.op, v) - lam * v) <= 1e-9 * std::max(1.0, l2_norm(v)));
      CHECK(l2_norm(apply(adjoint(t.op), w) - lam * w) <= 1e-9 * std::max(1.0, l2_norm(w)));
      CHECK(l2_inner(w, v) == Catch::Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("side-2 weight shortcut agrees with the defining route") {
  // (S2+a)^{+1/2} (S2+a)^{-1/2} collapses in the definition of the side-2
  // weight, leaving S21 (S1+a)^{-1/2} u / rho. Verify against the explicit
  // composition.
  Rng rng(705);
  const BlockCovariance c = testutil::random_blocks(rng, 4);
  const double a = 0.05;
  const TikhonovOperator t = s1_alpha(c, a);
  const CCAResult r = cca_tikhonov(c, a, 2);
  const LinOp r_a = r_alpha(c, a);
  for (std::size_t k = 0; k < 2; ++k) {
    if (!r.weight2_defined[k]) continue;
    const FunctionVec& u = t.eig.functions[k];
    const FunctionVec g = (1.0 / r.rho[k]) * apply(adjoint(r_a), u);
    FunctionVec direct = apply(t.half2, g);
    RkhsElement e = make_rkhs_element(direct, r.source2);
    const double nn = rkhs_norm(e);
    REQUIRE(nn > 1e-12);
    e = (1.0 / nn) * e;
    const double ip = std::abs(rkhs_inner(e, r.weights2[k]));
    CHECK(ip == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("toy model ridge weights equal the exact weights at every ridge value") {
  // Diagonal coupling: the eigenvectors do not move with the ridge, so the
  // normalized weight and the projection are exactly their limits.
  const BlockCovariance c = population_operators(toy_model_2());
  const CCAResult ref = population_cca(c, 1);
  const ConvergenceTable table =
      sweep_alpha(c, {1.0, 0.1, 0.01, 0.001, 1e-6}, ref, 1);
  REQUIRE(table.rows.size() == 5);
  for (const ConvergenceRow& row : table.rows) {
    CHECK(row.k == 1);
    CHECK(row.proj_err_hs <= 1e-9);
    CHECK(row.weight_err_rkhs == Catch::Approx(0.0).margin(1e-8));
    CHECK(row.weight_err_rkhs * row.weight_err_rkhs <= row.proj_err_hs + 1e-10);
  }
}

TEST_CASE("ridge fit converges to the population fit as the ridge vanishes") {
  Rng rng(706);
  for (int rep = 0; rep < 5; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 4);
    const CCAResult ref = population_cca(c, 1);
    if (!ref.eigvec_simple[0]) continue;
    const ConvergenceTable table = sweep_alpha(c, {1e-2, 1e-4, 1e-6, 1e-8}, ref, 1);
    const ConvergenceRow& last = table.rows.back();
    CHECK(last.proj_err_hs <= 1e-4);
    if (!std::isnan(last.weight_err_rkhs)) CHECK(last.weight_err_rkhs <= 1e-2);
    CHECK(std::abs(last.rho - ref.rho[0]) <= 1e-6);
  }
}

TEST_CASE("sweep input validation") {
  const BlockCovariance c = population_operators(toy_model_2());
  const CCAResult ref = population_cca(c, 1);
  CHECK_THROWS_AS(sweep_alpha(c, {}, ref, 1), invalid_argument);
  CHECK_THROWS_AS(sweep_alpha(c, {0.1, 0.1}, ref, 1), invalid_argument);
  CHECK_THROWS_AS(sweep_alpha(c, {0.1, -0.01}, ref, 1), invalid_argument);
  CHECK_THROWS_AS(s1_alpha(c, 0.0), invalid_argument);
}
