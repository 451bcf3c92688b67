// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcca/model.hpp"
#include "fcca/tsvd.hpp"
#include "helpers.hpp"

using namespace fcca;

TEST_CASE("truncated operator on the toy model has the closed-form spectrum") {
  const BlockCovariance c = population_operators(toy_model_2());
  const TruncatedOperator t1 = s1_m(c, 1);
  CHECK(t1.eig.values[0] == Catch::Approx(0.81).margin(1e-10));
  CHECK(std::abs(t1.eig.values[1]) <= 1e-10);
  const TruncatedOperator t2 = s1_m(c, 2);
  CHECK(t2.eig.values[0] == Catch::Approx(0.81).margin(1e-10));
  CHECK(t2.eig.values[1] == Catch::Approx(0.09).margin(1e-10));
  CHECK(t2.hybrid_gap_hs == 0.0);
}

TEST_CASE("hybrid operator interpolates between ridge and truncation") {
  const BlockCovariance c = population_operators(toy_model_2());
  const TruncatedOperator h = s1_alpha_m(c, 0.1, 2);
  // At m = J the truncation retains everything, so the spectrum matches the
  // plain ridge values.
  CHECK(h.eig.values[0] == Catch::Approx(0.648 / (1.1 * 0.9)).margin(1e-10));
  CHECK(h.eig.values[1] == Catch::Approx(0.018 / (0.6 * 0.5)).margin(1e-10));
  CHECK(h.hybrid_gap_hs > 0.0);
  const TruncatedOperator pure = s1_m(c, 2);
  CHECK(h.hybrid_gap_hs == Catch::Approx(hs_norm(h.op - pure.op)).margin(1e-12));
}

TEST_CASE("truncated spectrum is non-decreasing in the truncation level") {
  Rng rng(801);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t J = 5;
    const BlockCovariance c = testutil::random_blocks(rng, J);
    const SideEigs eigs = make_side_eigs(c);
    std::vector<double> prev;
    for (std::size_t m = 1; m <= J; ++m) {
      const TruncatedOperator t = s1_m(c, m, &eigs);
      if (!prev.empty())
        for (std::size_t k = 0; k < prev.size(); ++k)
          CHECK(t.eig.values[k] >= prev[k] - 1e-10);
      prev = t.eig.values;
    }
    // full truncation level reproduces the unregularized squared correlations
    const CCAResult ref = population_cca(c, J);
    const TruncatedOperator full = s1_m(c, J, &eigs);
    for (std::size_t k = 0; k < J; ++k)
      CHECK(full.eig.values[k] ==
            Catch::Approx(ref.rho[k] * ref.rho[k]).margin(1e-10));
  }
}

TEST_CASE("truncation level must respect eigenvalue groups and rank") {
  const BlockCovariance c = population_operators(toy_model_2());
  const SideEigs eigs = make_side_eigs(c);
  // m = 3 on a rank-2 side: splits nothing but inverts a zero eigenvalue
  CHECK_THROWS_AS(s1_m(c, 3, &eigs), invalid_argument);
  CHECK_THROWS_AS(s1_m(c, 0, &eigs), invalid_argument);
  CHECK_THROWS_AS(s1_m(c, 65, &eigs), invalid_argument);
  // the zero eigenvalue group (62 modes) must not be split even when alpha > 0
  CHECK_THROWS_AS(s1_alpha_m(c, 0.1, 5, &eigs), invalid_argument);
  // but alpha > 0 tolerates truncating at the rank boundary... which for the
  // toy model is m = 2, where nothing is split
  CHECK_NOTHROW(s1_alpha_m(c, 0.1, 2, &eigs));
}

TEST_CASE("hybrid gap is reported against the pure truncation") {
  Rng rng(802);
  const BlockCovariance c = testutil::random_blocks(rng, 4);
  const SideEigs eigs = make_side_eigs(c);
  const TruncatedOperator pure = s1_m(c, 2, &eigs);
  const TruncatedOperator near = s1_alpha_m(c, 1e-9, 2, &eigs);
  CHECK(pure.hybrid_gap_hs == 0.0);
  CHECK(near.hybrid_gap_hs <= 1e-7 * std::max(1.0, hs_norm(pure.op)));
  const TruncatedOperator far = s1_alpha_m(c, 0.5, 2, &eigs);
  CHECK(far.hybrid_gap_hs > near.hybrid_gap_hs);
}

TEST_CASE("truncated eigenvector recovery satisfies the eigen equations") {
  Rng rng(803);
  for (int rep = 0; rep < 5; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 4);
    for (double a : {0.0, 0.05}) {
      const TruncatedOperator t = s1_alpha_m(c, a, 3);
      for (std::size_t k = 0; k < 2; ++k) {
        const double lam = t.eig.values[k];
        if (lam <= 1e-10) continue;
        const FunctionVec v = apply(t.half1, t.eig.functions[k]);
        const FunctionVec w = apply(t.e1, t.eig.functions[k]);
        CHECK(l2_norm(apply(t.op, v) - lam * v) <= 1e-9 * std::max(1.0, l2_norm(v)));
        CHECK(l2_norm(apply(adjoint(t.op), w) - lam * w) <=
              1e-9 * std::max(1.0, l2_norm(w)));
        CHECK(l2_inner(w, v) == Catch::Approx(1.0).margin(1e-9));
      }
    }
  }
}

TEST_CASE("truncated cca on the toy model recovers the designed pairs at full level") {
  const BlockCovariance c = population_operators(toy_model_2());
  const CCAResult r = cca_tsvd(c, 2, 2);
  CHECK(r.rho[0] == Catch::Approx(0.9).margin(1e-9));
  CHECK(r.rho[1] == Catch::Approx(0.3).margin(1e-9));
  CHECK(r.param.kind == FitParameter::Kind::m);
  CHECK(r.param.m == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(rkhs_norm(r.weights1[k]) == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(r.weight2_defined[k]);
    CHECK(rkhs_norm(r.weights2[k]) == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("truncation sweep converges to the population result") {
  Rng rng(804);
  const std::size_t J = 5;
  const BlockCovariance c = testutil::random_blocks(rng, J);
  const CCAResult ref = population_cca(c, 1);
  const ConvergenceTable table = sweep_m(c, {1, 2, 3, 4, 5}, ref, 1);
  REQUIRE(table.rows.size() == 5);
  CHECK(table.param_name == "m");
  const ConvergenceRow& last = table.rows.back();
  CHECK(last.proj_err_hs <= 1e-8);
  if (!std::isnan(last.weight_err_rkhs)) CHECK(last.weight_err_rkhs <= 1e-7);
  CHECK(std::abs(last.rho - ref.rho[0]) <= 1e-10);
}

TEST_CASE("truncation sweep input validation") {
  const BlockCovariance c = population_operators(toy_model_2());
  const CCAResult ref = population_cca(c, 1);
  CHECK_THROWS_AS(sweep_m(c, {}, ref, 1), invalid_argument);
  CHECK_THROWS_AS(sweep_m(c, {2, 2}, ref, 1), invalid_argument);
  CHECK_THROWS_AS(sweep_m(c, {2, 1}, ref, 1), invalid_argument);
  CHECK_THROWS_AS(cca_tikhonov_tsvd(c, 0.0, 2, 1), invalid_argument);
}
