// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcca/cca.hpp"
#include "fcca/model.hpp"
#include "helpers.hpp"

using namespace fcca;

TEST_CASE("population cca on the toy model gives the designed correlations") {
  const BlockCovariance c = population_operators(toy_model_2());
  const CCAResult r = population_cca(c, 2);
  REQUIRE(r.rho.size() == 2);
  CHECK(r.rho[0] == Catch::Approx(0.9).margin(1e-10));
  CHECK(r.rho[1] == Catch::Approx(0.3).margin(1e-10));
  CHECK(r.weight2_defined[0]);
  CHECK(r.weight2_defined[1]);
  CHECK(r.eigvec_simple[0]);
  CHECK(rkhs_norm(r.weights1[0]) == Catch::Approx(1.0).margin(1e-10));
  CHECK(rkhs_norm(r.weights2[1]) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("toy model weights align with the generating directions") {
  const ProcessModel m = toy_model_2();
  const BlockCovariance c = population_operators(m);
  const CCAResult r = population_cca(c, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const RkhsElement ref1 = gamma_apply(m.basis1[k], r.source1);
    const RkhsElement ref2 = gamma_apply(m.basis2[k], r.source2);
    CHECK(std::abs(rkhs_inner(r.weights1[k], ref1)) == Catch::Approx(1.0).margin(1e-9));
    CHECK(std::abs(rkhs_inner(r.weights2[k], ref2)) == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("cross-correlation operator is a contraction for valid blocks") {
  Rng rng(601);
  for (int rep = 0; rep < 20; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 5);
    CHECK(op_norm(build_R(c)) <= 1.0 + 1e-8);
  }
}

TEST_CASE("canonical correlations match the score-space eigenproblem") {
  // Independent route: in coefficient space the squared correlations are the
  // eigenvalues of L1^{-1/2} G L2^{-1} G' L1^{-1/2}.
  Rng rng(602);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t J = 4;
    const BlockCovariance c = testutil::random_blocks(rng, J);
    Mat t(J, J);
    for (std::size_t i = 0; i < J; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < J; ++k)
          s += c.S12.m(i, k) * c.S12.m(j, k) / c.S2.m(k, k);
        t(i, j) = s / std::sqrt(c.S1.m(i, i) * c.S1.m(j, j));
      }
    const SymEig ref = jacobi_eig(t);
    const CCAResult r = population_cca(c, J);
    for (std::size_t k = 0; k < J; ++k) {
      const double expected = std::sqrt(std::max(ref.values[k], 0.0));
      CHECK(r.rho[k] == Catch::Approx(expected).margin(1e-9));
    }
  }
}

TEST_CASE("cca output satisfies its structural invariants on random models") {
  Rng rng(603);
  for (int rep = 0; rep < 10; ++rep) {
    const BlockCovariance c = testutil::random_blocks(rng, 4);
    const CCAResult r = population_cca(c, 4);
    for (std::size_t k = 0; k < r.rho.size(); ++k) {
      CHECK(r.rho[k] >= 0.0);
      CHECK(r.rho[k] <= 1.0 + 1e-8);
      if (k > 0) CHECK(r.rho[k] <= r.rho[k - 1] + 1e-12);
      const LinOp& p = r.projections[k];
      CHECK(hs_norm(compose(p, p) - p) <= 1e-8 * std::max(1.0, hs_norm(p)));
      CHECK(self_adjoint_defect(p) <= 1e-8);
      if (r.rho[k] > 1e-10) {
        CHECK(r.weight2_defined[k]);
        CHECK(rkhs_norm(r.weights1[k]) == Catch::Approx(1.0).margin(1e-9));
        CHECK(rkhs_norm(r.weights2[k]) == Catch::Approx(1.0).margin(1e-9));
      }
    }
  }
}

TEST_CASE("uncoupled processes have zero canonical correlation") {
  Rng rng(604);
  BlockCovariance c = testutil::random_blocks(rng, 3);
  c.S12 = LinOp::zero(c.S12.domain, c.S12.range);
  c.S21 = LinOp::zero(c.S21.domain, c.S21.range);
  const CCAResult r = population_cca(c, 3);
  for (std::size_t k = 0; k < r.rho.size(); ++k) {
    CHECK(r.rho[k] <= 1e-10);
    CHECK_FALSE(r.weight2_defined[k]);
  }
}

TEST_CASE("sign alignment flips and refuses orthogonal pairs") {
  const BlockCovariance c = population_operators(toy_model_2());
  const CCAResult r = population_cca(c, 2);
  const RkhsElement flipped = -1.0 * r.weights1[0];
  const RkhsElement aligned = align_sign(flipped, r.weights1[0]);
  CHECK(rkhs_inner(aligned, r.weights1[0]) > 0.0);
  CHECK_THROWS_AS(align_sign(r.weights1[0], r.weights1[1]), invariant_failure);
}

TEST_CASE("block constructor rejects inconsistent grids") {
  const Grid a = coefficient_space(3), b = coefficient_space(4);
  Mat m3(3, 3), m4(4, 4), m34(3, 4);
  CHECK_THROWS_AS(make_blocks(LinOp{m3, a, a}, LinOp{m4, b, b}, LinOp{m4, b, b}),
                  invalid_argument);
  CHECK_NOTHROW(make_blocks(LinOp{m3, a, a}, LinOp{m4, b, b}, LinOp{m34, b, a}));
}
