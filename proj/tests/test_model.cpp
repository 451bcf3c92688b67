// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcca/model.hpp"
#include "helpers.hpp"

using namespace fcca;

TEST_CASE("toy model validates and has the advertised diagnostics") {
  const ProcessModel m = toy_model_2();
  const ModelDiagnostics d = validate_model(m);
  CHECK(d.basis_residual1 <= 1e-12);
  CHECK(d.max_abs_correlation == Catch::Approx(0.9).margin(1e-12));
  CHECK(d.min_joint_eigenvalue >= -1e-12);
}

TEST_CASE("model validation rejects broken inputs") {
  ProcessModel m = toy_model_2();
  SECTION("non-descending variances") {
    m.lambda1 = {0.5, 1.0};
    CHECK_THROWS_AS(validate_model(m), invariant_failure);
  }
  SECTION("correlation above one") {
    m.gamma(0, 0) = 2.0 * std::sqrt(m.lambda1[0] * m.lambda2[0]);
    CHECK_THROWS_AS(validate_model(m), invariant_failure);
  }
  SECTION("non-orthonormal basis") {
    m.basis1[1] = m.basis1[0];
    CHECK_THROWS_AS(validate_model(m), invariant_failure);
  }
  SECTION("size mismatch") {
    m.lambda1.push_back(0.1);
    CHECK_THROWS_AS(validate_model(m), invariant_failure);
  }
}

TEST_CASE("population operators recover the score variances and coupling") {
  const ProcessModel m = toy_model_2();
  const BlockCovariance c = population_operators(m);
  validate_blocks(c);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(l2_inner(m.basis1[j], apply(c.S1, m.basis1[j])) ==
          Catch::Approx(m.lambda1[j]).margin(1e-12));
    CHECK(l2_inner(m.basis2[j], apply(c.S2, m.basis2[j])) ==
          Catch::Approx(m.lambda2[j]).margin(1e-12));
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(l2_inner(m.basis1[j], apply(c.S12, m.basis2[k])) ==
            Catch::Approx(m.gamma(j, k)).margin(1e-12));
  }
}

TEST_CASE("kernel evaluation matches the operator matrix against quadrature") {
  const ProcessModel m = toy_model_2();
  const BlockCovariance c = population_operators(m);
  // Operator matrix stores K(s,t) w_t, so dividing by the weight recovers K.
  const double s = m.grid1.points[5], t = m.grid1.points[20];
  CHECK(kernel_eval(m, s, t, KernelKind::K1) ==
        Catch::Approx(c.S1.m(5, 20) / m.grid1.weights[20]).margin(1e-12));
  CHECK(kernel_eval(m, s, t, KernelKind::K12) ==
        Catch::Approx(c.S12.m(5, 20) / m.grid2.weights[20]).margin(1e-12));
  CHECK_THROWS_AS(kernel_eval(m, 0.123456, t, KernelKind::K1), invalid_argument);
}

TEST_CASE("half-power kernel squares to the covariance kernel") {
  const ProcessModel m = toy_model_2();
  const Grid& g = m.grid1;
  // sum_u Phi1(s,u) Phi1(u,t) w_u = K1(s,t)
  const double s = g.points[3], t = g.points[40];
  double acc = 0.0;
  for (std::size_t u = 0; u < g.size(); ++u)
    acc += kernel_eval(m, s, g.points[u], KernelKind::Phi1) *
           kernel_eval(m, g.points[u], t, KernelKind::Phi1) * g.weights[u];
  CHECK(acc == Catch::Approx(kernel_eval(m, s, t, KernelKind::K1)).margin(1e-10));
}

TEST_CASE("sampled paths live in the basis span with the right second moments") {
  const ProcessModel m = toy_model_2();
  const std::size_t n = 20000;
  const SamplePaths p = sample_paths(m, n, 91);
  const Mat z = path_scores(p, m);
  // empirical moments of the scores
  Mat s(4, 4);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) s(a, b) += z(i, a) * z(i, b) / static_cast<double>(n);
  const Mat target = joint_score_covariance(m);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      CHECK(std::abs(s(a, b) - target(a, b)) <= 0.05);
}

TEST_CASE("path sampling is independent of call order") {
  const ProcessModel m = toy_model_2();
  const SamplePaths all = sample_paths(m, 5, 7);
  const SamplePaths tail = sample_paths(m, 3, 7);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < m.grid1.size(); ++t)
      CHECK(all.x1(i, t) == tail.x1(i, t));
}

TEST_CASE("random model helper produces valid models") {
  Rng rng(92);
  for (int rep = 0; rep < 10; ++rep) {
    const ProcessModel m = testutil::random_model(rng, 4, 32, rep % 2 == 0);
    const ModelDiagnostics d = validate_model(m);
    CHECK(d.max_abs_correlation <= 1.0 + 1e-12);
    CHECK(d.min_joint_eigenvalue >= -1e-10);
  }
}
