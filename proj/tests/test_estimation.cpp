// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcca/estimation.hpp"
#include "helpers.hpp"

using namespace fcca;

namespace {
double pearson(const std::vector<double>& u, const std::vector<double>& v) {
  const std::size_t n = u.size();
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    svv += (v[i] - mv) * (v[i] - mv);
    suv += (u[i] - mu) * (v[i] - mv);
  }
  return suv / std::sqrt(suu * svv);
}
} // namespace

TEST_CASE("two-path covariance is the scaled outer product of the difference") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 2, 31);
  const SampleCovariance cov = sample_covariance(p);
  FunctionVec d(p.grid1, std::vector<double>(p.grid1.size()));
  for (std::size_t t = 0; t < p.grid1.size(); ++t) d.values[t] = p.x1(0, t) - p.x1(1, t);
  const LinOp expected = 0.25 * tensor_outer(d, d);
  CHECK(hs_norm(cov.blocks.S1 - expected) <= 1e-12 * std::max(1.0, hs_norm(expected)));
}

TEST_CASE("constant paths give a zero covariance") {
  const ProcessModel m = toy_model_2();
  SamplePaths p = sample_paths(m, 5, 32);
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t t = 0; t < p.grid1.size(); ++t) p.x1(i, t) = 3.7;
  const SampleCovariance cov = sample_covariance(p);
  CHECK(hs_norm(cov.blocks.S1) <= 1e-12);
  CHECK(hs_norm(cov.blocks.S12) <= 1e-12);
}

TEST_CASE("sample covariance is consistent at large n") {
  const ProcessModel m = toy_model_2();
  const BlockCovariance pop = population_operators(m);
  const SamplePaths p = sample_paths(m, 10000, 33);
  const SampleCovariance cov = sample_covariance(p);
  CHECK(hs_norm(cov.blocks.S1 - pop.S1) <= 0.1);
  CHECK(hs_norm(cov.blocks.S2 - pop.S2) <= 0.1);
  CHECK(hs_norm(cov.blocks.S12 - pop.S12) <= 0.1);
}

TEST_CASE("sample covariance needs at least two paths") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 1, 34);
  CHECK_THROWS_AS(sample_covariance(p), invalid_argument);
}

TEST_CASE("ridge fit at moderate sample size sits near the regularized value") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 4000, 35);
  const CCAResult r = fit_tikhonov(p, 0.1, 2);
  CHECK(std::abs(r.rho[0] - std::sqrt(0.648 / (1.1 * 0.9))) <= 0.03);
}

TEST_CASE("truncated fit at moderate sample size sits near the population value") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 4000, 36);
  const CCAResult r = fit_tsvd(p, 2, 2);
  CHECK(std::abs(r.rho[0] - 0.9) <= 0.05);
  CHECK(std::abs(r.rho[1] - 0.3) <= 0.05);
}

TEST_CASE("an uncoupled zero process yields zero estimated correlation") {
  const ProcessModel m = toy_model_2();
  SamplePaths p = sample_paths(m, 200, 37);
  for (double& v : p.x2.a) v = 0.0;
  const CCAResult r = fit_tikhonov(p, 0.1, 2);
  for (std::size_t k = 0; k < r.rho.size(); ++k) {
    CHECK(r.rho[k] <= 1e-10);
    CHECK_FALSE(r.weight2_defined[k]);
  }
}

TEST_CASE("unregularized sample cca degenerates when paths are few") {
  const ProcessModel m = rank_rich_model();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SamplePaths p = sample_paths(m, 10, seed);
    const CCAResult r = fit_unregularized(p, 1);
    CHECK(r.degenerate);
    CHECK(r.rho[0] >= 1.0 - 1e-6);
  }
}

TEST_CASE("unregularized sample cca is honest once n clears the dimension") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 400, 38);
  const CCAResult r = fit_unregularized(p, 1);
  CHECK_FALSE(r.degenerate);
  CHECK(r.rho[0] < 1.0 - 1e-6);
}

TEST_CASE("canonical score correlation approaches the estimated correlation") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 10000, 39);
  const CCAResult r = fit_tikhonov(p, 0.01, 1);
  REQUIRE(r.weight2_defined[0]);
  const auto [u, v] = score_pair(r, p, 0);
  CHECK(std::abs(pearson(u, v) - r.rho[0]) <= 0.03);
}

TEST_CASE("score evaluation agrees between the coefficient route and the kernel route") {
  const ProcessModel m = toy_model_2();
  const SamplePaths p = sample_paths(m, 50, 40);
  const CCAResult r = fit_tikhonov(p, 0.1, 1);
  const ScoreTable t = canonical_scores(r, p);
  // Direct route: U_i = <x_i - mean, h> with h = sum_j coeffs_j / lambda_j phi_j.
  const SampleCovariance cov = sample_covariance(p);
  const RkhsElement& f = r.weights1[0];
  std::vector<double> h(p.grid1.size(), 0.0);
  for (std::size_t j = 0; j < f.rank; ++j) {
    const double cj = f.coeffs[j] / f.source->values[j];
    for (std::size_t a = 0; a < h.size(); ++a)
      h[a] += cj * f.source->functions[j].values[a];
  }
  for (std::size_t i = 0; i < p.n; ++i) {
    double direct = 0.0;
    for (std::size_t a = 0; a < h.size(); ++a)
      direct += (p.x1(i, a) - cov.mean1.values[a]) * h[a] * p.grid1.weights[a];
    CHECK(std::abs(direct - t.u[0][i]) <= 1e-9 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("score accessor rejects undefined components") {
  const ProcessModel m = toy_model_2();
  SamplePaths p = sample_paths(m, 100, 41);
  for (double& v : p.x2.a) v = 0.0;
  const CCAResult r = fit_tikhonov(p, 0.1, 1);
  CHECK_THROWS_AS(score_pair(r, p, 0), invalid_argument);
  CHECK_THROWS_AS(score_pair(r, p, 5), invalid_argument);
}
