// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcca/mat.hpp"
#include "fcca/rng.hpp"

using namespace fcca;

TEST_CASE("matrix product against hand computation") {
  Mat A(2, 3), B(3, 2);
  A(0, 0) = 1; A(0, 1) = 2; A(0, 2) = 3;
  A(1, 0) = 4; A(1, 1) = 5; A(1, 2) = 6;
  B(0, 0) = 7; B(0, 1) = 8;
  B(1, 0) = 9; B(1, 1) = 10;
  B(2, 0) = 11; B(2, 1) = 12;
  const Mat C = matmul(A, B);
  CHECK(C(0, 0) == 58.0);
  CHECK(C(0, 1) == 64.0);
  CHECK(C(1, 0) == 139.0);
  CHECK(C(1, 1) == 154.0);
  CHECK_THROWS_AS(matmul(B, Mat(3, 3)), invalid_argument);
}

TEST_CASE("jacobi eigensolver on a 2x2 with known spectrum") {
  Mat A(2, 2);
  A(0, 0) = 2; A(0, 1) = 1;
  A(1, 0) = 1; A(1, 1) = 2;
  const SymEig e = jacobi_eig(A);
  REQUIRE(e.values.size() == 2);
  CHECK(e.values[0] == Catch::Approx(3.0).margin(1e-13));
  CHECK(e.values[1] == Catch::Approx(1.0).margin(1e-13));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(e.vectors(0, 0) == Catch::Approx(r).margin(1e-13));
  CHECK(e.vectors(1, 0) == Catch::Approx(r).margin(1e-13));
  CHECK(std::abs(e.vectors(0, 1)) == Catch::Approx(r).margin(1e-13));
  CHECK(e.vectors(0, 1) * e.vectors(1, 1) < 0.0);
}

TEST_CASE("jacobi eigensolver reconstructs random symmetric matrices") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform01() * 24.0);
    Mat A(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) A(i, j) = A(j, i) = rng.gaussian();
    const SymEig e = jacobi_eig(A);
    Mat R(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          R(i, j) += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
    CHECK(frob_norm(R - A) <= 1e-11 * std::max(1.0, frob_norm(A)));
    // orthogonality of the eigenvector matrix
    const Mat VtV = matmul(transpose(e.vectors), e.vectors);
    CHECK(frob_norm(VtV - Mat::identity(n)) <= 1e-12 * static_cast<double>(n));
  }
}

TEST_CASE("jacobi rejects non-square input") {
  CHECK_THROWS_AS(jacobi_eig(Mat(2, 3)), invalid_argument);
}
