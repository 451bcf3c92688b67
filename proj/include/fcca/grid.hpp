// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fcca/common.hpp"

namespace fcca {

// Quadrature grid on a compact interval: abscissae t_j with positive weights
// w_j. All integrals in the library reduce to sum_j w_j * (...), so the grid
// is the single source of truth for the inner product.
struct Grid {
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

inline bool same_grid(const Grid& a, const Grid& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i] != b.points[i] || a.weights[i] != b.weights[i]) return false;
  }
  return true;
}

// Checks the structural invariants; measure < 0 skips the total-mass check
// (used for coefficient-space grids carrying counting measure).
inline void validate_grid(const Grid& g, double measure = -1.0) {
  if (g.points.size() != g.weights.size())
    throw invalid_argument("grid: points/weights length mismatch");
  if (g.points.empty()) throw invalid_argument("grid: empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g.points[i]) || !std::isfinite(g.weights[i]))
      throw invalid_argument("grid: non-finite entry");
    if (g.weights[i] <= 0.0) throw invalid_argument("grid: nonpositive weight");
    if (i > 0 && !(g.points[i] > g.points[i - 1]))
      throw invalid_argument("grid: points not strictly increasing");
  }
  if (measure >= 0.0) {
    double total = 0.0;
    for (double w : g.weights) total += w;
    if (std::abs(total - measure) > 1e-12 * std::max(measure, 1.0))
      throw invalid_argument("grid: weights do not sum to interval length");
  }
}

// Midpoint rule on [a,b] with p cells: t_j = a + (j+1/2)h, w_j = h. This is
// the default discretization; for the cosine bases used in the test models
// the midpoint rule preserves discrete orthonormality exactly (DCT-II).
inline Grid uniform_grid(double a, double b, std::size_t p) {
  if (!(b > a)) throw invalid_argument("uniform_grid: need b > a");
  if (p == 0) throw invalid_argument("uniform_grid: need p >= 1");
  Grid g;
  g.points.resize(p);
  g.weights.assign(p, (b - a) / static_cast<double>(p));
  const double h = (b - a) / static_cast<double>(p);
  for (std::size_t j = 0; j < p; ++j) g.points[j] = a + (static_cast<double>(j) + 0.5) * h;
  return g;
}

// Composite trapezoid rule on [a,b] with p nodes including the endpoints.
inline Grid trapezoid_grid(double a, double b, std::size_t p) {
  if (!(b > a)) throw invalid_argument("trapezoid_grid: need b > a");
  if (p < 2) throw invalid_argument("trapezoid_grid: need p >= 2");
  Grid g;
  g.points.resize(p);
  g.weights.assign(p, 0.0);
  const double h = (b - a) / static_cast<double>(p - 1);
  for (std::size_t j = 0; j < p; ++j) {
    g.points[j] = a + static_cast<double>(j) * h;
    g.weights[j] = (j == 0 || j + 1 == p) ? h / 2.0 : h;
  }
  return g;
}

// Index grid 1..n with unit weights (counting measure). Lets sequence-space
// computations reuse the same operator algebra as function-space ones.
inline Grid coefficient_space(std::size_t n) {
  if (n == 0) throw invalid_argument("coefficient_space: need n >= 1");
  Grid g;
  g.points.resize(n);
  g.weights.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) g.points[j] = static_cast<double>(j + 1);
  return g;
}

// A function sampled on a grid. Value semantics; the grid is carried along so
// inner products can refuse mismatched operands instead of silently pairing
// values from different discretizations.
struct FunctionVec {
  Grid grid;
  std::vector<double> values;

  FunctionVec() = default;
  FunctionVec(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (grid.points.size() != values.size())
      throw invalid_argument("function: values length differs from grid size");
  }

  std::size_t size() const { return values.size(); }
};

inline double l2_inner(const FunctionVec& f, const FunctionVec& g) {
  if (!same_grid(f.grid, g.grid))
    throw invalid_argument("l2_inner: functions live on different grids");
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    s += f.grid.weights[j] * f.values[j] * g.values[j];
  return s;
}

inline double l2_norm(const FunctionVec& f) { return std::sqrt(l2_inner(f, f)); }

inline FunctionVec operator+(const FunctionVec& f, const FunctionVec& g) {
  if (!same_grid(f.grid, g.grid)) throw invalid_argument("function add: grid mismatch");
  FunctionVec h = f;
  for (std::size_t j = 0; j < h.size(); ++j) h.values[j] += g.values[j];
  return h;
}

inline FunctionVec operator-(const FunctionVec& f, const FunctionVec& g) {
  if (!same_grid(f.grid, g.grid)) throw invalid_argument("function sub: grid mismatch");
  FunctionVec h = f;
  for (std::size_t j = 0; j < h.size(); ++j) h.values[j] -= g.values[j];
  return h;
}

inline FunctionVec operator*(double c, const FunctionVec& f) {
  FunctionVec h = f;
  for (double& v : h.values) v *= c;
  return h;
}

// Modified Gram-Schmidt in the weighted inner product. Throws if an input
// direction is (numerically) linearly dependent on the earlier ones: the
// post-projection norm falling below 1e-10 times the first vector's norm is
// treated as degeneracy, not as a basis vector.
inline std::vector<FunctionVec> discrete_orthonormalize(std::vector<FunctionVec> fs) {
  if (fs.empty()) return fs;
  double leading = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    if (!same_grid(fs[k].grid, fs[0].grid))
      throw invalid_argument("orthonormalize: inputs on different grids");
    for (std::size_t i = 0; i < k; ++i) {
      const double c = l2_inner(fs[k], fs[i]);
      for (std::size_t j = 0; j < fs[k].size(); ++j)
        fs[k].values[j] -= c * fs[i].values[j];
    }
    const double nrm = l2_norm(fs[k]);
    if (k == 0) leading = nrm;
    if (nrm < 1e-10 * leading)
      throw invariant_failure("orthonormalize: degenerate basis at index " +
                              std::to_string(k));
    for (double& v : fs[k].values) v /= nrm;
  }
  return fs;
}

} // namespace fcca
