// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <stdexcept>
#include <string>

namespace fcca {

// Error taxonomy. The CLI maps these onto process exit codes, so every throw
// site in the library picks the class by failure kind, not by module:
//
//   invalid_argument  - caller broke a documented precondition (grid mismatch,
//                       alpha <= 0, truncation level straddling a multiplicity
//                       group, ...).
//   data_format_error - malformed external input (CSV, config file).
//   invariant_failure - input data violates a mathematical invariant the
//                       algorithms rely on (operator not self-adjoint / not
//                       PSD, degenerate basis, sign alignment undefined, ...).
//   numerical_error   - a well-posed computation failed numerically
//                       (eigensolver non-convergence, resolvent shift on the
//                       spectrum, score undefined at a zero correlation).

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_argument : error {
  using error::error;
};

struct data_format_error : error {
  using error::error;
};

struct invariant_failure : error {
  using error::error;
};

struct numerical_error : error {
  using error::error;
};

// Library-wide default tolerances.
inline constexpr double kGroupTol = 1e-8;   // relative eigenvalue grouping
inline constexpr double kRankTol = 1e-12;   // relative spectral rank cutoff
inline constexpr double kJacobiTol = 1e-13; // relative off-diagonal target
inline constexpr int kJacobiMaxSweeps = 64;

} // namespace fcca
