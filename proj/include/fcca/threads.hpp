// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fcca {

// Thread count resolution: explicit request wins, then the FCCA_THREADS
// environment variable, then 1.
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FCCA_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// Runs fn(i) for i in [0, total). Work is assigned by a fixed stride over the
// index space, and callers must write results into index-addressed slots, so
// the outcome is identical for every thread count.
inline void parallel_for(std::size_t total, std::size_t n_threads,
                         const std::function<void(std::size_t)>& fn) {
  if (total == 0) return;
  n_threads = std::max<std::size_t>(1, std::min(n_threads, total));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < total; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n_threads);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < total; i += n_threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace fcca
