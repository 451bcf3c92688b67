// SPDX-License-Identifier: MIT
// Copyright (c) 2026 fcca contributors
#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fcca/common.hpp"
#include "fcca/grid.hpp"
#include "fcca/mat.hpp"
#include "fcca/model.hpp"
#include "fcca/tikhonov.hpp"

namespace fcca {

// All numeric output goes through one formatter: 17 significant digits
// round-trip a double exactly, so a rerun with the same seed is
// byte-identical and a reread reproduces the value bit for bit.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Path CSV files: first row = grid abscissae, one path per subsequent row.
// ---------------------------------------------------------------------------

struct PathsCsv {
  std::vector<double> points;
  Mat rows;
};

namespace detail {

inline double parse_cell(const std::string& cell, const std::string& file,
                         std::size_t line, std::size_t column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw data_format_error(file + ": row " + std::to_string(line) + ", column " +
                            std::to_string(column) + ": cannot parse '" + cell +
                            "' as a number");
  return v;
}

inline std::vector<double> parse_csv_line(const std::string& raw,
                                          const std::string& file,
                                          std::size_t line) {
  std::string s = raw;
  if (!s.empty() && s.back() == '\r') s.pop_back();
  std::vector<double> out;
  std::size_t start = 0, column = 1;
  while (true) {
    const std::size_t comma = s.find(',', start);
    const std::string cell = s.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(parse_cell(cell, file, line, column));
    if (comma == std::string::npos) break;
    start = comma + 1;
    ++column;
  }
  return out;
}

} // namespace detail

inline PathsCsv read_paths_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_format_error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line))
    throw data_format_error(path + ": empty file, expected a grid header row");
  PathsCsv out;
  out.points = detail::parse_csv_line(line, path, 1);
  const std::size_t p = out.points.size();

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<double> r = detail::parse_csv_line(line, path, lineno);
    if (r.size() != p)
      throw data_format_error(path + ": row " + std::to_string(lineno) + " has " +
                              std::to_string(r.size()) + " cells, expected " +
                              std::to_string(p));
    rows.push_back(std::move(r));
  }
  out.rows = Mat(rows.size(), p);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < p; ++j) out.rows(i, j) = rows[i][j];
  return out;
}

// Quadrature inferred from bare abscissae: each point gets its cell in the
// Voronoi partition of the observation interval, with half-cell extensions at
// the ends. For a uniform midpoint design this reproduces the uniform weights
// exactly.
inline Grid inferred_grid(const std::vector<double>& points,
                          const std::string& file) {
  if (points.size() < 2)
    throw data_format_error(file + ": grid header needs at least 2 points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1]))
      throw data_format_error(file + ": grid header column " + std::to_string(i + 1) +
                              " is not strictly increasing");
  const std::size_t p = points.size();
  std::vector<double> w(p);
  w[0] = points[1] - points[0];
  w[p - 1] = points[p - 1] - points[p - 2];
  for (std::size_t i = 1; i + 1 < p; ++i) w[i] = 0.5 * (points[i + 1] - points[i - 1]);
  Grid g{points, w};
  validate_grid(g);
  return g;
}

inline void write_paths_csv(const std::string& path, const Grid& g, const Mat& x) {
  if (x.cols != g.size())
    throw invalid_argument("write_paths_csv: path length does not match the grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_argument("write_paths_csv: cannot write " + path);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (j) out << ',';
    out << format_double(g.points[j]);
  }
  out << '\n';
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      if (j) out << ',';
      out << format_double(x(i, j));
    }
    out << '\n';
  }
  if (!out) throw invalid_argument("write_paths_csv: write failed for " + path);
}

inline void write_sample_paths(const std::string& x1_path, const std::string& x2_path,
                               const SamplePaths& paths) {
  write_paths_csv(x1_path, paths.grid1, paths.x1);
  write_paths_csv(x2_path, paths.grid2, paths.x2);
}

inline SamplePaths read_sample_paths(const std::string& x1_path,
                                     const std::string& x2_path) {
  PathsCsv a = read_paths_csv(x1_path);
  PathsCsv b = read_paths_csv(x2_path);
  if (a.rows.rows != b.rows.rows)
    throw data_format_error(x2_path + ": has " + std::to_string(b.rows.rows) +
                            " paths but " + x1_path + " has " +
                            std::to_string(a.rows.rows));
  SamplePaths p;
  p.grid1 = inferred_grid(a.points, x1_path);
  p.grid2 = inferred_grid(b.points, x2_path);
  p.n = a.rows.rows;
  p.x1 = std::move(a.rows);
  p.x2 = std::move(b.rows);
  return p;
}

// ---------------------------------------------------------------------------
// Report tables.
// ---------------------------------------------------------------------------

inline void write_convergence_csv(const std::string& path,
                                  const ConvergenceTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_argument("write_convergence_csv: cannot write " + path);
  out << table.param_name << ",k,rho,proj_err_hs,weight_err_rkhs\n";
  for (const auto& r : table.rows) {
    out << format_double(r.param) << ',' << r.k << ',' << format_double(r.rho)
        << ',' << format_double(r.proj_err_hs) << ','
        << format_double(r.weight_err_rkhs) << '\n';
  }
  if (!out) throw invalid_argument("write_convergence_csv: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Flat key=value configuration with dotted section keys.
// ---------------------------------------------------------------------------

using Config = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

} // namespace detail

inline Config parse_config_text(const std::string& text, const std::string& name) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw invalid_argument(name + ": line " + std::to_string(lineno) +
                             ": expected key=value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw invalid_argument(name + ": line " + std::to_string(lineno) + ": empty key");
    if (!cfg.emplace(key, value).second)
      throw invalid_argument(name + ": line " + std::to_string(lineno) +
                             ": duplicate key '" + key + "'");
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_argument("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

inline bool cfg_has(const Config& c, const std::string& key) {
  return c.find(key) != c.end();
}

inline std::string cfg_str(const Config& c, const std::string& key) {
  const auto it = c.find(key);
  if (it == c.end()) throw invalid_argument("config: missing required key '" + key + "'");
  return it->second;
}

inline std::string cfg_str_or(const Config& c, const std::string& key,
                              const std::string& fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : it->second;
}

inline double parse_double_value(const std::string& v, const std::string& what) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw invalid_argument(what + ": cannot parse '" + v + "' as a number");
  return x;
}

inline std::uint64_t parse_u64_value(const std::string& v, const std::string& what) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || v.find('-') != std::string::npos)
    throw invalid_argument(what + ": cannot parse '" + v + "' as a nonnegative integer");
  return static_cast<std::uint64_t>(x);
}

inline double cfg_double(const Config& c, const std::string& key) {
  return parse_double_value(cfg_str(c, key), "config key '" + key + "'");
}

inline double cfg_double_or(const Config& c, const std::string& key, double fallback) {
  return cfg_has(c, key) ? cfg_double(c, key) : fallback;
}

inline std::uint64_t cfg_u64(const Config& c, const std::string& key) {
  return parse_u64_value(cfg_str(c, key), "config key '" + key + "'");
}

inline std::uint64_t cfg_u64_or(const Config& c, const std::string& key,
                                std::uint64_t fallback) {
  return cfg_has(c, key) ? cfg_u64(c, key) : fallback;
}

inline std::vector<double> parse_double_list(const std::string& v,
                                             const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = v.find(',', start);
    const std::string cell = detail::trim(v.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (cell.empty()) throw invalid_argument(what + ": empty list entry");
    out.push_back(parse_double_value(cell, what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& v,
                                                const std::string& what) {
  std::vector<std::size_t> out;
  for (double d : parse_double_list(v, what)) {
    const auto s = static_cast<std::size_t>(d);
    if (static_cast<double>(s) != d)
      throw invalid_argument(what + ": expected integers");
    out.push_back(s);
  }
  return out;
}

} // namespace fcca
