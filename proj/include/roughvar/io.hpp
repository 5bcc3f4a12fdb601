#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "roughvar/diagnostics.hpp"
#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"
#include "roughvar/isometry.hpp"
#include "roughvar/parallel.hpp"
#include "roughvar/roughness.hpp"
#include "roughvar/schauder.hpp"
#include "roughvar/variation.hpp"

namespace roughvar::io {

using nlohmann::json;

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(ErrorCode::io, "cannot format number");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorCode::io, "line " + std::to_string(line) + ": bad number '" +
                                   std::string(s) + "'");
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  const auto size = in.tellg();
  if (size < 0) throw Error(ErrorCode::io, "cannot size " + path);
  std::string out(static_cast<std::size_t>(size), '\0');
  in.seekg(0);
  if (!in.read(out.data(), size)) throw Error(ErrorCode::io, "read failed for " + path);
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

namespace detail {

// Rows per formatting block. Blocks are formatted independently and
// concatenated, so the bytes do not depend on the thread count.
inline constexpr std::size_t kCsvBlockRows = std::size_t{1} << 16;

inline void append_row(std::string& out, double t, double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, t);
  *r.ptr++ = ',';
  r = std::to_chars(r.ptr, buf + sizeof buf, v);
  *r.ptr++ = '\n';
  out.append(buf, r.ptr);
}

// "t,value" header followed by rows (time(j), value(j)) for j < n.
template <class Time, class Value>
std::string format_csv(std::size_t n, Time&& time, Value&& value) {
  const std::size_t blocks = (n + kCsvBlockRows - 1) / kCsvBlockRows;
  std::vector<std::string> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * kCsvBlockRows, hi = std::min(n, lo + kCsvBlockRows);
    parts[b].reserve((hi - lo) * 48);
    for (std::size_t j = lo; j < hi; ++j) append_row(parts[b], time(j), value(j));
  });
  std::size_t total = 8;
  for (const auto& p : parts) total += p.size();
  std::string out;
  out.reserve(total);
  out += "t,value\n";
  for (const auto& p : parts) out += p;
  return out;
}

struct CsvChunk {
  std::size_t begin = 0, end = 0, first_line = 0;
  std::vector<double> ts, vs;
  std::exception_ptr failure;
};

inline void parse_chunk(std::string_view text, CsvChunk& c) {
  std::size_t pos = c.begin, line_no = c.first_line;
  while (pos < c.end) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos || eol > c.end) eol = c.end;
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      const auto comma = line.find(',');
      if (comma == std::string_view::npos)
        throw Error(ErrorCode::io, "line " + std::to_string(line_no) + ": expected two columns");
      c.ts.push_back(parse_double(line.substr(0, comma), line_no));
      c.vs.push_back(parse_double(line.substr(comma + 1), line_no));
    }
    ++line_no;
  }
}

}  // namespace detail

/// CSV with header `t,value`, LF line endings.
inline std::string path_to_csv(const Path& x) {
  return detail::format_csv(
      x.size(), [&](std::size_t j) { return x.time(j); }, [&](std::size_t j) { return x[j]; });
}

/// Parses a `t,value` CSV. Times must be uniformly spaced with 2^L + 1 rows;
/// any interval [t0, T] is mapped affinely onto [0, 1].
inline Path path_from_csv(const std::string& text, std::string label = {}) {
  const std::string_view all(text);
  // Header: first non-empty line.
  std::size_t pos = 0, line_no = 1;
  for (;;) {
    if (pos >= all.size()) throw Error(ErrorCode::io, "empty path CSV");
    std::size_t eol = all.find('\n', pos);
    if (eol == std::string_view::npos) eol = all.size();
    std::string_view line = all.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      ++line_no;
      continue;
    }
    if (line != "t,value")
      throw Error(ErrorCode::io, "expected CSV header 't,value', got '" + std::string(line) + "'");
    ++line_no;
    break;
  }

  // Body in newline-aligned chunks of about 4 MiB.
  constexpr std::size_t chunk_bytes = std::size_t{1} << 22;
  std::vector<detail::CsvChunk> chunks;
  for (std::size_t b = std::min(pos, all.size()); b < all.size();) {
    std::size_t e = std::min(all.size(), b + chunk_bytes);
    if (e < all.size()) {
      e = all.find('\n', e);
      e = e == std::string_view::npos ? all.size() : e + 1;
    }
    detail::CsvChunk c;
    c.begin = b;
    c.end = e;
    c.first_line = line_no;
    line_no += static_cast<std::size_t>(std::count(all.begin() + b, all.begin() + e, '\n'));
    chunks.push_back(std::move(c));
    b = e;
  }
  parallel_for(chunks.size(), [&](std::size_t i) {
    try {
      detail::parse_chunk(all, chunks[i]);
    } catch (...) {
      chunks[i].failure = std::current_exception();
    }
  });
  std::size_t rows = 0;
  for (const auto& c : chunks) {
    if (c.failure) std::rethrow_exception(c.failure);
    rows += c.vs.size();
  }
  std::vector<double> ts, vs;
  ts.reserve(rows);
  vs.reserve(rows);
  for (const auto& c : chunks) {
    ts.insert(ts.end(), c.ts.begin(), c.ts.end());
    vs.insert(vs.end(), c.vs.begin(), c.vs.end());
  }

  if (vs.size() < 2) throw Error(ErrorCode::io, "path CSV needs at least two rows");
  const std::size_t n = vs.size() - 1;
  if ((n & (n - 1)) != 0)
    throw Error(ErrorCode::io, "path CSV needs 2^L + 1 rows, got " + std::to_string(vs.size()));
  int level = 0;
  while ((std::size_t{1} << level) < n) ++level;
  const double t0 = ts.front(), t1 = ts.back();
  if (!(t1 > t0)) throw Error(ErrorCode::io, "path CSV times must increase");
  for (std::size_t j = 0; j <= n; ++j) {
    const double expect = t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(n);
    if (std::abs(ts[j] - expect) > 1e-9 * (t1 - t0))
      throw Error(ErrorCode::io, "path CSV times are not uniformly spaced at row " +
                                     std::to_string(j + 1));
  }
  return Path(level, std::move(vs), std::move(label));
}

inline json path_to_json(const Path& x) {
  return {{"grid_level", x.grid_level()},
          {"samples", std::vector<double>(x.samples().begin(), x.samples().end())},
          {"label", x.label()}};
}

inline Path path_from_json(const json& j) {
  try {
    return Path(j.at("grid_level").get<int>(), j.at("samples").get<std::vector<double>>(),
                j.value("label", std::string{}));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io, std::string("bad path JSON: ") + e.what());
  }
}

/// Loads a path from .json or CSV, by extension.
inline Path load_path(const std::string& file) {
  const std::string text = read_file(file);
  if (file.size() >= 5 && file.compare(file.size() - 5, 5, ".json") == 0) {
    try {
      return path_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::io, file + ": " + e.what());
    }
  }
  return path_from_csv(text, file);
}

inline json coefficients_to_json(const SchauderCoefficients& c) {
  return {{"max_level", c.max_level()}, {"theta", c.theta()}, {"label", c.label()}};
}

inline SchauderCoefficients coefficients_from_json(const json& j) {
  try {
    auto theta = j.at("theta").get<std::vector<std::vector<double>>>();
    if (j.contains("max_level") && j.at("max_level").get<int>() != static_cast<int>(theta.size()))
      throw Error(ErrorCode::io, "max_level does not match theta rows");
    return SchauderCoefficients(std::move(theta), j.value("label", std::string{}));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io, std::string("bad coefficient JSON: ") + e.what());
  }
}

inline std::string profile_to_csv(const VariationProfile& prof) {
  return detail::format_csv(
      prof.times.size(), [&](std::size_t j) { return prof.times[j]; },
      [&](std::size_t j) { return prof.values[j]; });
}

inline json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

inline json numbers(const std::vector<double>& vs) {
  json a = json::array();
  for (double v : vs) a.push_back(number(v));
  return a;
}

inline json profile_sidecar(const VariationProfile& prof) {
  json j = {{"level", prof.level},
            {"grid_level", prof.grid_level},
            {"p", prof.p},
            {"gamma", prof.gamma},
            {"kind", to_string(prof.kind)},
            {"terminal", number(prof.terminal())},
            {"source_mode", prof.source_mode ? json(to_string(*prof.source_mode)) : json(nullptr)},
            {"divergent", prof.divergent},
            {"clamped_weights", prof.clamped_weights},
            {"max_atom_share", prof.max_atom_share()}};
  return j;
}

inline json to_json(const Thresholds& t) {
  return {{"vanish_level", t.vanish_level}, {"diverge_level", t.diverge_level},
          {"slope_tol", t.slope_tol},       {"osc_ratio", t.osc_ratio},
          {"osc_step", t.osc_step}};
}

inline json to_json(const LimitReport& r) {
  return {{"levels", r.levels},
          {"terminal_values", numbers(r.terminal_values)},
          {"window", r.window},
          {"classification", to_string(r.classification)},
          {"limsup_est", number(r.limsup_est)},
          {"liminf_est", number(r.liminf_est)},
          {"trend_slope", number(r.trend_slope)},
          {"nonpositive_in_window", r.nonpositive_in_window}};
}

inline json to_json(const ProbeResult& p) {
  return {{"q", p.q},
          {"classification", to_string(p.classification)},
          {"terminal_values", numbers(p.report.terminal_values)},
          {"trend_slope", number(p.report.trend_slope)}};
}

inline json to_json(const RoughnessReport& r) {
  json per_q = json::array();
  for (const auto& p : r.per_q) per_q.push_back(to_json(p));
  return {{"p_bar_est", r.p_bar_est},
          {"bracket", {r.p_low, r.p_high}},
          {"hurst_est", r.hurst_est},
          {"per_q", per_q},
          {"levels_used", r.levels_used},
          {"src_mode", to_string(r.src_mode)},
          {"finite_observed", r.finite_observed},
          {"monotone", r.monotone}};
}

inline std::string per_q_csv(const RoughnessReport& r) {
  std::string out = "q,level,value\n";
  for (const auto& p : r.per_q)
    for (std::size_t i = 0; i < p.report.levels.size(); ++i)
      out += format_double(p.q) + "," + std::to_string(p.report.levels[i]) + "," +
             format_double(p.report.terminal_values[i]) + "\n";
  return out;
}

inline json to_json(const ComparisonReport& r) {
  return {{"name", r.name},
          {"levels", r.levels},
          {"lhs_terminal", numbers(r.lhs)},
          {"rhs_terminal", numbers(r.rhs)},
          {"abs_err", numbers(r.abs_err)},
          {"rel_err", numbers(r.rel_err)},
          {"err_trend_slope", r.err_trend_slope},
          {"exact", r.exact},
          {"converging", r.converging()},
          {"holder_proxy", r.holder_proxy},
          {"integrand_power", r.integrand_power},
          {"degenerate", r.degenerate},
          {"warnings", r.warnings}};
}

inline std::string comparison_csv(const ComparisonReport& r) {
  std::string out = "level,lhs,rhs,rel_err\n";
  for (std::size_t i = 0; i < r.levels.size(); ++i)
    out += std::to_string(r.levels[i]) + "," + format_double(r.lhs[i]) + "," +
           format_double(r.rhs[i]) + "," + format_double(r.rel_err[i]) + "\n";
  return out;
}

}  // namespace roughvar::io
