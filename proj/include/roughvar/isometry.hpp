#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roughvar/diagnostics.hpp"
#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"
#include "roughvar/roughness.hpp"
#include "roughvar/smooth_map.hpp"
#include "roughvar/summation.hpp"
#include "roughvar/variation.hpp"

namespace roughvar {

/// Relative errors at or below this are treated as exact agreement.
inline constexpr double kRoundoffRelErr = 1e-12;

/// Level-by-level comparison of two sides of an identity that holds in the
/// limit. Shared by the isometry, chain-rule and invariance checks.
struct ComparisonReport {
  std::string name;
  std::vector<int> levels;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> abs_err;
  std::vector<double> rel_err;
  /// Least-squares slope of log2(rel_err) against level; 0 when fewer than
  /// two errors are nonzero.
  double err_trend_slope = 0;
  /// Every level agrees to roundoff.
  bool exact = false;
  /// Proxy Hoelder exponent of x from max increments across levels.
  double holder_proxy = 0;
  double integrand_power = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;

  bool converging() const noexcept { return exact || err_trend_slope < 0; }
  bool passed(double tol) const noexcept {
    return !rel_err.empty() && rel_err.back() < tol && converging();
  }
};

using IsometryReport = ComparisonReport;

/// f(x(t_j)) on the same grid.
inline Path compose_path(const SmoothMap& f, const Path& x) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = f.f(x[j]);
    if (!std::isfinite(out[j]))
      throw Error(ErrorCode::numerical,
                  "map " + f.id + " is not finite at t = " + std::to_string(x.time(j)));
  }
  return Path(x.grid_level(), std::move(out),
              f.id + "(" + (x.label().empty() ? "x" : x.label()) + ")");
}

/// Left-endpoint Riemann-Stieltjes sums out[j] = sum_{i<j} g[i] mu(atom i).
inline std::vector<double> stieltjes_integral(std::span<const double> g,
                                              const VariationProfile& mu) {
  if (g.size() != mu.times.size())
    throw Error(ErrorCode::invalid_argument,
                "integrand has " + std::to_string(g.size()) + " values, measure has " +
                    std::to_string(mu.times.size()) + " points");
  std::vector<double> out(mu.values.size());
  out[0] = 0.0;
  NeumaierSum<double> acc;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    acc.add(g[i] * mu.atoms[i]);
    out[i + 1] = acc.result();
  }
  return out;
}

namespace detail {

inline void finish_comparison(ComparisonReport& r) {
  std::vector<double> xs, ys;
  r.exact = true;
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    r.abs_err.push_back(std::abs(r.lhs[i] - r.rhs[i]));
    const double denom = std::max({std::abs(r.lhs[i]), std::abs(r.rhs[i]), 1e-12});
    r.rel_err.push_back(r.abs_err.back() / denom);
    if (!(r.rel_err.back() <= kRoundoffRelErr)) r.exact = false;
    if (r.rel_err.back() > 0 && std::isfinite(r.rel_err.back())) {
      xs.push_back(r.levels[i]);
      ys.push_back(std::log2(r.rel_err.back()));
    }
  }
  const double s = ls_slope(xs, ys);
  r.err_trend_slope = std::isnan(s) ? 0.0 : s;
}

// Slope of -log2(max |dx|) against level.
inline double holder_proxy(const Path& x, const std::vector<int>& levels) {
  std::vector<double> xs, ys;
  for (int n : levels) {
    auto part = dyadic_partition(n, x.grid_level());
    auto idx = part.indices();
    double m = 0;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
      m = std::max(m, std::abs(x[idx[i + 1]] - x[idx[i]]));
    if (m > 0) {
      xs.push_back(n);
      ys.push_back(-std::log2(m));
    }
  }
  const double s = ls_slope(xs, ys);
  return std::isnan(s) ? 0.0 : s;
}

inline void require_levels(const std::vector<int>& levels, const Path& x) {
  if (levels.empty()) throw Error(ErrorCode::insufficient_data, "no levels requested");
  for (int n : levels)
    if (n < 0 || n > x.grid_level())
      throw Error(ErrorCode::invalid_refinement,
                  "level " + std::to_string(n) + " outside [0, grid level]");
}

inline std::vector<double> integrand_at(const SmoothMap& f, const Path& x,
                                        const Partition& part, double power) {
  auto idx = part.indices();
  std::vector<double> g(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) g[i] = detail::abs_pow(f.f1(x[idx[i]]), power);
  return g;
}

inline void flag_degenerate(ComparisonReport& r, const SmoothMap& f, const Path& x) {
  auto s = x.samples();
  auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  const auto chk = check_derivatives(f, *lo, *hi);
  std::size_t flat = 0;
  for (double v : s)
    if (std::abs(f.f1(v)) <= 1e-8 * std::max(chk.sup_f1, 1e-300)) ++flat;
  if (flat > 0) {
    r.degenerate = true;
    r.warnings.push_back(std::to_string(flat) + " grid points where f' vanishes");
  }
  if (f.lower_trust) r.warnings.push_back("map " + f.id + " is tabulated (lower trust)");
}

}  // namespace detail

/// Compares <f o x>^(p) at level n with the Stieltjes integral of
/// |f'(x)|^power against the level-n scaled QV of x. power defaults to p.
inline IsometryReport isometry_check(const Path& x, const SmoothMap& f, double p,
                                     const std::vector<int>& levels, const SourceSpec& src,
                                     std::optional<double> integrand_power = std::nullopt) {
  detail::require_levels(levels, x);
  IsometryReport r;
  r.name = "isometry";
  r.levels = levels;
  r.integrand_power = integrand_power.value_or(p);
  const Path fx = compose_path(f, x);
  const PVarSource src_x = make_source(src, x, p);
  const PVarSource src_f = make_source(src, fx, p);
  r.lhs.resize(levels.size());
  r.rhs.resize(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    const auto part = dyadic_partition(levels[i], x.grid_level());
    r.lhs[i] = scaled_qv(fx, part, p, src_f).terminal();
    const auto mu = scaled_qv(x, part, p, src_x);
    r.rhs[i] = stieltjes_integral(detail::integrand_at(f, x, part, r.integrand_power), mu).back();
  });
  detail::finish_comparison(r);
  r.holder_proxy = detail::holder_proxy(x, levels);
  const double alpha_needed = (std::sqrt(1.0 + 4.0 / p) - 1.0) / 2.0;
  if (r.holder_proxy <= alpha_needed)
    r.warnings.push_back("Hoelder proxy " + std::to_string(r.holder_proxy) +
                         " does not exceed " + std::to_string(alpha_needed));
  r.warnings.push_back("p-th variation continuity assumed; finest-level proxy is a step function");
  detail::flag_degenerate(r, f, x);
  return r;
}

/// Compares [f o x]^(p) at level n with sum |f'(x(t_i))|^p |dx_i|^p.
inline ComparisonReport chain_rule_check(const Path& x, const SmoothMap& f, double p,
                                         const std::vector<int>& levels) {
  detail::require_levels(levels, x);
  ComparisonReport r;
  r.name = "chainrule";
  r.levels = levels;
  r.integrand_power = p;
  const Path fx = compose_path(f, x);
  r.lhs.resize(levels.size());
  r.rhs.resize(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    const auto part = dyadic_partition(levels[i], x.grid_level());
    r.lhs[i] = pth_variation(fx, part, p).terminal();
    const auto mu = pth_variation(x, part, p);
    r.rhs[i] = stieltjes_integral(detail::integrand_at(f, x, part, p), mu).back();
  });
  detail::finish_comparison(r);
  r.holder_proxy = detail::holder_proxy(x, levels);
  detail::flag_degenerate(r, f, x);
  return r;
}

/// Compares <x + A>^(p) with <x>^(p) level by level; each path weights by
/// its own p-th variation source. A must have vanishing p-th variation.
inline ComparisonReport invariance_check(const Path& x, const Path& a, double p,
                                         const std::vector<int>& levels, const SourceSpec& src) {
  if (x.grid_level() != a.grid_level())
    throw Error(ErrorCode::grid_mismatch, "perturbation grid level differs from path");
  detail::require_levels(levels, x);
  ComparisonReport r;
  r.name = "invariance";
  r.levels = levels;
  std::vector<double> sum(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) sum[j] = x[j] + a[j];
  const Path xa(x.grid_level(), std::move(sum), "x+A");
  const PVarSource src_xa = make_source(src, xa, p);
  const PVarSource src_x = make_source(src, x, p);
  r.lhs.resize(levels.size());
  r.rhs.resize(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    const auto part = dyadic_partition(levels[i], x.grid_level());
    r.lhs[i] = scaled_qv(xa, part, p, src_xa).terminal();
    r.rhs[i] = scaled_qv(x, part, p, src_x).terminal();
  });
  detail::finish_comparison(r);

  // Admissibility: [A]^(p) must shrink with the level and stay small
  // relative to [x]^(p).
  std::vector<double> av, xs, ys;
  for (int n : levels) {
    const auto part = dyadic_partition(n, x.grid_level());
    const double va = pth_variation(a, part, p).terminal();
    av.push_back(va);
    if (va > 0) {
      xs.push_back(n);
      ys.push_back(std::log2(va));
    }
  }
  const double a_slope = ls_slope(xs, ys);
  const auto fine = dyadic_partition(x.grid_level(), x.grid_level());
  const double ratio =
      pth_variation(a, fine, p).terminal() / std::max(pth_variation(x, fine, p).terminal(), 1e-300);
  const bool all_zero = std::all_of(av.begin(), av.end(), [](double v) { return v == 0.0; });
  if (!all_zero && ((!std::isnan(a_slope) && a_slope > -0.1) || ratio > 1e-2))
    r.warnings.push_back("perturbation does not look admissible: [A]^(p) trend slope " +
                         std::to_string(a_slope) + ", finest ratio to [x]^(p) " +
                         std::to_string(ratio));
  r.holder_proxy = detail::holder_proxy(x, levels);
  return r;
}

}  // namespace roughvar
