#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "roughvar/error.hpp"

namespace roughvar {

enum class Classification { vanishing, finite_positive, diverging, oscillating, inconclusive };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::vanishing: return "vanishing";
    case Classification::finite_positive: return "finite_positive";
    case Classification::diverging: return "diverging";
    case Classification::oscillating: return "oscillating";
    case Classification::inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Decision thresholds for classifying a level-indexed sequence.
struct Thresholds {
  double vanish_level = 1e-6;
  double diverge_level = 1e6;
  /// |trend slope| (log2 units per level) beyond which the tail is taken
  /// to vanish or diverge.
  double slope_tol = 0.25;
  /// Tail max/min ratio above which a non-monotone tail may oscillate.
  double osc_ratio = 100.0;
  /// Oscillation also needs a rise and a fall each by at least this factor.
  double osc_step = 2.0;
};

/// Decision rule used by the critical-index bisection: the slope deadband
/// collapses to a sign test so the bracket closes on the zero crossing.
inline Thresholds search_thresholds() {
  Thresholds t;
  t.slope_tol = 0.0;
  return t;
}

struct LimitReport {
  std::vector<int> levels;
  std::vector<double> terminal_values;
  std::size_t window = 0;
  Classification classification = Classification::inconclusive;
  double limsup_est = 0;
  double liminf_est = 0;
  double trend_slope = 0;
  /// Non-positive values in the window; counted as vanishing evidence.
  std::size_t nonpositive_in_window = 0;
};

/// Least-squares slope of ys against xs.
inline double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

/// Summarizes the tail of a level-indexed sequence. window = 0 means all
/// levels.
inline LimitReport limit_diagnostics(const std::vector<int>& levels,
                                     const std::vector<double>& terminal_values,
                                     std::size_t window = 0, const Thresholds& th = {}) {
  if (levels.size() != terminal_values.size())
    throw Error(ErrorCode::invalid_argument, "levels and values differ in length");
  if (levels.size() < 3)
    throw Error(ErrorCode::insufficient_data, "limit diagnostics need at least 3 levels");
  if (window == 0) window = levels.size();
  if (window < 3 || window > levels.size())
    throw Error(ErrorCode::insufficient_data,
                "window must lie in [3, " + std::to_string(levels.size()) + "]");
  for (double v : terminal_values)
    if (std::isnan(v)) throw Error(ErrorCode::numerical, "NaN terminal value");

  LimitReport r;
  r.levels = levels;
  r.terminal_values = terminal_values;
  r.window = window;

  const std::size_t first = levels.size() - window;
  std::vector<double> tail(terminal_values.begin() + first, terminal_values.end());
  r.limsup_est = *std::max_element(tail.begin(), tail.end());
  r.liminf_est = *std::min_element(tail.begin(), tail.end());

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double v = tail[i];
    if (v > 0 && std::isfinite(v)) {
      xs.push_back(levels[first + i]);
      ys.push_back(std::log2(v));
    } else if (!(v > 0)) {
      ++r.nonpositive_in_window;
    }
  }
  r.trend_slope = ls_slope(xs, ys);

  bool rise = false, fall = false;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    const double a = tail[i - 1], b = tail[i];
    if (b > a && (a <= 0 || b >= th.osc_step * a)) rise = true;
    if (b < a && (b <= 0 || a >= th.osc_step * b)) fall = true;
  }
  const bool wide = r.liminf_est <= 0 || r.limsup_est > th.osc_ratio * r.liminf_est;
  const bool has_inf = std::isinf(r.limsup_est);
  const bool slope_ok = !std::isnan(r.trend_slope);

  if (has_inf && r.liminf_est > 0) {
    r.classification = Classification::diverging;
  } else if (wide && rise && fall) {
    r.classification = Classification::oscillating;
  } else if (r.limsup_est < th.vanish_level ||
             (slope_ok && r.trend_slope < -th.slope_tol) ||
             (xs.size() < 2 && r.nonpositive_in_window > 0)) {
    r.classification = Classification::vanishing;
  } else if (r.liminf_est > th.diverge_level || has_inf ||
             (slope_ok && r.trend_slope > th.slope_tol)) {
    r.classification = Classification::diverging;
  } else if (r.liminf_est >= th.vanish_level && r.limsup_est <= th.diverge_level) {
    r.classification = Classification::finite_positive;
  } else {
    r.classification = Classification::inconclusive;
  }
  return r;
}

}  // namespace roughvar
