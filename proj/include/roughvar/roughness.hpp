#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "roughvar/diagnostics.hpp"
#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"
#include "roughvar/parallel.hpp"
#include "roughvar/variation.hpp"

namespace roughvar {

/// Inclusive range of dyadic levels, written `a:b` on the command line.
struct LevelRange {
  int first = 0;
  int last = 0;

  std::vector<int> to_vector() const {
    std::vector<int> v;
    for (int n = first; n <= last; ++n) v.push_back(n);
    return v;
  }
};

inline LevelRange default_levels(int grid_level) { return {6, grid_level - 2}; }

/// Terminal value of fn(level) for each level, evaluated concurrently.
template <class Fn>
std::vector<double> terminal_sequence(const std::vector<int>& levels, Fn&& fn) {
  std::vector<double> out(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) { out[i] = fn(levels[i]); });
  return out;
}

struct ProbeResult {
  double q = 0;
  Classification classification = Classification::inconclusive;
  LimitReport report;
};

/// Classifies the level sequence of the index-q scaled quadratic variation.
/// The source is rebuilt for q since its weights use [x]^(q).
inline ProbeResult classify_index(const Path& x, const std::vector<int>& levels, double q,
                                  const SourceSpec& src, const Thresholds& th = {},
                                  std::size_t window = 0) {
  if (!(q > 0)) throw Error(ErrorCode::invalid_argument, "index q must be positive");
  if (levels.size() < 3)
    throw Error(ErrorCode::insufficient_data, "classification needs at least 3 levels");
  const PVarSource source = make_source(src, x, q);
  auto values = terminal_sequence(levels, [&](int n) {
    return scaled_qv(x, dyadic_partition(n, x.grid_level()), q, source).terminal();
  });
  ProbeResult r;
  r.q = q;
  r.report = limit_diagnostics(levels, values, window, th);
  r.classification = r.report.classification;
  return r;
}

struct RoughnessReport {
  double p_bar_est = 0;
  double p_low = 0;
  double p_high = 0;
  double hurst_est = 0;
  std::vector<ProbeResult> per_q;
  std::vector<int> levels_used;
  SourceMode src_mode = SourceMode::finest_level;
  bool finite_observed = false;
  bool monotone = true;
};

/// Search failure carrying the probes evaluated so far.
class SearchError : public Error {
 public:
  SearchError(ErrorCode code, const std::string& what, RoughnessReport evidence)
      : Error(code, what), evidence_(std::move(evidence)) {}
  const RoughnessReport& evidence() const noexcept { return evidence_; }

 private:
  RoughnessReport evidence_;
};

namespace detail {
inline int classification_rank(Classification c) {
  switch (c) {
    case Classification::diverging: return 0;
    case Classification::finite_positive: return 1;
    case Classification::vanishing: return 2;
    default: return -1;
  }
}
}  // namespace detail

/// True when classifications never step back toward divergence as q grows.
/// Oscillating and inconclusive probes are ignored.
inline bool classifications_monotone(std::vector<ProbeResult> probes) {
  std::sort(probes.begin(), probes.end(),
            [](const ProbeResult& a, const ProbeResult& b) { return a.q < b.q; });
  int rank = -1;
  for (const auto& p : probes) {
    const int r = detail::classification_rank(p.classification);
    if (r < 0) continue;
    if (r < rank) return false;
    rank = r;
  }
  return true;
}

/// Bisection for the critical index p_bar. Diverging probes raise the lower
/// end; vanishing or finite-positive probes lower the upper end.
inline RoughnessReport critical_index_search(const Path& x, const std::vector<int>& levels,
                                             double p_min, double p_max, int iters,
                                             const SourceSpec& src,
                                             const Thresholds& th = search_thresholds(),
                                             std::size_t window = 0) {
  if (!(p_min > 0) || !(p_min < p_max))
    throw Error(ErrorCode::invalid_argument, "need 0 < p_min < p_max");
  if (iters < 0) throw Error(ErrorCode::invalid_argument, "iteration count must be >= 0");

  RoughnessReport rep;
  rep.levels_used = levels;
  rep.src_mode = src.mode;
  rep.p_low = p_min;
  rep.p_high = p_max;

  std::map<double, ProbeResult> cache;
  auto probe = [&](double q) -> const ProbeResult& {
    auto it = cache.find(q);
    if (it == cache.end()) {
      it = cache.emplace(q, classify_index(x, levels, q, src, th, window)).first;
      rep.per_q.push_back(it->second);
    }
    return it->second;
  };
  auto fail = [&](ErrorCode code, const std::string& msg) {
    rep.monotone = classifications_monotone(rep.per_q);
    rep.p_bar_est = 0.5 * (rep.p_low + rep.p_high);
    rep.hurst_est = 1.0 / rep.p_bar_est;
    throw SearchError(code, msg, rep);
  };

  const auto lo = probe(p_min).classification;
  const auto hi = probe(p_max).classification;
  if (lo != Classification::diverging || hi != Classification::vanishing)
    fail(ErrorCode::bracket, std::string("invalid bracket: q=") + std::to_string(p_min) + " is " +
                                 to_string(lo) + ", q=" + std::to_string(p_max) + " is " +
                                 to_string(hi) + " (need diverging / vanishing)");

  double last_finite = 0;
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (rep.p_low + rep.p_high);
    const auto c = probe(mid).classification;
    if (c == Classification::diverging) {
      rep.p_low = mid;
    } else if (c == Classification::vanishing || c == Classification::finite_positive) {
      rep.p_high = mid;
      if (c == Classification::finite_positive) {
        rep.finite_observed = true;
        last_finite = mid;
      }
    } else {
      fail(ErrorCode::inconclusive,
           std::string("probe q=") + std::to_string(mid) + " classified " + to_string(c));
    }
  }
  rep.p_bar_est = rep.finite_observed ? last_finite : 0.5 * (rep.p_low + rep.p_high);
  rep.hurst_est = 1.0 / rep.p_bar_est;
  rep.monotone = classifications_monotone(rep.per_q);
  return rep;
}

}  // namespace roughvar
