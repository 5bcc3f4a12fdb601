#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"
#include "roughvar/summation.hpp"

namespace roughvar {

enum class VariationKind { pth, scaled, classical_scaled };
enum class SourceMode { analytic, finest_level, self_level };

inline const char* to_string(VariationKind k) {
  switch (k) {
    case VariationKind::pth: return "pth";
    case VariationKind::scaled: return "scaled";
    case VariationKind::classical_scaled: return "classical_scaled";
  }
  return "unknown";
}

inline const char* to_string(SourceMode m) {
  switch (m) {
    case SourceMode::analytic: return "analytic";
    case SourceMode::finest_level: return "finest_level";
    case SourceMode::self_level: return "self_level";
  }
  return "unknown";
}

/// Distribution function of an atomic variation measure at one partition
/// level. atoms[i] is the mass placed at times[i]; values[j] is the mass of
/// [0, times[j]) accumulated left to right, so values[0] = 0 and
/// values.back() is the terminal value.
struct VariationProfile {
  int level = 0;
  int grid_level = 0;
  VariationKind kind = VariationKind::pth;
  double p = 2.0;
  double gamma = 0.0;
  std::vector<std::size_t> indices;
  std::vector<double> times;
  std::vector<double> atoms;
  std::vector<double> values;
  bool divergent = false;
  std::size_t clamped_weights = 0;
  std::optional<SourceMode> source_mode;

  double terminal() const noexcept { return values.empty() ? 0.0 : values.back(); }

  /// Largest single-atom share of the total mass; an atom-risk diagnostic.
  double max_atom_share() const noexcept {
    const double total = terminal();
    if (!(total > 0) || !std::isfinite(total)) return 0.0;
    double m = 0;
    for (double a : atoms) m = std::max(m, a);
    return m / total;
  }
};

namespace detail {

inline double abs_pow(double d, double p) noexcept {
  if (p == 2.0) return d * d;
  if (p == 1.0) return std::abs(d);
  return std::pow(std::abs(d), p);
}

inline VariationProfile start_profile(const Path& x, const Partition& part, VariationKind kind,
                                      double p, double gamma) {
  require_same_grid(x, part);
  VariationProfile prof;
  prof.level = part.level();
  prof.grid_level = part.grid_level();
  prof.kind = kind;
  prof.p = p;
  prof.gamma = gamma;
  prof.indices.assign(part.indices().begin(), part.indices().end());
  prof.times = part.times();
  prof.atoms.resize(part.count());
  return prof;
}

// Fixed left-to-right reduction order keeps profiles bitwise reproducible.
inline void accumulate(VariationProfile& prof) {
  prof.values.resize(prof.atoms.size() + 1);
  prof.values[0] = 0.0;
  NeumaierSum<double> acc;
  for (std::size_t i = 0; i < prof.atoms.size(); ++i) {
    acc.add(prof.atoms[i]);
    prof.values[i + 1] = acc.result();
  }
  if (!std::isfinite(prof.values.back())) prof.divergent = true;
}

inline void require_positive_exponent(double p) {
  if (!(p > 0) || !std::isfinite(p))
    throw Error(ErrorCode::invalid_argument, "variation exponent p must be positive");
}

}  // namespace detail

/// Atomic p-th variation measure sum_j delta_{t_j} |x(t_{j+1}) - x(t_j)|^p.
inline VariationProfile pth_variation(const Path& x, const Partition& part, double p) {
  detail::require_positive_exponent(p);
  auto prof = detail::start_profile(x, part, VariationKind::pth, p, 0.0);
  auto idx = part.indices();
  for (std::size_t i = 0; i < prof.atoms.size(); ++i)
    prof.atoms[i] = detail::abs_pow(x[idx[i + 1]] - x[idx[i]], p);
  detail::accumulate(prof);
  return prof;
}

/// Supplies the limit p-th variation whose increments weight the scaled
/// quadratic variation.
class PVarSource {
 public:
  /// t -> [x]^(p)(t); must vanish at 0 and be nondecreasing.
  static PVarSource analytic(std::function<double(double)> fn) {
    if (!fn) throw Error(ErrorCode::source, "analytic source needs a function");
    if (std::abs(fn(0.0)) > 1e-14)
      throw Error(ErrorCode::source, "analytic p-th variation must vanish at t = 0");
    constexpr int probes = 1024;
    double prev = 0, scale = std::abs(fn(1.0));
    for (int j = 1; j <= probes; ++j) {
      const double v = fn(static_cast<double>(j) / probes);
      if (!std::isfinite(v) || v < prev - 1e-12 * std::max(scale, 1.0))
        throw Error(ErrorCode::source, "analytic p-th variation must be finite and nondecreasing");
      prev = v;
    }
    PVarSource s(SourceMode::analytic);
    s.fn_ = std::move(fn);
    return s;
  }

  /// Analytic source t -> slope * t.
  static PVarSource linear(double slope) {
    if (!(slope >= 0) || !std::isfinite(slope))
      throw Error(ErrorCode::source, "linear p-th variation slope must be finite and >= 0");
    PVarSource s(SourceMode::analytic);
    s.slope_ = slope;
    s.fn_ = [slope](double t) { return slope * t; };
    return s;
  }

  static PVarSource finest_level(VariationProfile finest) {
    if (finest.kind != VariationKind::pth)
      throw Error(ErrorCode::source, "finest-level source needs a p-th variation profile");
    PVarSource s(SourceMode::finest_level);
    s.finest_ = std::make_shared<const VariationProfile>(std::move(finest));
    return s;
  }

  static PVarSource self_level() { return PVarSource(SourceMode::self_level); }

  SourceMode mode() const noexcept { return mode_; }
  const VariationProfile* finest_profile() const noexcept { return finest_.get(); }
  std::optional<double> linear_slope() const noexcept { return slope_; }

  /// Increments of the p-th variation over each partition block, clamped at
  /// zero. Adds the number of clamped blocks to `clamped`.
  std::vector<double> block_weights(const Path& x, const Partition& part, double p,
                                    std::size_t& clamped) const {
    require_same_grid(x, part);
    auto idx = part.indices();
    std::vector<double> w(part.count());
    switch (mode_) {
      case SourceMode::self_level:
        for (std::size_t i = 0; i < w.size(); ++i)
          w[i] = detail::abs_pow(x[idx[i + 1]] - x[idx[i]], p);
        return w;
      case SourceMode::analytic:
        if (slope_) {
          for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = *slope_ * (part.time(i + 1) - part.time(i));
        } else {
          double prev = fn_(part.time(0));
          for (std::size_t i = 0; i < w.size(); ++i) {
            const double next = fn_(part.time(i + 1));
            w[i] = next - prev;
            prev = next;
          }
        }
        break;
      case SourceMode::finest_level:
        finest_weights(part, p, w);
        break;
    }
    for (double& v : w) {
      if (v < 0) {
        v = 0;
        ++clamped;
      }
    }
    return w;
  }

 private:
  explicit PVarSource(SourceMode m) : mode_(m) {}

  void finest_weights(const Partition& part, double p, std::vector<double>& w) const {
    const VariationProfile& f = *finest_;
    if (f.grid_level != part.grid_level())
      throw Error(ErrorCode::source, "finest-level profile lives on a different grid");
    if (f.level < part.level())
      throw Error(ErrorCode::source,
                  "finest-level profile (level " + std::to_string(f.level) +
                      ") is coarser than the evaluation partition (level " +
                      std::to_string(part.level()) + ")");
    if (std::abs(f.p - p) > 1e-12 * std::max(1.0, std::abs(p)))
      throw Error(ErrorCode::source, "finest-level profile exponent does not match p");

    const bool full_grid = f.indices.size() == (std::size_t{1} << f.grid_level) + 1;
    auto idx = part.indices();
    // Position of a partition point among the profile's points, or npos.
    auto locate = [&](std::size_t g) -> std::size_t {
      if (full_grid) return g;
      auto it = std::lower_bound(f.indices.begin(), f.indices.end(), g);
      if (it != f.indices.end() && *it == g) return static_cast<std::size_t>(it - f.indices.begin());
      return std::numeric_limits<std::size_t>::max();
    };
    auto interpolate = [&](double t) {
      auto it = std::upper_bound(f.times.begin(), f.times.end(), t);
      if (it == f.times.end()) return f.values.back();
      const std::size_t hi = static_cast<std::size_t>(it - f.times.begin());
      const std::size_t lo = hi - 1;
      const double u = (t - f.times[lo]) / (f.times[hi] - f.times[lo]);
      return f.values[lo] + u * (f.values[hi] - f.values[lo]);
    };
    constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t a = locate(idx[0]);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::size_t b = locate(idx[i + 1]);
      if (a != npos && b != npos) {
        NeumaierSum<double> acc;
        for (std::size_t k = a; k < b; ++k) acc.add(f.atoms[k]);
        w[i] = acc.result();
      } else {
        w[i] = interpolate(part.time(i + 1)) - interpolate(part.time(i));
      }
      a = b;
    }
  }

  SourceMode mode_;
  std::function<double(double)> fn_;
  std::optional<double> slope_;
  std::shared_ptr<const VariationProfile> finest_;
};

/// Pathwise scaled quadratic variation: atoms w_i^gamma |dx_i|^2 with
/// gamma = (p-2)/p and w_i the source's p-th variation increments.
/// w_i = 0 with dx_i = 0 contributes 0; w_i = 0 with dx_i != 0 and
/// gamma < 0 contributes +inf and flags the profile divergent.
inline VariationProfile scaled_qv(const Path& x, const Partition& part, double p,
                                  const PVarSource& src) {
  detail::require_positive_exponent(p);
  const double gamma = (p - 2.0) / p;
  auto prof = detail::start_profile(x, part, VariationKind::scaled, p, gamma);
  prof.source_mode = src.mode();
  auto idx = part.indices();
  if (gamma == 0.0) {
    for (std::size_t i = 0; i < prof.atoms.size(); ++i) {
      const double d = x[idx[i + 1]] - x[idx[i]];
      prof.atoms[i] = d * d;
    }
  } else {
    const auto w = src.block_weights(x, part, p, prof.clamped_weights);
    for (std::size_t i = 0; i < prof.atoms.size(); ++i) {
      const double d = x[idx[i + 1]] - x[idx[i]];
      const double d2 = d * d;
      if (d2 == 0.0) {
        prof.atoms[i] = 0.0;
      } else if (w[i] == 0.0) {
        prof.atoms[i] = gamma > 0 ? 0.0 : std::numeric_limits<double>::infinity();
      } else {
        prof.atoms[i] = std::pow(w[i], gamma) * d2;
      }
    }
  }
  detail::accumulate(prof);
  return prof;
}

/// Time-weighted scaled QV: atoms |dt_i|^gamma |dx_i|^2.
inline VariationProfile classical_scaled_qv(const Path& x, const Partition& part, double gamma) {
  if (!std::isfinite(gamma)) throw Error(ErrorCode::invalid_argument, "gamma must be finite");
  auto prof = detail::start_profile(x, part, VariationKind::classical_scaled, 2.0, gamma);
  auto idx = part.indices();
  for (std::size_t i = 0; i < prof.atoms.size(); ++i) {
    const double d = x[idx[i + 1]] - x[idx[i]];
    const double dt = std::ldexp(static_cast<double>(idx[i + 1] - idx[i]), -part.grid_level());
    prof.atoms[i] = gamma == 0.0 ? d * d : std::pow(dt, gamma) * (d * d);
  }
  detail::accumulate(prof);
  return prof;
}

/// How to build a PVarSource for a given path and exponent.
struct SourceSpec {
  SourceMode mode = SourceMode::finest_level;
  /// Level of the finest-level proxy; -1 means the path's grid level.
  int finest_level = -1;
  /// Slope C of the analytic source t -> C t; measured from the finest level
  /// when absent.
  std::optional<double> analytic_slope;
};

inline PVarSource make_source(const SourceSpec& spec, const Path& x, double p) {
  switch (spec.mode) {
    case SourceMode::self_level:
      return PVarSource::self_level();
    case SourceMode::finest_level: {
      const int lvl = spec.finest_level < 0 ? x.grid_level() : spec.finest_level;
      return PVarSource::finest_level(pth_variation(x, dyadic_partition(lvl, x.grid_level()), p));
    }
    case SourceMode::analytic: {
      if (spec.analytic_slope) return PVarSource::linear(*spec.analytic_slope);
      const int lvl = spec.finest_level < 0 ? x.grid_level() : spec.finest_level;
      return PVarSource::linear(pth_variation(x, dyadic_partition(lvl, x.grid_level()), p).terminal());
    }
  }
  throw Error(ErrorCode::source, "unknown source mode");
}

}  // namespace roughvar
