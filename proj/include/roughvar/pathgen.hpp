#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"
#include "roughvar/schauder.hpp"

namespace roughvar {

inline constexpr const char* kGeneratorVersion = "roughvar-gen/1 (mt19937_64, circulant-fgn)";
inline constexpr int kMaxFbmLevel = 22;
inline constexpr int kMaxExactFbmLevel = 12;
inline constexpr double kEmbeddingTolerance = 1e-10;

/// Autocovariance of fractional Gaussian noise at lag k, grid units.
inline double fgn_autocovariance(double hurst, double lag) {
  const double h2 = 2.0 * hurst;
  const double k = std::abs(lag);
  return 0.5 * (std::pow(k + 1.0, h2) + std::pow(std::abs(k - 1.0), h2) - 2.0 * std::pow(k, h2));
}

namespace detail {

// FFTW planning is not thread safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw Error(ErrorCode::numerical, "fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

inline void fft_forward_inplace(fftw_complex* buf, std::size_t n) {
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

/// Eigenvalues of the minimal circulant embedding of the fGn covariance
/// (size 2N). Returns an empty vector if a negative eigenvalue exceeds the
/// clamping tolerance.
inline std::vector<double> circulant_eigenvalues(double hurst, std::size_t n) {
  const std::size_t m = 2 * n;
  FftwBuffer buf(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t lag = j <= n ? j : m - j;
    buf.data[j][0] = fgn_autocovariance(hurst, static_cast<double>(lag));
    buf.data[j][1] = 0.0;
  }
  fft_forward_inplace(buf.data, m);
  std::vector<double> lambda(m);
  double max_l = 0;
  for (std::size_t j = 0; j < m; ++j) {
    lambda[j] = buf.data[j][0];
    max_l = std::max(max_l, lambda[j]);
  }
  for (double& l : lambda) {
    if (l < 0) {
      if (l < -kEmbeddingTolerance * max_l) return {};
      l = 0;
    }
  }
  return lambda;
}

/// Exact sampler by Durbin-Levinson recursion; O(N^2).
inline std::vector<double> fgn_durbin_levinson(double hurst, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> cov(n);
  for (std::size_t k = 0; k < n; ++k) cov[k] = fgn_autocovariance(hurst, static_cast<double>(k));
  std::vector<double> out(n), phi(n, 0.0), prev(n, 0.0);
  double v = cov[0];
  out[0] = std::sqrt(v) * normal(rng);
  for (std::size_t t = 1; t < n; ++t) {
    double num = cov[t];
    for (std::size_t j = 1; j < t; ++j) num -= prev[j] * cov[t - j];
    const double kappa = num / v;
    phi[t] = kappa;
    for (std::size_t j = 1; j < t; ++j) phi[j] = prev[j] - kappa * prev[t - j];
    v *= (1.0 - kappa * kappa);
    double mean = 0;
    for (std::size_t j = 1; j <= t; ++j) mean += phi[j] * out[t - j];
    out[t] = mean + std::sqrt(std::max(v, 0.0)) * normal(rng);
    prev = phi;
  }
  return out;
}

}  // namespace detail

enum class FbmMethod { circulant, exact };

/// Fractional Brownian motion on the level-L dyadic grid, sampled from the
/// stationary increment covariance and scaled by 2^{-LH}. Falls back to the
/// exact sampler when the circulant embedding is not nonnegative.
inline Path fbm_path(double hurst, int grid_level, std::uint64_t seed,
                     FbmMethod method = FbmMethod::circulant) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw Error(ErrorCode::invalid_argument, "fBM H must lie in (0,1)");
  if (grid_level < 0 || grid_level > kMaxFbmLevel)
    throw Error(ErrorCode::invalid_argument,
                "fBM grid level must be in [0, " + std::to_string(kMaxFbmLevel) + "]");
  const std::size_t n = std::size_t{1} << grid_level;
  std::mt19937_64 rng(seed);
  std::vector<double> incr;

  std::vector<double> lambda;
  if (method == FbmMethod::circulant) lambda = detail::circulant_eigenvalues(hurst, n);
  if (!lambda.empty()) {
    const std::size_t m = 2 * n;
    std::normal_distribution<double> normal;
    detail::FftwBuffer buf(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double s = std::sqrt(lambda[k] / static_cast<double>(m));
      const double a = normal(rng);
      const double b = normal(rng);
      buf.data[k][0] = s * a;
      buf.data[k][1] = s * b;
    }
    detail::fft_forward_inplace(buf.data, m);
    incr.resize(n);
    for (std::size_t j = 0; j < n; ++j) incr[j] = buf.data[j][0];
  } else {
    if (grid_level > kMaxExactFbmLevel)
      throw Error(ErrorCode::numerical,
                  "circulant embedding not nonnegative and grid level exceeds exact-sampler "
                  "limit " + std::to_string(kMaxExactFbmLevel));
    incr = detail::fgn_durbin_levinson(hurst, n, rng);
  }

  const double scale = std::pow(2.0, -grid_level * hurst);
  std::vector<double> x(n + 1);
  x[0] = 0;
  for (std::size_t j = 0; j < n; ++j) x[j + 1] = x[j] + scale * incr[j];
  return Path(grid_level, std::move(x),
              "fbm(H=" + std::to_string(hurst) + ",seed=" + std::to_string(seed) + ")");
}

enum class SmoothKind { sine, poly };

/// Lipschitz perturbation: amplitude * sin(2 pi freq t + phase) or
/// amplitude * sum_k coeffs[k] t^k.
struct SmoothParams {
  double frequency = 1.0;
  double phase = 0.0;
  std::vector<double> coeffs;
};

inline Path smooth_perturbation(SmoothKind kind, double amplitude, int grid_level,
                                const SmoothParams& params = {}) {
  if (grid_level < 0 || grid_level > kMaxGridLevel)
    throw Error(ErrorCode::invalid_argument, "grid level out of range");
  const std::size_t n = std::size_t{1} << grid_level;
  std::vector<double> a(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = std::ldexp(static_cast<double>(j), -grid_level);
    double v = 0;
    if (kind == SmoothKind::sine) {
      v = std::sin(2.0 * std::numbers::pi * params.frequency * t + params.phase);
    } else {
      for (auto it = params.coeffs.rbegin(); it != params.coeffs.rend(); ++it) v = v * t + *it;
    }
    a[j] = amplitude * v;
  }
  return Path(grid_level, std::move(a), kind == SmoothKind::sine ? "sine" : "poly");
}

/// Lipschitz constant of a smooth perturbation on [0,1].
inline double smooth_lipschitz_bound(SmoothKind kind, double amplitude, const SmoothParams& params) {
  if (kind == SmoothKind::sine)
    return std::abs(amplitude) * 2.0 * std::numbers::pi * std::abs(params.frequency);
  double c = 0;
  for (std::size_t k = 1; k < params.coeffs.size(); ++k) c += k * std::abs(params.coeffs[k]);
  return std::abs(amplitude) * c;
}

enum class GeneratorKind { fbm, takagi, counterexample, smooth, custom_schauder };

/// Everything needed to regenerate a test path.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::takagi;
  double hurst = 0.5;
  int grid_level = 14;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
};

inline const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::fbm: return "fbm";
    case GeneratorKind::takagi: return "takagi";
    case GeneratorKind::counterexample: return "counterexample";
    case GeneratorKind::smooth: return "smooth";
    case GeneratorKind::custom_schauder: return "custom_schauder";
  }
  return "unknown";
}

namespace detail {
inline double param_or(const GeneratorSpec& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}
}  // namespace detail

/// Builds the path a spec describes. custom_schauder needs coefficients and
/// goes through schauder_eval directly.
inline Path generate(const GeneratorSpec& spec) {
  using detail::param_or;
  switch (spec.kind) {
    case GeneratorKind::fbm:
      return fbm_path(spec.hurst, spec.grid_level, spec.seed);
    case GeneratorKind::takagi: {
      const bool seeded = param_or(spec, "seeded_signs", 0.0) != 0.0;
      const int max_level =
          static_cast<int>(param_or(spec, "max_level", static_cast<double>(spec.grid_level)));
      auto c = takagi_coefficients(spec.hurst, seeded ? seeded_signs(spec.seed) : constant_signs(1),
                                   max_level);
      return schauder_eval(c, spec.grid_level);
    }
    case GeneratorKind::counterexample: {
      const int n_max = static_cast<int>(param_or(spec, "nmax", 4.0));
      return schauder_eval(counterexample_coefficients(n_max), spec.grid_level);
    }
    case GeneratorKind::smooth: {
      const double amplitude = param_or(spec, "amplitude", 1.0);
      if (param_or(spec, "poly", 0.0) != 0.0) {
        SmoothParams sp;
        for (int k = 0;; ++k) {
          auto it = spec.params.find("c" + std::to_string(k));
          if (it == spec.params.end()) break;
          sp.coeffs.push_back(it->second);
        }
        return smooth_perturbation(SmoothKind::poly, amplitude, spec.grid_level, sp);
      }
      SmoothParams sp;
      sp.frequency = param_or(spec, "frequency", 1.0);
      sp.phase = param_or(spec, "phase", 0.0);
      return smooth_perturbation(SmoothKind::sine, amplitude, spec.grid_level, sp);
    }
    case GeneratorKind::custom_schauder:
      throw Error(ErrorCode::invalid_argument, "custom_schauder requires a coefficient file");
  }
  throw Error(ErrorCode::invalid_argument, "unknown generator kind");
}

}  // namespace roughvar
