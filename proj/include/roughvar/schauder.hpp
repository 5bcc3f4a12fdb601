#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"

namespace roughvar {

/// Triangular Faber-Schauder coefficient array: theta[m] holds 2^m values.
class SchauderCoefficients {
 public:
  SchauderCoefficients(std::vector<std::vector<double>> theta, std::string label = {})
      : theta_(std::move(theta)), label_(std::move(label)) {
    if (theta_.size() > static_cast<std::size_t>(kMaxGridLevel))
      throw Error(ErrorCode::invalid_argument, "too many Schauder levels");
    for (std::size_t m = 0; m < theta_.size(); ++m) {
      if (theta_[m].size() != (std::size_t{1} << m))
        throw Error(ErrorCode::invalid_argument,
                    "Schauder level " + std::to_string(m) + " needs " +
                        std::to_string(std::size_t{1} << m) + " coefficients");
      for (double v : theta_[m])
        if (!std::isfinite(v))
          throw Error(ErrorCode::invalid_argument,
                      "non-finite Schauder coefficient at level " + std::to_string(m));
    }
  }

  int max_level() const noexcept { return static_cast<int>(theta_.size()); }
  const std::vector<std::vector<double>>& theta() const noexcept { return theta_; }
  double operator()(int m, std::size_t k) const { return theta_[m][k]; }
  const std::string& label() const noexcept { return label_; }

  /// Sum of squared coefficients over levels m < n.
  double squared_mass_below(int n) const {
    double s = 0;
    for (int m = 0; m < n && m < max_level(); ++m)
      for (double v : theta_[m]) s += v * v;
    return s;
  }

 private:
  std::vector<std::vector<double>> theta_;
  std::string label_;
};

/// Evaluates the Schauder partial sum on the level-L grid via the midpoint
/// recursion x(mid) = (x(left) + x(right))/2 + theta_{m,k} 2^{-m/2} / 2.
/// Under this normalization the level-n quadratic variation equals
/// 2^-n sum_{m<n} sum_k theta_{m,k}^2.
inline Path schauder_eval(const SchauderCoefficients& c, int grid_level) {
  if (grid_level < c.max_level())
    throw Error(ErrorCode::resolution,
                "grid level " + std::to_string(grid_level) + " cannot resolve " +
                    std::to_string(c.max_level()) + " Schauder levels");
  if (grid_level > kMaxGridLevel)
    throw Error(ErrorCode::invalid_argument, "grid level out of range");
  const std::size_t n = std::size_t{1} << grid_level;
  std::vector<double> x(n + 1, 0.0);
  for (int m = 0; m < c.max_level(); ++m) {
    const std::size_t step = n >> m;
    const std::size_t half = step / 2;
    const double amp = 0.5 * std::pow(2.0, -0.5 * m);
    const auto& row = c.theta()[m];
    for (std::size_t k = 0; k < row.size(); ++k) {
      const std::size_t left = k * step;
      x[left + half] = 0.5 * (x[left] + x[left + step]) + row[k] * amp;
    }
  }
  // Levels past max_level carry no coefficients; linear interpolation fills them.
  for (int m = c.max_level(); m < grid_level; ++m) {
    const std::size_t step = n >> m;
    const std::size_t half = step / 2;
    for (std::size_t left = 0; left < n; left += step)
      x[left + half] = 0.5 * (x[left] + x[left + step]);
  }
  return Path(grid_level, std::move(x), c.label());
}

/// Maps (m, k) to a sign in {-1, +1}.
using SignSource = std::function<int(int, std::size_t)>;

inline SignSource constant_signs(int sign = 1) {
  const int s = sign < 0 ? -1 : 1;
  return [s](int, std::size_t) { return s; };
}

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based signs: each (m, k) hashes independently of evaluation order.
inline SignSource seeded_signs(std::uint64_t seed) {
  return [seed](int m, std::size_t k) {
    const std::uint64_t key = (static_cast<std::uint64_t>(m) << 40) ^ static_cast<std::uint64_t>(k);
    return (detail::splitmix64(seed ^ detail::splitmix64(key)) >> 63) ? 1 : -1;
  };
}

/// Generalised Takagi coefficients 2^{m(1/2-H)} s_{m,k}.
inline SchauderCoefficients takagi_coefficients(double hurst, const SignSource& signs, int max_level,
                                                std::string label = {}) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw Error(ErrorCode::invalid_argument, "Takagi H must lie in (0,1)");
  if (max_level < 1 || max_level > kMaxGridLevel)
    throw Error(ErrorCode::invalid_argument, "Takagi max level must be in [1, 28]");
  std::vector<std::vector<double>> theta(max_level);
  for (int m = 0; m < max_level; ++m) {
    const double scale = std::pow(2.0, m * (0.5 - hurst));
    theta[m].resize(std::size_t{1} << m);
    for (std::size_t k = 0; k < theta[m].size(); ++k)
      theta[m][k] = scale * (signs(m, k) < 0 ? -1.0 : 1.0);
  }
  if (label.empty()) label = "takagi(H=" + std::to_string(hurst) + ")";
  return SchauderCoefficients(std::move(theta), std::move(label));
}

/// S_n = 1 + 2 + ... + n.
constexpr int triangular(int n) noexcept { return n * (n + 1) / 2; }

/// Coefficients whose dyadic quadratic variation oscillates: the only
/// nonzero level is m = S_n - 1, with theta = sqrt(2n - (n-1)/2^{n-1}).
inline SchauderCoefficients counterexample_coefficients(int n_max) {
  if (n_max < 1 || triangular(n_max) > kMaxGridLevel)
    throw Error(ErrorCode::invalid_argument,
                "counterexample n_max must satisfy 1 <= n_max and S_n_max <= 28");
  const int levels = triangular(n_max);
  std::vector<std::vector<double>> theta(levels);
  for (int m = 0; m < levels; ++m) theta[m].assign(std::size_t{1} << m, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    const double v = std::sqrt(2.0 * n - (n - 1) / std::ldexp(1.0, n - 1));
    auto& row = theta[triangular(n) - 1];
    std::fill(row.begin(), row.end(), v);
  }
  return SchauderCoefficients(std::move(theta),
                              "counterexample(n_max=" + std::to_string(n_max) + ")");
}

}  // namespace roughvar
