#pragma once

// Direct-summation references, kept independent of the library kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Tent of height 1/2 on [0,1].
inline double tent(double u) { return std::max(0.0, std::min(u, 1.0 - u)); }

// x(j 2^-L) = sum_m sum_k theta[m][k] 2^{-m/2} tent(2^m t - k).
inline std::vector<double> schauder(const std::vector<std::vector<double>>& theta, int grid_level) {
  const std::size_t n = std::size_t{1} << grid_level;
  std::vector<double> x(n + 1, 0.0);
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(n);
    double s = 0;
    for (std::size_t m = 0; m < theta.size(); ++m) {
      // Only the tent containing t (or ending at it) can be nonzero.
      const double u = std::ldexp(t, static_cast<int>(m));
      const long k0 = static_cast<long>(std::floor(u));
      for (long k = k0 - 1; k <= k0; ++k)
        if (k >= 0 && k < static_cast<long>(theta[m].size()))
          s += theta[m][k] * std::pow(2.0, -0.5 * m) * tent(u - k);
    }
    x[j] = s;
  }
  return x;
}

inline double pvar(const std::vector<double>& x, const std::vector<std::size_t>& idx, double p) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) s += std::pow(std::abs(x[idx[i + 1]] - x[idx[i]]), p);
  return s;
}

inline std::vector<double> pvar_profile(const std::vector<double>& x,
                                        const std::vector<std::size_t>& idx, double p) {
  std::vector<double> v{0.0};
  for (std::size_t i = 0; i + 1 < idx.size(); ++i)
    v.push_back(v.back() + std::pow(std::abs(x[idx[i + 1]] - x[idx[i]]), p));
  return v;
}

// Scaled QV with weights taken as given.
inline std::vector<double> scaled_profile(const std::vector<double>& x,
                                          const std::vector<std::size_t>& idx,
                                          const std::vector<double>& w, double gamma) {
  std::vector<double> v{0.0};
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const double d = x[idx[i + 1]] - x[idx[i]];
    v.push_back(v.back() + std::pow(w[i], gamma) * d * d);
  }
  return v;
}

inline std::vector<double> classical_profile(const std::vector<double>& x,
                                             const std::vector<std::size_t>& idx, int grid_level,
                                             double gamma) {
  std::vector<double> v{0.0};
  const double h = std::pow(2.0, -grid_level);
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const double d = x[idx[i + 1]] - x[idx[i]];
    v.push_back(v.back() + std::pow((idx[i + 1] - idx[i]) * h, gamma) * d * d);
  }
  return v;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace oracle
