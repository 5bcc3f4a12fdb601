#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "roughvar/error.hpp"

namespace roughvar {

/// A C^2 map with its first two derivatives.
struct SmoothMap {
  std::string id;
  std::function<double(double)> f;
  std::function<double(double)> f1;
  std::function<double(double)> f2;
  /// Interpolated from a table rather than given in closed form.
  bool lower_trust = false;
};

namespace maps {

inline SmoothMap identity() {
  return {"identity", [](double u) { return u; }, [](double) { return 1.0; },
          [](double) { return 0.0; }};
}

inline SmoothMap affine(double a, double b) {
  return {"affine(" + std::to_string(a) + "," + std::to_string(b) + ")",
          [a, b](double u) { return a * u + b; }, [a](double) { return a; },
          [](double) { return 0.0; }};
}

inline SmoothMap square_plus_one() {
  return {"square_plus_one", [](double u) { return u * u + 1.0; }, [](double u) { return 2.0 * u; },
          [](double) { return 2.0; }};
}

inline SmoothMap sine() {
  return {"sin", [](double u) { return std::sin(u); }, [](double u) { return std::cos(u); },
          [](double u) { return -std::sin(u); }};
}

/// exp on [-bound, bound], continued by its boundary value outside.
inline SmoothMap exp_clamped(double bound = 30.0) {
  return {"exp_clamped",
          [bound](double u) { return std::exp(std::clamp(u, -bound, bound)); },
          [bound](double u) { return std::abs(u) <= bound ? std::exp(u) : 0.0; },
          [bound](double u) { return std::abs(u) <= bound ? std::exp(u) : 0.0; }};
}

/// Map given by (u, f, f', f'') samples on an increasing grid. f and f' use
/// cubic Hermite interpolation; f'' is linear.
inline SmoothMap tabulated(std::string id, std::vector<double> u, std::vector<double> f,
                           std::vector<double> f1, std::vector<double> f2) {
  const std::size_t n = u.size();
  if (n < 2 || f.size() != n || f1.size() != n || f2.size() != n)
    throw Error(ErrorCode::invalid_argument, "tabulated map needs >= 2 aligned samples");
  for (std::size_t i = 1; i < n; ++i)
    if (!(u[i] > u[i - 1])) throw Error(ErrorCode::invalid_argument, "table grid must increase");

  struct Table {
    std::vector<double> u, f, f1, f2;
    std::size_t segment(double x) const {
      auto it = std::upper_bound(u.begin(), u.end(), x);
      std::size_t hi = static_cast<std::size_t>(it - u.begin());
      hi = std::clamp<std::size_t>(hi, 1, u.size() - 1);
      return hi - 1;
    }
    // Cubic Hermite interpolant from endpoint values v and slopes s.
    static double hermite(double x, double x0, double x1, double v0, double v1, double s0,
                          double s1) {
      const double h = x1 - x0, t = (x - x0) / h;
      const double t2 = t * t, t3 = t2 * t;
      return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * s0 + (-2 * t3 + 3 * t2) * v1 +
             (t3 - t2) * h * s1;
    }
  };
  auto tab = std::make_shared<const Table>(
      Table{std::move(u), std::move(f), std::move(f1), std::move(f2)});
  SmoothMap m;
  m.id = std::move(id);
  m.lower_trust = true;
  m.f = [tab](double x) {
    const auto i = tab->segment(x);
    return Table::hermite(x, tab->u[i], tab->u[i + 1], tab->f[i], tab->f[i + 1], tab->f1[i],
                          tab->f1[i + 1]);
  };
  m.f1 = [tab](double x) {
    const auto i = tab->segment(x);
    return Table::hermite(x, tab->u[i], tab->u[i + 1], tab->f1[i], tab->f1[i + 1], tab->f2[i],
                          tab->f2[i + 1]);
  };
  m.f2 = [tab](double x) {
    const auto i = tab->segment(x);
    const double w = (x - tab->u[i]) / (tab->u[i + 1] - tab->u[i]);
    return (1 - w) * tab->f2[i] + w * tab->f2[i + 1];
  };
  return m;
}

/// Looks a catalog map up by name. affine takes (a, b).
inline SmoothMap by_name(const std::string& name, double a = 1.0, double b = 0.0) {
  if (name == "identity") return identity();
  if (name == "affine") return affine(a, b);
  if (name == "square_plus_one" || name == "u2p1") return square_plus_one();
  if (name == "sin") return sine();
  if (name == "exp" || name == "exp_clamped") return exp_clamped();
  throw Error(ErrorCode::invalid_argument, "unknown smooth map '" + name + "'");
}

}  // namespace maps

struct DerivativeCheck {
  /// max |f1 - central difference of f| / h^2 over the sample grid.
  double k_first = 0;
  /// Same for f2 against differences of f1.
  double k_second = 0;
  double sup_f1 = 0;
  double sup_f2 = 0;
};

/// Compares derivatives with central differences on [lo, hi] and records
/// sup bounds of |f'| and |f''| there.
inline DerivativeCheck check_derivatives(const SmoothMap& m, double lo, double hi,
                                         double h = 1e-5, int samples = 257) {
  DerivativeCheck c;
  for (int i = 0; i < samples; ++i) {
    const double u = samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1);
    const double fd1 = (m.f(u + h) - m.f(u - h)) / (2 * h);
    const double fd2 = (m.f1(u + h) - m.f1(u - h)) / (2 * h);
    c.k_first = std::max(c.k_first, std::abs(m.f1(u) - fd1) / (h * h));
    c.k_second = std::max(c.k_second, std::abs(m.f2(u) - fd2) / (h * h));
    c.sup_f1 = std::max(c.sup_f1, std::abs(m.f1(u)));
    c.sup_f2 = std::max(c.sup_f2, std::abs(m.f2(u)));
  }
  return c;
}

}  // namespace roughvar
