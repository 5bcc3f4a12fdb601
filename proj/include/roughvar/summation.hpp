#pragma once
#ifdef __FAST_MATH__
#error fast math enabled (-ffast-math), this would negate compensation.
#endif

#include <cmath>
#include <concepts>
#include <span>

namespace roughvar {

// Kahan-Babuska-Neumaier accumulator. Non-finite terms bypass the
// compensation so an infinite sum stays infinite instead of turning NaN.
template <std::floating_point T>
class NeumaierSum {
 public:
  constexpr void add(T v) noexcept {
    if (!std::isfinite(v) || !std::isfinite(sum_)) {
      sum_ += v;
      return;
    }
    const T t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }

  constexpr T result() const noexcept {
    return std::isfinite(sum_) ? sum_ + comp_ : sum_;
  }

 private:
  T sum_ = 0;
  T comp_ = 0;
};

template <std::floating_point T>
T compensated_sum(std::span<const T> xs) noexcept {
  NeumaierSum<T> acc;
  for (T v : xs) acc.add(v);
  return acc.result();
}

}  // namespace roughvar
