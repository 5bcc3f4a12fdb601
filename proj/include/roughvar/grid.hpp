#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roughvar/error.hpp"

namespace roughvar {

inline constexpr int kMaxGridLevel = 28;

/// A continuous path on [0,1] restricted to the dyadic grid t_j = j 2^-L.
class Path {
 public:
  Path(int grid_level, std::vector<double> samples, std::string label = {})
      : grid_level_(grid_level), samples_(std::move(samples)), label_(std::move(label)) {
    if (grid_level_ < 0 || grid_level_ > kMaxGridLevel)
      throw Error(ErrorCode::invalid_argument,
                  "grid level " + std::to_string(grid_level_) + " out of range [0, " +
                      std::to_string(kMaxGridLevel) + "]");
    const std::size_t expected = (std::size_t{1} << grid_level_) + 1;
    if (samples_.size() != expected)
      throw Error(ErrorCode::invalid_argument,
                  "path at grid level " + std::to_string(grid_level_) + " needs " +
                      std::to_string(expected) + " samples, got " +
                      std::to_string(samples_.size()));
    for (std::size_t j = 0; j < samples_.size(); ++j)
      if (!std::isfinite(samples_[j]))
        throw Error(ErrorCode::invalid_argument,
                    "non-finite sample at index " + std::to_string(j));
  }

  int grid_level() const noexcept { return grid_level_; }
  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t intervals() const noexcept { return samples_.size() - 1; }
  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t j) const noexcept { return samples_[j]; }
  double time(std::size_t j) const noexcept {
    return std::ldexp(static_cast<double>(j), -grid_level_);
  }
  const std::string& label() const noexcept { return label_; }

  bool operator==(const Path&) const = default;

 private:
  int grid_level_;
  std::vector<double> samples_;
  std::string label_;
};

/// Grid-index partition of [0,1]. Indices refer to a grid of level
/// grid_level and run from 0 to 2^grid_level.
class Partition {
 public:
  Partition(int level, int grid_level, std::vector<std::size_t> indices)
      : level_(level), grid_level_(grid_level), indices_(std::move(indices)) {
    if (grid_level_ < 0 || grid_level_ > kMaxGridLevel)
      throw Error(ErrorCode::invalid_argument, "partition grid level out of range");
    const std::size_t last = std::size_t{1} << grid_level_;
    if (indices_.size() < 2 || indices_.front() != 0 || indices_.back() != last)
      throw Error(ErrorCode::invalid_argument,
                  "partition must start at 0 and end at " + std::to_string(last));
    for (std::size_t j = 1; j < indices_.size(); ++j)
      if (indices_[j] <= indices_[j - 1])
        throw Error(ErrorCode::invalid_argument, "partition indices must strictly increase");
  }

  int level() const noexcept { return level_; }
  int grid_level() const noexcept { return grid_level_; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t count() const noexcept { return indices_.size() - 1; }
  double time(std::size_t j) const noexcept {
    return std::ldexp(static_cast<double>(indices_[j]), -grid_level_);
  }
  std::vector<double> times() const {
    std::vector<double> t(indices_.size());
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = time(j);
    return t;
  }

  bool operator==(const Partition&) const = default;

 private:
  int level_;
  int grid_level_;
  std::vector<std::size_t> indices_;
};

struct MeshStats {
  double mesh = 0;
  double min_mesh = 0;
  std::size_t count = 0;
};

/// Level-n dyadic partition on a level-L grid: indices j 2^(L-n).
inline Partition dyadic_partition(int level, int grid_level) {
  if (level < 0)
    throw Error(ErrorCode::invalid_argument, "negative partition level");
  if (level > grid_level)
    throw Error(ErrorCode::invalid_refinement,
                "dyadic level " + std::to_string(level) + " finer than grid level " +
                    std::to_string(grid_level));
  const std::size_t n = std::size_t{1} << level;
  const std::size_t stride = std::size_t{1} << (grid_level - level);
  std::vector<std::size_t> idx(n + 1);
  for (std::size_t j = 0; j <= n; ++j) idx[j] = j * stride;
  return Partition(level, grid_level, std::move(idx));
}

inline MeshStats mesh_stats(const Partition& part) {
  auto idx = part.indices();
  std::size_t widest = 0, narrowest = idx.back();
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
    const std::size_t w = idx[j + 1] - idx[j];
    widest = std::max(widest, w);
    narrowest = std::min(narrowest, w);
  }
  return {std::ldexp(static_cast<double>(widest), -part.grid_level()),
          std::ldexp(static_cast<double>(narrowest), -part.grid_level()), part.count()};
}

inline void require_same_grid(const Path& x, const Partition& part) {
  if (x.grid_level() != part.grid_level())
    throw Error(ErrorCode::grid_mismatch,
                "partition grid level " + std::to_string(part.grid_level()) +
                    " does not match path grid level " + std::to_string(x.grid_level()));
}

/// Largest within-block range of grid samples, block endpoints inclusive.
inline double oscillation(const Path& x, const Partition& part) {
  require_same_grid(x, part);
  auto idx = part.indices();
  auto s = x.samples();
  double osc = 0;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
    auto [lo, hi] = std::minmax_element(s.begin() + idx[j], s.begin() + idx[j + 1] + 1);
    osc = std::max(osc, *hi - *lo);
  }
  return osc;
}

}  // namespace roughvar
