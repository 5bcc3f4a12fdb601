#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "roughvar/grid.hpp"
#include "roughvar/schauder.hpp"

using namespace roughvar;

namespace {
Path linear_path(int level) {
  std::vector<double> s((std::size_t{1} << level) + 1);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::ldexp(double(j), -level);
  return Path(level, std::move(s), "t");
}
}  // namespace

TEST_CASE("dyadic partitions", "[grid]") {
  CHECK(dyadic_partition(0, 3).indices().size() == 2);
  auto coarse = dyadic_partition(0, 3);
  CHECK(std::vector<std::size_t>(coarse.indices().begin(), coarse.indices().end()) ==
        std::vector<std::size_t>{0, 8});
  auto full = dyadic_partition(3, 3);
  CHECK(std::vector<std::size_t>(full.indices().begin(), full.indices().end()) ==
        std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  auto mid = dyadic_partition(1, 3);
  CHECK(std::vector<std::size_t>(mid.indices().begin(), mid.indices().end()) ==
        std::vector<std::size_t>{0, 4, 8});

  try {
    dyadic_partition(4, 3);
    FAIL("expected invalid refinement");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_refinement);
  }
}

TEST_CASE("partition invariants are enforced", "[grid]") {
  CHECK_THROWS_AS(Partition(1, 3, {0, 4}), Error);
  CHECK_THROWS_AS(Partition(1, 3, {1, 8}), Error);
  CHECK_THROWS_AS(Partition(1, 3, {0, 4, 4, 8}), Error);
  CHECK_NOTHROW(Partition(1, 3, {0, 1, 8}));
}

TEST_CASE("mesh statistics", "[grid]") {
  auto m = mesh_stats(dyadic_partition(4, 10));
  CHECK(m.mesh == 1.0 / 16);
  CHECK(m.min_mesh == 1.0 / 16);
  CHECK(m.count == 16);

  m = mesh_stats(Partition(1, 3, {0, 1, 8}));
  CHECK(m.mesh == 7.0 / 8);
  CHECK(m.min_mesh == 1.0 / 8);
  CHECK(m.count == 2);

  m = mesh_stats(dyadic_partition(0, 5));
  CHECK(m.mesh == 1.0);
  CHECK(m.count == 1);

  for (int n = 0; n <= 12; ++n) {
    auto s = mesh_stats(dyadic_partition(n, 12));
    CHECK(s.mesh == std::ldexp(1.0, -n));
    CHECK(s.min_mesh == s.mesh);
  }
}

TEST_CASE("path invariants", "[grid]") {
  CHECK_THROWS_AS(Path(2, {0, 1, 2}), Error);
  CHECK_THROWS_AS(Path(1, {0, std::nan(""), 1}), Error);
  CHECK_THROWS_AS(Path(1, {0, INFINITY, 1}), Error);
  Path ok(1, {0, 1, 2});
  CHECK(ok.time(1) == 0.5);
}

TEST_CASE("oscillation", "[grid]") {
  Path flat(6, std::vector<double>(65, 3.25));
  for (int n = 0; n <= 6; ++n) CHECK(oscillation(flat, dyadic_partition(n, 6)) == 0.0);

  CHECK(oscillation(linear_path(8), dyadic_partition(4, 8)) == 1.0 / 16);

  auto tk = schauder_eval(takagi_coefficients(0.5, constant_signs(1), 14), 14);
  const double o4 = oscillation(tk, dyadic_partition(4, 14));
  const double o8 = oscillation(tk, dyadic_partition(8, 14));
  const double o12 = oscillation(tk, dyadic_partition(12, 14));
  CHECK(o4 > o8);
  CHECK(o8 > o12);

  CHECK_THROWS_AS(oscillation(tk, dyadic_partition(4, 10)), Error);
}

TEST_CASE("oscillation is non-increasing in level and bounds increments", "[grid][property]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 50; ++trial) {
    const int L = 3 + trial % 6;
    std::vector<double> s((std::size_t{1} << L) + 1);
    for (auto& v : s) v = z(rng);
    Path x(L, s);
    double prev = oscillation(x, dyadic_partition(0, L));
    for (int n = 0; n <= L; ++n) {
      auto part = dyadic_partition(n, L);
      const double o = oscillation(x, part);
      CHECK(o <= prev);
      prev = o;
      auto idx = part.indices();
      for (std::size_t i = 0; i + 1 < idx.size(); ++i)
        CHECK(o >= std::abs(x[idx[i + 1]] - x[idx[i]]));
    }
  }
}
