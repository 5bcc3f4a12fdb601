#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "roughvar/io.hpp"
#include "roughvar/schauder.hpp"

using namespace roughvar;

namespace {
ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::numerical;
}
}  // namespace

TEST_CASE("number formatting round-trips", "[io][property]") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 2000) {
    const std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(io::parse_double(io::format_double(v), 1) == v);
    ++checked;
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::parse_double(" 2.5\r", 1) == 2.5);
  CHECK(code_of([] { io::parse_double("1.0x", 3); }) == ErrorCode::io);
}

TEST_CASE("path CSV round-trip is bitwise", "[io][property]") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const int L = trial % 9;
    std::vector<double> s((std::size_t{1} << L) + 1);
    for (auto& v : s) v = z(rng) * std::pow(10.0, trial % 7 - 3);
    Path x(L, s);
    const auto csv = io::path_to_csv(x);
    Path y = io::path_from_csv(csv);
    CHECK(y.samples().size() == x.samples().size());
    CHECK(std::equal(x.samples().begin(), x.samples().end(), y.samples().begin()));
    CHECK(io::path_to_csv(y) == csv);
  }
}

TEST_CASE("path CSV on a general interval is reparametrized", "[io]") {
  const std::string csv = "t,value\n2,0\n2.5,1\n3,-1\n3.5,4\n4,2\n";
  Path x = io::path_from_csv(csv);
  CHECK(x.grid_level() == 2);
  CHECK(x[3] == 4.0);
  CHECK(x.time(1) == 0.25);
  Path crlf = io::path_from_csv("t,value\r\n0,1\r\n1,2\r\n");
  CHECK(crlf.grid_level() == 0);
  CHECK(crlf[1] == 2.0);
}

TEST_CASE("path CSV validation", "[io]") {
  CHECK(code_of([] { io::path_from_csv("time,value\n0,0\n1,1\n"); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_csv("t,value\n0,0\n0.25,1\n0.5,1\n0.75,0\n"); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_csv("t,value\n0,0\n0.5,1\n0.6,1\n1,0\n1.5,0\n"); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_csv("t,value\n0,0\n1\n"); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_csv("t,value\n0,0\n1,abc\n"); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_csv("t,value\n1,0\n0,0\n"); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_csv("t,value\n0,0\n1,nan\n"); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { io::load_path("/nonexistent/path.csv"); }) == ErrorCode::io);
}

TEST_CASE("path JSON", "[io]") {
  Path x(2, {0, 0.25, -1, 3, 0.5}, "demo");
  auto j = io::path_to_json(x);
  CHECK(j["grid_level"] == 2);
  CHECK(j["label"] == "demo");
  CHECK(io::path_from_json(j) == x);
  CHECK(io::path_from_json(io::json::parse(j.dump())) == x);
  CHECK(code_of([] { io::path_from_json(io::json{{"samples", {0, 1}}}); }) == ErrorCode::io);
  CHECK(code_of([] { io::path_from_json(io::json{{"grid_level", 2}, {"samples", {0, 1}}}); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("coefficient JSON", "[io]") {
  auto c = takagi_coefficients(0.3, seeded_signs(4), 5, "tk");
  auto j = io::coefficients_to_json(c);
  CHECK(j["max_level"] == 5);
  auto back = io::coefficients_from_json(io::json::parse(j.dump()));
  CHECK(back.theta() == c.theta());
  CHECK(back.label() == "tk");
  auto bad = j;
  bad["max_level"] = 4;
  CHECK(code_of([&] { io::coefficients_from_json(bad); }) == ErrorCode::io);
  CHECK(code_of([] { io::coefficients_from_json(io::json{{"theta", {{1.0}, {1.0}}}}); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("profile CSV and sidecar", "[io]") {
  Path x(2, {0, 1, 0, 1, 0});
  auto prof = scaled_qv(x, dyadic_partition(2, 2), 3.0, PVarSource::self_level());
  CHECK(io::profile_to_csv(prof) == "t,value\n0,0\n0.25,1\n0.5,2\n0.75,3\n1,4\n");
  auto s = io::profile_sidecar(prof);
  CHECK(s["level"] == 2);
  CHECK(s["p"] == 3.0);
  CHECK(s["kind"] == "scaled");
  CHECK(s["terminal"] == 4.0);
  CHECK(s["source_mode"] == "self_level");
  auto pv = io::profile_sidecar(pth_variation(x, dyadic_partition(1, 2), 2.0));
  CHECK(pv["source_mode"].is_null());
  CHECK(pv["gamma"] == 0.0);
}

TEST_CASE("non-finite numbers serialize as strings", "[io]") {
  CHECK(io::number(INFINITY) == "inf");
  CHECK(io::number(-INFINITY) == "-inf");
  CHECK(io::number(NAN) == "nan");
  CHECK(io::number(1.5) == 1.5);
  LimitReport r = limit_diagnostics({1, 2, 3}, {1, INFINITY, INFINITY});
  auto j = io::to_json(r);
  CHECK(j["classification"] == "diverging");
  CHECK(j["terminal_values"][1] == "inf");
  CHECK(j["limsup_est"] == "inf");
}

TEST_CASE("comparison CSV", "[io]") {
  ComparisonReport r;
  r.levels = {1, 2};
  r.lhs = {1.0, 2.0};
  r.rhs = {1.0, 2.5};
  r.rel_err = {0.0, 0.2};
  CHECK(io::comparison_csv(r) == "level,lhs,rhs,rel_err\n1,1,1,0\n2,2,2.5,0.2\n");
}
