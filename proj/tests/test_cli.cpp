#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "roughvar/io.hpp"

namespace fs = std::filesystem;
using roughvar::io::json;
using roughvar::io::read_file;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + ROUGHVAR_CLI_PATH + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("roughvar_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (!e.is_regular_file() || name.find("manifest") != std::string::npos) continue;
    files[fs::relative(e.path(), dir).string()] = read_file(e.path().string());
  }
  return files;
}

}  // namespace

TEST_CASE("gen writes a path, metadata and a manifest", "[cli]") {
  TempDir t;
  auto r = cli("gen --kind takagi --H 0.5 --level 10 --out " + (t / "x.csv"));
  REQUIRE(r.status == 0);
  CHECK(fs::exists(t / "x.csv"));
  auto meta = json::parse(read_file(t / "x.csv.meta.json"));
  CHECK(meta["spec"]["kind"] == "takagi");
  CHECK(meta.contains("generator_version"));
  CHECK(meta["seed"] == 0);
  auto man = json::parse(read_file(t / "x.csv.manifest.json"));
  for (const char* key : {"config", "versions", "timings", "input_digests"}) CHECK(man.contains(key));
  CHECK(man["config"]["--H"] == "0.5");
  auto x = roughvar::io::path_from_csv(read_file(t / "x.csv"));
  CHECK(x.grid_level() == 10);
}

TEST_CASE("sqv on Takagi H=1/2 reproduces 1 - 2^-n", "[cli]") {
  TempDir t;
  REQUIRE(cli("gen --kind takagi --H 0.5 --level 14 --out " + (t / "x.csv")).status == 0);
  auto r = cli("sqv --in " + (t / "x.csv") + " --p 2 --levels 4:12 --out " + (t / "sqv") + " --json");
  REQUIRE(r.status == 0);
  auto summary = json::parse(r.out);
  const auto vals = summary["terminal_values"].get<std::vector<double>>();
  REQUIRE(vals.size() == 9);
  for (int n = 4; n <= 12; ++n) CHECK(std::abs(vals[n - 4] - (1.0 - std::ldexp(1.0, -n))) < 1e-12);
  auto rep = json::parse(read_file(t / "sqv/limit_report.json"));
  CHECK(rep["classification"] == "finite_positive");
  auto side = json::parse(read_file(t / "sqv/sqv_level_08.json"));
  for (const char* key : {"level", "p", "gamma", "kind", "terminal", "source_mode"}) CHECK(side.contains(key));
  CHECK(read_file(t / "sqv/sqv_level_04.csv").rfind("t,value\n0,0\n", 0) == 0);
  CHECK(fs::exists(t / "sqv/manifest.json"));
  auto man = json::parse(read_file(t / "sqv/manifest.json"));
  CHECK(man["input_digests"].size() == 1);
}

TEST_CASE("outputs are byte-identical across runs and thread counts", "[cli]") {
  TempDir t;
  REQUIRE(cli("gen --kind fbm --H 0.4 --level 12 --seed 9 --out " + (t / "a.csv")).status == 0);
  REQUIRE(cli("gen --kind fbm --H 0.4 --level 12 --seed 9 --out " + (t / "b.csv")).status == 0);
  CHECK(read_file(t / "a.csv") == read_file(t / "b.csv"));
  CHECK(read_file(t / "a.csv.meta.json") == read_file(t / "b.csv.meta.json"));

  for (const char* cmd : {"sqv --p 2.5", "pvar --p 2.5", "classical --gamma 0.2", "roughness --pmin 1.2 --pmax 6",
                          "isometry --p 2.5 --map sin", "invariance --p 2.5 --amplitude 0.5"}) {
    INFO(cmd);
    const std::string args = std::string(cmd) + " --in " + (t / "a.csv") + " --levels 5:10 --out ";
    REQUIRE(cli(args + (t / "r1"), "ROUGHVAR_THREADS=1").status == 0);
    REQUIRE(cli(args + (t / "r2"), "ROUGHVAR_THREADS=4").status == 0);
    CHECK(artifacts(t.path / "r1") == artifacts(t.path / "r2"));
    fs::remove_all(t.path / "r1");
    fs::remove_all(t.path / "r2");
  }
}

TEST_CASE("validation failures exit 1 and leave no artifacts", "[cli]") {
  TempDir t;
  REQUIRE(cli("gen --kind takagi --H 0.5 --level 10 --out " + (t / "x.csv")).status == 0);
  CHECK(cli("sqv --in " + (t / "x.csv") + " --p 2 --levels 4:30 --out " + (t / "o1")).status == 1);
  CHECK_FALSE(fs::exists(t / "o1"));
  CHECK(cli("sqv --in " + (t / "x.csv") + " --p 2 --levels 9:4 --out " + (t / "o2")).status == 1);
  CHECK(cli("sqv --in " + (t / "x.csv") + " --p -1 --out " + (t / "o3")).status == 1);
  CHECK(cli("sqv --in " + (t / "x.csv") + " --p 3 --src bogus --out " + (t / "o4")).status == 1);
  CHECK(cli("sqv --in " + (t / "x.csv") + " --p 3 --finest-level 6 --levels 4:8 --out " + (t / "o5")).status == 1);
  CHECK(cli("gen --kind takagi --H 1.5 --level 10 --out " + (t / "y.csv")).status == 1);
  CHECK(cli("gen --kind nope --level 10 --out " + (t / "z.csv")).status == 1);
  CHECK(cli("pvar --nonsense 1").status == 1);
  CHECK(cli("").status == 1);
  CHECK(cli("counterexample --nmax 9 --out " + (t / "ce")).status == 1);
  for (const char* name : {"o1", "o2", "o3", "o4", "o5", "y.csv", "y.csv.meta.json", "z.csv", "ce"})
    CHECK_FALSE(fs::exists(t / name));
}

TEST_CASE("I/O failures exit 3", "[cli]") {
  TempDir t;
  CHECK(cli("pvar --in " + (t / "missing.csv") + " --p 2 --out " + (t / "o")).status == 3);
  CHECK_FALSE(fs::exists(t / "o"));
  roughvar::io::write_file(t / "bad.csv", "time,value\n0,0\n1,1\n");
  CHECK(cli("pvar --in " + (t / "bad.csv") + " --p 2 --out " + (t / "o")).status == 3);
  CHECK_FALSE(fs::exists(t / "o"));
  REQUIRE(cli("gen --kind takagi --level 8 --out " + (t / "x.csv")).status == 0);
  roughvar::io::write_file(t / "blocker", "not a directory");
  CHECK(cli("pvar --in " + (t / "x.csv") + " --p 2 --out " + (t / "blocker")).status == 3);
}

TEST_CASE("numerical failure exits 2 with evidence", "[cli]") {
  TempDir t;
  REQUIRE(cli("gen --kind takagi --H 0.5 --level 12 --out " + (t / "x.csv")).status == 0);
  auto r = cli("roughness --in " + (t / "x.csv") + " --levels 6:10 --pmin 2.5 --pmax 4 --out " + (t / "r"));
  CHECK(r.status == 2);
  auto rep = json::parse(read_file(t / "r/roughness_report.json"));
  CHECK(rep.contains("error"));
  CHECK(rep["per_q"].size() == 2);
  auto man = json::parse(read_file(t / "r/manifest.json"));
  CHECK(man["exit_code"] == 2);
}

TEST_CASE("roughness finds p_bar = 2 for Takagi H=1/2", "[cli]") {
  TempDir t;
  REQUIRE(cli("gen --kind takagi --H 0.5 --level 14 --out " + (t / "x.json")).status == 0);
  auto j = json::parse(read_file(t / "x.json"));
  CHECK(j["grid_level"] == 14);
  auto r = cli("--json roughness --in " + (t / "x.json") + " --levels 6:12 --out " + (t / "r"));
  REQUIRE(r.status == 0);
  auto rep = json::parse(r.out);
  CHECK(std::abs(rep["p_bar_est"].get<double>() - 2.0) < 0.05);
  CHECK(read_file(t / "r/per_q.csv").rfind("q,level,value\n", 0) == 0);
}

TEST_CASE("counterexample subcommand", "[cli]") {
  TempDir t;
  auto r = cli("counterexample --nmax 4 --out " + (t / "ce") + " --json");
  REQUIRE(r.status == 0);
  auto s = json::parse(r.out);
  CHECK(s["levels_sn"] == std::vector<int>{1, 3, 6, 10});
  const auto v = s["terminal_sn"].get<std::vector<double>>();
  for (int n = 1; n <= 4; ++n) CHECK(std::abs(v[n - 1] - n) < 1e-9);
  CHECK(s["interleaved"]["classification"] == "oscillating");
  CHECK(fs::exists(t / "ce/path.csv"));
  CHECK(fs::exists(t / "ce/coefficients.json"));
}

TEST_CASE("isometry, chainrule and invariance subcommands", "[cli]") {
  TempDir t;
  REQUIRE(cli("gen --kind takagi --H 0.5 --level 14 --out " + (t / "x.csv")).status == 0);
  auto iso = cli("isometry --in " + (t / "x.csv") + " --p 2 --map identity --levels 6:12 --out " +
                 (t / "iso") + " --json");
  REQUIRE(iso.status == 0);
  auto j = json::parse(iso.out);
  CHECK(j["exact"] == true);
  CHECK(j["passed"] == true);
  CHECK(read_file(t / "iso/isometry.csv").rfind("level,lhs,rhs,rel_err\n", 0) == 0);

  auto ch = cli("chainrule --in " + (t / "x.csv") + " --p 2 --map sin --levels 6:12 --out " + (t / "ch"));
  CHECK(ch.status == 0);
  CHECK(fs::exists(t / "ch/chainrule_report.json"));

  REQUIRE(cli("gen --kind smooth --amplitude 0.5 --level 14 --out " + (t / "a.csv")).status == 0);
  auto inv = cli("invariance --in " + (t / "x.csv") + " --perturbation " + (t / "a.csv") +
                 " --p 2 --levels 6:12 --out " + (t / "inv") + " --json");
  REQUIRE(inv.status == 0);
  CHECK(json::parse(inv.out)["rel_err"].back().get<double>() < 0.02);
  auto man = json::parse(read_file(t / "inv/manifest.json"));
  CHECK(man["input_digests"].size() == 2);

  auto rep = cli("report --in " + (t / "iso") + " " + (t / "ch") + " " + (t / "inv") + " --out " + (t / "sum"));
  CHECK(rep.status == 0);
  auto sum = json::parse(read_file(t / "sum/summary.json"));
  CHECK(sum["reports"].size() == 3);
}
