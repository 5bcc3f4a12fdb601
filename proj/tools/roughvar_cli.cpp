// roughvar command-line driver.
//
// Every subcommand validates its inputs, computes everything in memory and
// only then writes artifacts (via temporary files and rename), so a failed
// validation leaves nothing behind. A manifest JSON accompanies each run.

#include <CLI11.hpp>
#include <fftw3.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roughvar/roughvar.hpp"

namespace fs = std::filesystem;
using namespace roughvar;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

// Paths written by the CLI are capped below the library limit to keep
// CSV sizes sane.
constexpr int kMaxCliGridLevel = 24;

struct Options {
  std::string in, out, levels, src = "finest_level";
  bool json_out = false;
  bool no_profiles = false;
  double p = 2.0;
  double gamma = 0.0;
  int finest_level = -1;
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t window = 0;
  Thresholds th;

  std::string kind = "takagi", signs = "constant", method = "circulant", coeffs, poly;
  double hurst = 0.5, amplitude = 1.0, frequency = 1.0, phase = 0.0;
  int level = 14, max_level = -1, nmax = 4;
  std::uint64_t seed = 0;

  double p_min = 1.05, p_max = 6.0;
  int iters = 12;

  std::string map = "sin";
  double map_a = 1.0, map_b = 0.0;
  double integrand_power = std::numeric_limits<double>::quiet_NaN();
  double tol = 0.05;

  std::string perturbation, smooth = "sine";
  std::vector<std::string> inputs;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Files staged in memory and committed together.
class ArtifactSet {
 public:
  void add(const fs::path& path, std::string content) {
    files_.push_back({path, std::move(content)});
  }
  bool empty() const { return files_.empty(); }

  /// Writes every file to a temporary sibling, then renames them into
  /// place. On failure nothing staged remains on disk.
  std::vector<std::string> commit() const {
    std::vector<fs::path> temps, done;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
      for (const auto& d : done) fs::remove(d, ec);
    };
    try {
      for (const auto& f : files_) {
        if (f.path.has_parent_path()) fs::create_directories(f.path.parent_path());
        fs::path tmp = f.path;
        tmp += ".tmp";
        io::write_file(tmp.string(), f.content);
        temps.push_back(tmp);
      }
      for (std::size_t i = 0; i < files_.size(); ++i) {
        fs::rename(temps[i], files_[i].path);
        done.push_back(files_[i].path);
      }
    } catch (const fs::filesystem_error& e) {
      cleanup();
      throw Error(ErrorCode::io, e.what());
    } catch (...) {
      cleanup();
      throw;
    }
    std::vector<std::string> names;
    for (const auto& f : files_) names.push_back(f.path.string());
    return names;
  }

 private:
  struct File {
    fs::path path;
    std::string content;
  };
  std::vector<File> files_;
};

class Stopwatch {
 public:
  void lap(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    laps_[phase] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  json to_json() const {
    json j = laps_;
    j["total_seconds"] = std::chrono::duration<double>(last_ - start_).count();
    return j;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point last_ = start_;
  std::map<std::string, double> laps_;
};

/// Result of one subcommand before anything touches the disk.
struct Outcome {
  ArtifactSet files;
  fs::path manifest;
  json summary;
  std::string human;
  int status = kExitOk;
  std::string failure;
};

struct RunContext {
  explicit RunContext(const Options& o) : opt(o) {}

  const Options& opt;
  json input_digests = json::object();
  Stopwatch clock;

  Path load(const std::string& file) {
    if (file.empty()) throw Error(ErrorCode::invalid_argument, "--in is required");
    const std::string text = io::read_file(file);
    input_digests[file] = sha256_hex(text);
    const bool is_json = file.size() >= 5 && file.compare(file.size() - 5, 5, ".json") == 0;
    Path x = [&] {
      if (!is_json) return io::path_from_csv(text, file);
      try {
        return io::path_from_json(json::parse(text));
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::io, file + ": " + e.what());
      }
    }();
    if (x.grid_level() > kMaxCliGridLevel)
      throw Error(ErrorCode::invalid_argument,
                  "grid level " + std::to_string(x.grid_level()) + " exceeds CLI limit " +
                      std::to_string(kMaxCliGridLevel));
    return x;
  }

  json load_json(const std::string& file) {
    const std::string text = io::read_file(file);
    input_digests[file] = sha256_hex(text);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::io, file + ": " + e.what());
    }
  }
};

// ---------------------------------------------------------------- parsing

std::vector<int> parse_levels(const std::string& spec, int grid_level) {
  if (spec.empty()) {
    auto r = default_levels(grid_level);
    if (r.first > r.last) r = {0, grid_level};
    return r.to_vector();
  }
  auto to_int = [&](const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      throw Error(ErrorCode::invalid_argument, "bad level '" + s + "' in --levels " + spec);
    return v;
  };
  LevelRange r;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    r.first = r.last = to_int(spec);
  } else {
    r.first = to_int(spec.substr(0, colon));
    r.last = to_int(spec.substr(colon + 1));
  }
  if (r.first > r.last)
    throw Error(ErrorCode::invalid_argument, "--levels " + spec + " is empty (a > b)");
  if (r.first < 0 || r.last > grid_level)
    throw Error(ErrorCode::invalid_refinement,
                "--levels " + spec + " outside [0, " + std::to_string(grid_level) +
                    "] for this path");
  return r.to_vector();
}

SourceSpec parse_source(const Options& opt) {
  SourceSpec s;
  if (opt.src == "analytic")
    s.mode = SourceMode::analytic;
  else if (opt.src == "finest_level" || opt.src == "finest")
    s.mode = SourceMode::finest_level;
  else if (opt.src == "self_level" || opt.src == "self")
    s.mode = SourceMode::self_level;
  else
    throw Error(ErrorCode::invalid_argument,
                "--src must be analytic, finest_level or self_level, got '" + opt.src + "'");
  s.finest_level = opt.finest_level;
  if (!std::isnan(opt.slope)) {
    if (s.mode != SourceMode::analytic)
      throw Error(ErrorCode::invalid_argument, "--C only applies to --src analytic");
    s.analytic_slope = opt.slope;
  }
  return s;
}

void require_finest_level(const SourceSpec& s, const Path& x, const std::vector<int>& levels) {
  if (s.finest_level < 0) return;
  if (s.finest_level > x.grid_level())
    throw Error(ErrorCode::invalid_refinement, "--finest-level exceeds the path's grid level");
  if (s.mode == SourceMode::finest_level && s.finest_level < levels.back())
    throw Error(ErrorCode::source, "--finest-level must be >= the largest requested level");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = std::min(s.find(',', pos), s.size());
    out.push_back(io::parse_double(std::string_view(s).substr(pos, comma - pos), 1));
    pos = comma + 1;
  }
  return out;
}

void require_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v))
    throw Error(ErrorCode::invalid_argument, std::string(name) + " must be a positive number");
}

std::string level_name(const std::string& prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", n);
  return prefix + "_level_" + buf;
}

std::string fmt(double v) { return io::format_double(v); }

// ------------------------------------------------------------ subcommands

Outcome run_gen(RunContext& ctx) {
  const Options& o = ctx.opt;
  if (o.out.empty()) throw Error(ErrorCode::invalid_argument, "--out is required");
  if (o.level < 0 || o.level > kMaxCliGridLevel)
    throw Error(ErrorCode::invalid_argument,
                "--level must be in [0, " + std::to_string(kMaxCliGridLevel) + "]");

  GeneratorSpec spec;
  spec.grid_level = o.level;
  spec.hurst = o.hurst;
  spec.seed = o.seed;
  json spec_json = {{"kind", o.kind}, {"grid_level", o.level}};
  std::optional<Path> x;

  if (o.kind == "fbm") {
    spec.kind = GeneratorKind::fbm;
    FbmMethod m = FbmMethod::circulant;
    if (o.method == "exact")
      m = FbmMethod::exact;
    else if (o.method != "circulant")
      throw Error(ErrorCode::invalid_argument, "--method must be circulant or exact");
    spec_json["H"] = o.hurst;
    spec_json["method"] = o.method;
    x = fbm_path(o.hurst, o.level, o.seed, m);
  } else if (o.kind == "takagi") {
    spec.kind = GeneratorKind::takagi;
    if (o.signs != "constant" && o.signs != "seeded")
      throw Error(ErrorCode::invalid_argument, "--signs must be constant or seeded");
    const int max_level = o.max_level < 0 ? o.level : o.max_level;
    spec.params["seeded_signs"] = o.signs == "seeded";
    spec.params["max_level"] = max_level;
    spec_json["H"] = o.hurst;
    spec_json["signs"] = o.signs;
    spec_json["max_level"] = max_level;
    x = generate(spec);
  } else if (o.kind == "counterexample") {
    spec.kind = GeneratorKind::counterexample;
    spec.params["nmax"] = o.nmax;
    spec_json["nmax"] = o.nmax;
    x = generate(spec);
  } else if (o.kind == "smooth") {
    spec.kind = GeneratorKind::smooth;
    SmoothParams sp;
    sp.frequency = o.frequency;
    sp.phase = o.phase;
    spec_json["amplitude"] = o.amplitude;
    if (!o.poly.empty()) {
      sp.coeffs = parse_list(o.poly);
      spec_json["poly"] = sp.coeffs;
      x = smooth_perturbation(SmoothKind::poly, o.amplitude, o.level, sp);
    } else {
      spec_json["frequency"] = o.frequency;
      spec_json["phase"] = o.phase;
      x = smooth_perturbation(SmoothKind::sine, o.amplitude, o.level, sp);
    }
  } else if (o.kind == "custom_schauder") {
    if (o.coeffs.empty())
      throw Error(ErrorCode::invalid_argument, "custom_schauder needs --coeffs FILE.json");
    auto c = io::coefficients_from_json(ctx.load_json(o.coeffs));
    spec_json["coeffs"] = o.coeffs;
    x = schauder_eval(c, o.level);
  } else {
    throw Error(ErrorCode::invalid_argument,
                "--kind must be fbm, takagi, counterexample, smooth or custom_schauder");
  }
  ctx.clock.lap("generate_seconds");

  Outcome r;
  const bool as_json = o.out.size() >= 5 && o.out.compare(o.out.size() - 5, 5, ".json") == 0;
  r.files.add(o.out, as_json ? dump(io::path_to_json(*x)) : io::path_to_csv(*x));
  json meta = {{"spec", spec_json}, {"seed", o.seed}, {"generator_version", kGeneratorVersion}};
  r.files.add(o.out + ".meta.json", dump(meta));
  r.manifest = o.out + ".manifest.json";
  r.summary = {{"command", "gen"},
               {"out", o.out},
               {"grid_level", x->grid_level()},
               {"samples", x->size()},
               {"label", x->label()},
               {"terminal_value", (*x)[x->size() - 1]}};
  r.human = "generated " + x->label() + " on grid level " + std::to_string(x->grid_level()) +
            " -> " + o.out + "\n";
  return r;
}

/// Shared body of pvar, sqv and classical: one profile per level plus a
/// limit report over the level sequence.
template <class Kernel>
Outcome run_profiles(RunContext& ctx, const std::string& prefix, Kernel&& kernel,
                     json extra) {
  const Options& o = ctx.opt;
  if (o.out.empty()) throw Error(ErrorCode::invalid_argument, "--out is required");
  const Path x = ctx.load(o.in);
  ctx.clock.lap("load_seconds");
  const auto levels = parse_levels(o.levels, x.grid_level());
  if (o.window != 0 && (o.window < 3 || o.window > levels.size()))
    throw Error(ErrorCode::insufficient_data, "--window must lie in [3, number of levels]");

  auto run_kernel = kernel(x, levels);
  std::vector<VariationProfile> profiles(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) { profiles[i] = run_kernel(levels[i]); });
  std::vector<double> terminals;
  for (const auto& pr : profiles) terminals.push_back(pr.terminal());
  std::optional<LimitReport> report;
  if (levels.size() >= 3) report = limit_diagnostics(levels, terminals, o.window, o.th);
  ctx.clock.lap("compute_seconds");

  Outcome r;
  const fs::path dir = o.out;
  json per_level = json::array();
  for (const auto& pr : profiles) {
    const auto base = level_name(prefix, pr.level);
    if (!o.no_profiles) r.files.add(dir / (base + ".csv"), io::profile_to_csv(pr));
    const json side = io::profile_sidecar(pr);
    r.files.add(dir / (base + ".json"), dump(side));
    per_level.push_back(side);
  }
  r.summary = {{"command", prefix}, {"input", o.in}, {"levels", levels},
               {"terminal_values", io::numbers(terminals)}};
  for (auto& [k, v] : extra.items()) r.summary[k] = v;
  if (report) {
    const json rep = io::to_json(*report);
    r.files.add(dir / "limit_report.json", dump(rep));
    r.summary["limit_report"] = rep;
  }
  r.summary["profiles"] = per_level;
  r.manifest = dir / "manifest.json";

  std::ostringstream h;
  h << prefix << " on " << o.in << " (grid level " << x.grid_level() << ")\n";
  for (std::size_t i = 0; i < levels.size(); ++i)
    h << "  level " << levels[i] << "  terminal " << fmt(terminals[i])
      << (profiles[i].divergent ? "  [divergent]" : "")
      << (profiles[i].clamped_weights ? "  [clamped " + std::to_string(profiles[i].clamped_weights) + "]" : "")
      << "\n";
  if (report)
    h << "  classification: " << to_string(report->classification)
      << "  (limsup " << fmt(report->limsup_est) << ", liminf " << fmt(report->liminf_est)
      << ", slope " << fmt(report->trend_slope) << ")\n";
  r.human = h.str();
  return r;
}

Outcome run_pvar(RunContext& ctx) {
  const double p = ctx.opt.p;
  require_positive(p, "--p");
  return run_profiles(
      ctx, "pvar",
      [p](const Path& x, const std::vector<int>&) {
        return [&x, p](int n) { return pth_variation(x, dyadic_partition(n, x.grid_level()), p); };
      },
      json{{"p", p}});
}

Outcome run_sqv(RunContext& ctx) {
  const double p = ctx.opt.p;
  require_positive(p, "--p");
  const SourceSpec spec = parse_source(ctx.opt);
  std::optional<PVarSource> src;
  return run_profiles(
      ctx, "sqv",
      [&](const Path& x, const std::vector<int>& levels) {
        require_finest_level(spec, x, levels);
        src = make_source(spec, x, p);
        return [&x, p, &src](int n) {
          return scaled_qv(x, dyadic_partition(n, x.grid_level()), p, *src);
        };
      },
      json{{"p", p}, {"src_mode", ctx.opt.src}});
}

Outcome run_classical(RunContext& ctx) {
  const double g = ctx.opt.gamma;
  if (!std::isfinite(g)) throw Error(ErrorCode::invalid_argument, "--gamma must be finite");
  return run_profiles(
      ctx, "classical",
      [g](const Path& x, const std::vector<int>&) {
        return [&x, g](int n) { return classical_scaled_qv(x, dyadic_partition(n, x.grid_level()), g); };
      },
      json{{"gamma", g}});
}

Outcome run_roughness(RunContext& ctx) {
  const Options& o = ctx.opt;
  if (o.out.empty()) throw Error(ErrorCode::invalid_argument, "--out is required");
  const Path x = ctx.load(o.in);
  ctx.clock.lap("load_seconds");
  const auto levels = parse_levels(o.levels, x.grid_level());
  if (levels.size() < 3)
    throw Error(ErrorCode::insufficient_data, "roughness needs at least 3 levels");
  const SourceSpec src = parse_source(o);
  require_finest_level(src, x, levels);
  if (!(o.p_min > 0) || !(o.p_min < o.p_max))
    throw Error(ErrorCode::invalid_argument, "need 0 < --pmin < --pmax");
  if (o.iters < 0 || o.iters > 60)
    throw Error(ErrorCode::invalid_argument, "--iters must be in [0, 60]");
  if (o.window != 0 && (o.window < 3 || o.window > levels.size()))
    throw Error(ErrorCode::insufficient_data, "--window must lie in [3, number of levels]");

  Outcome r;
  RoughnessReport rep;
  try {
    rep = critical_index_search(x, levels, o.p_min, o.p_max, o.iters, src, o.th, o.window);
  } catch (const SearchError& e) {
    rep = e.evidence();
    r.status = kExitNumerical;
    r.failure = std::string(to_string(e.code())) + ": " + e.what();
  }
  ctx.clock.lap("compute_seconds");

  const fs::path dir = o.out;
  json j = io::to_json(rep);
  j["thresholds"] = io::to_json(o.th);
  if (r.status != kExitOk) j["error"] = r.failure;
  r.files.add(dir / "roughness_report.json", dump(j));
  r.files.add(dir / "per_q.csv", io::per_q_csv(rep));
  r.manifest = dir / "manifest.json";
  r.summary = j;

  std::ostringstream h;
  h << "roughness of " << o.in << " over levels " << levels.front() << ":" << levels.back() << "\n";
  for (const auto& pq : rep.per_q)
    h << "  q " << fmt(pq.q) << "  " << to_string(pq.classification) << "  slope "
      << fmt(pq.report.trend_slope) << "\n";
  if (r.status == kExitOk)
    h << "  p_bar " << fmt(rep.p_bar_est) << "  bracket [" << fmt(rep.p_low) << ", "
      << fmt(rep.p_high) << "]  hurst " << fmt(rep.hurst_est) << "\n";
  r.human = h.str();
  return r;
}

Outcome comparison_outcome(const Options& o, const ComparisonReport& rep) {
  Outcome r;
  const fs::path dir = o.out;
  json j = io::to_json(rep);
  j["tol"] = o.tol;
  j["passed"] = rep.passed(o.tol);
  r.files.add(dir / (rep.name + "_report.json"), dump(j));
  r.files.add(dir / (rep.name + ".csv"), io::comparison_csv(rep));
  r.manifest = dir / "manifest.json";
  r.summary = j;
  std::ostringstream h;
  h << rep.name << " on " << o.in << "\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i)
    h << "  level " << rep.levels[i] << "  lhs " << fmt(rep.lhs[i]) << "  rhs " << fmt(rep.rhs[i])
      << "  rel_err " << fmt(rep.rel_err[i]) << "\n";
  h << "  error trend slope " << fmt(rep.err_trend_slope) << (rep.exact ? "  (exact)" : "")
    << "  passed at tol " << fmt(o.tol) << ": " << (rep.passed(o.tol) ? "yes" : "no") << "\n";
  for (const auto& w : rep.warnings) h << "  warning: " << w << "\n";
  r.human = h.str();
  return r;
}

void require_out(const Options& o) {
  if (o.out.empty()) throw Error(ErrorCode::invalid_argument, "--out is required");
}

Outcome run_isometry(RunContext& ctx) {
  const Options& o = ctx.opt;
  require_out(o);
  require_positive(o.p, "--p");
  const auto f = maps::by_name(o.map, o.map_a, o.map_b);
  const Path x = ctx.load(o.in);
  ctx.clock.lap("load_seconds");
  const auto levels = parse_levels(o.levels, x.grid_level());
  const SourceSpec src = parse_source(o);
  require_finest_level(src, x, levels);
  std::optional<double> power;
  if (!std::isnan(o.integrand_power)) {
    require_positive(o.integrand_power, "--integrand-power");
    power = o.integrand_power;
  }
  const auto rep = isometry_check(x, f, o.p, levels, src, power);
  ctx.clock.lap("compute_seconds");
  return comparison_outcome(o, rep);
}

Outcome run_chainrule(RunContext& ctx) {
  const Options& o = ctx.opt;
  require_out(o);
  require_positive(o.p, "--p");
  const auto f = maps::by_name(o.map, o.map_a, o.map_b);
  const Path x = ctx.load(o.in);
  ctx.clock.lap("load_seconds");
  const auto levels = parse_levels(o.levels, x.grid_level());
  const auto rep = chain_rule_check(x, f, o.p, levels);
  ctx.clock.lap("compute_seconds");
  return comparison_outcome(o, rep);
}

Outcome run_invariance(RunContext& ctx) {
  const Options& o = ctx.opt;
  require_out(o);
  require_positive(o.p, "--p");
  const Path x = ctx.load(o.in);
  ctx.clock.lap("load_seconds");
  const auto levels = parse_levels(o.levels, x.grid_level());
  const SourceSpec src = parse_source(o);
  require_finest_level(src, x, levels);
  Path a = [&] {
    if (!o.perturbation.empty()) return ctx.load(o.perturbation);
    SmoothParams sp;
    sp.frequency = o.frequency;
    sp.phase = o.phase;
    if (o.smooth == "poly") {
      if (o.poly.empty()) throw Error(ErrorCode::invalid_argument, "--smooth poly needs --poly");
      sp.coeffs = parse_list(o.poly);
      return smooth_perturbation(SmoothKind::poly, o.amplitude, x.grid_level(), sp);
    }
    if (o.smooth != "sine")
      throw Error(ErrorCode::invalid_argument, "--smooth must be sine or poly");
    return smooth_perturbation(SmoothKind::sine, o.amplitude, x.grid_level(), sp);
  }();
  const auto rep = invariance_check(x, a, o.p, levels, src);
  ctx.clock.lap("compute_seconds");
  return comparison_outcome(o, rep);
}

Outcome run_counterexample(RunContext& ctx) {
  const Options& o = ctx.opt;
  require_out(o);
  if (o.nmax < 3 || triangular(o.nmax) > kMaxCliGridLevel)
    throw Error(ErrorCode::invalid_argument, "--nmax must be in [3, 6]");
  const int grid = o.max_level >= 0 ? o.max_level : triangular(o.nmax);
  if (grid < triangular(o.nmax) || grid > kMaxCliGridLevel)
    throw Error(ErrorCode::resolution, "--level must be in [S_nmax, " +
                                           std::to_string(kMaxCliGridLevel) + "]");
  const auto coeffs = counterexample_coefficients(o.nmax);
  const Path x = schauder_eval(coeffs, grid);

  std::vector<int> at, below, inter;
  for (int n = 1; n <= o.nmax; ++n) {
    at.push_back(triangular(n));
    below.push_back(triangular(n) - 1);
    inter.push_back(triangular(n) - 1);
    inter.push_back(triangular(n));
  }
  auto qv = [&](const std::vector<int>& levels) {
    return terminal_sequence(levels, [&](int n) {
      return pth_variation(x, dyadic_partition(n, grid), 2.0).terminal();
    });
  };
  const auto at_rep = limit_diagnostics(at, qv(at), 0, o.th);
  const auto below_rep = limit_diagnostics(below, qv(below), 0, o.th);
  const auto inter_rep = limit_diagnostics(inter, qv(inter), 0, o.th);
  ctx.clock.lap("compute_seconds");

  Outcome r;
  const fs::path dir = o.out;
  r.files.add(dir / "path.csv", io::path_to_csv(x));
  r.files.add(dir / "coefficients.json", dump(io::coefficients_to_json(coeffs)));
  r.files.add(dir / "limit_report_sn.json", dump(io::to_json(at_rep)));
  r.files.add(dir / "limit_report_sn_minus_1.json", dump(io::to_json(below_rep)));
  r.files.add(dir / "limit_report_interleaved.json", dump(io::to_json(inter_rep)));
  r.summary = {{"command", "counterexample"},
               {"nmax", o.nmax},
               {"grid_level", grid},
               {"levels_sn", at},
               {"terminal_sn", io::numbers(at_rep.terminal_values)},
               {"levels_sn_minus_1", below},
               {"terminal_sn_minus_1", io::numbers(below_rep.terminal_values)},
               {"interleaved", io::to_json(inter_rep)}};
  r.files.add(dir / "counterexample_report.json", dump(r.summary));
  r.manifest = dir / "manifest.json";

  std::ostringstream h;
  h << "counterexample n_max " << o.nmax << " on grid level " << grid << "\n";
  for (int i = 0; i < o.nmax; ++i)
    h << "  n " << i + 1 << "  level " << at[i] << " -> " << fmt(at_rep.terminal_values[i])
      << "   level " << below[i] << " -> " << fmt(below_rep.terminal_values[i]) << "\n";
  h << "  interleaved sequence: " << to_string(inter_rep.classification) << "\n";
  r.human = h.str();
  return r;
}

/// Collects report JSON files into a single summary table.
Outcome run_report(RunContext& ctx) {
  const Options& o = ctx.opt;
  require_out(o);
  if (o.inputs.empty()) throw Error(ErrorCode::invalid_argument, "report needs --in FILE|DIR");
  std::vector<fs::path> files;
  for (const auto& in : o.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && e.path().extension() == ".json" && name != "manifest.json" &&
            name.find(".manifest.") == std::string::npos && name.find("_level_") == std::string::npos)
          files.push_back(e.path());
      }
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw Error(ErrorCode::io, "no such file or directory: " + in);
    }
  }
  std::sort(files.begin(), files.end());

  json rows = json::array();
  std::ostringstream md;
  md << "| file | kind | result | detail |\n|---|---|---|---|\n";
  for (const auto& f : files) {
    const json j = ctx.load_json(f.string());
    json row = {{"file", f.generic_string()}};
    if (j.contains("p_bar_est")) {
      row["kind"] = "roughness";
      row["result"] = j.contains("error") ? "failed" : "p_bar " + j["p_bar_est"].dump();
      row["detail"] = "hurst " + j["hurst_est"].dump();
    } else if (j.contains("name") && j.contains("rel_err")) {
      row["kind"] = j["name"];
      row["result"] = j.value("passed", false) ? "passed" : "not passed";
      row["detail"] = "final rel_err " + (j["rel_err"].empty() ? "n/a" : j["rel_err"].back().dump()) +
                      ", slope " + j["err_trend_slope"].dump();
    } else if (j.contains("classification")) {
      row["kind"] = "limit";
      row["result"] = j["classification"];
      row["detail"] = "limsup " + j["limsup_est"].dump() + ", liminf " + j["liminf_est"].dump();
    } else if (j.contains("interleaved")) {
      row["kind"] = "counterexample";
      row["result"] = j["interleaved"]["classification"];
      row["detail"] = "terminal at S_n " + j["terminal_sn"].dump();
    } else {
      continue;
    }
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    md << "| " << text(row["file"]) << " | " << text(row["kind"]) << " | " << text(row["result"])
       << " | " << text(row["detail"]) << " |\n";
    rows.push_back(row);
  }
  ctx.clock.lap("compute_seconds");

  Outcome r;
  const fs::path dir = o.out;
  r.summary = {{"command", "report"}, {"reports", rows}};
  r.files.add(dir / "summary.json", dump(r.summary));
  r.files.add(dir / "summary.md", md.str());
  r.manifest = dir / "manifest.json";
  r.human = md.str();
  return r;
}

// ------------------------------------------------------------- plumbing

json options_json(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

json versions() {
  return {{"roughvar", kVersion},
          {"generator", kGeneratorVersion},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"fftw", std::string(fftw_version)},
          {"cli11", CLI11_VERSION},
          {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))},
          {"compiler", __VERSION__}};
}

int exit_code_for(const Error& e) {
  if (e.code() == ErrorCode::io) return kExitIo;
  return e.is_validation() ? kExitValidation : kExitNumerical;
}

void add_source_options(CLI::App* sub, Options& o) {
  sub->add_option("--src", o.src, "p-th variation source: analytic, finest_level, self_level");
  sub->add_option("--finest-level", o.finest_level, "level of the finest-level proxy (default: grid level)");
  sub->add_option("--C", o.slope, "slope of the analytic source t -> C t (default: finest terminal)");
}

void add_threshold_options(CLI::App* sub, Options& o) {
  sub->add_option("--vanish", o.th.vanish_level, "vanishing level");
  sub->add_option("--diverge", o.th.diverge_level, "diverging level");
  sub->add_option("--slope-tol", o.th.slope_tol, "trend slope deadband (log2 per level)");
  sub->add_option("--osc-ratio", o.th.osc_ratio, "max/min ratio that may indicate oscillation");
  sub->add_option("--osc-step", o.th.osc_step, "rise and fall factor required for oscillation");
  sub->add_option("--window", o.window, "number of trailing levels used (0 = all)");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"roughvar: pathwise p-th variation and scaled quadratic variation"};
  app.fallthrough();
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_flag("--json", o.json_out, "print machine-readable JSON on stdout");
  app.set_version_flag("--version", kVersion);

  std::map<std::string, Outcome (*)(RunContext&)> handlers;
  auto sub = [&](const char* name, const char* help, Outcome (*fn)(RunContext&)) {
    handlers[name] = fn;
    return app.add_subcommand(name, help);
  };

  auto* gen = sub("gen", "generate a test path", run_gen);
  gen->add_option("--kind", o.kind, "fbm, takagi, counterexample, smooth, custom_schauder");
  gen->add_option("--H", o.hurst, "Hurst parameter");
  gen->add_option("--level", o.level, "grid level L (2^L + 1 samples)");
  gen->add_option("--seed", o.seed, "RNG seed");
  gen->add_option("--signs", o.signs, "Takagi signs: constant or seeded");
  gen->add_option("--max-level", o.max_level, "Takagi coefficient levels (default: grid level)");
  gen->add_option("--nmax", o.nmax, "counterexample n_max");
  gen->add_option("--method", o.method, "fBM sampler: circulant or exact");
  gen->add_option("--amplitude", o.amplitude, "smooth amplitude");
  gen->add_option("--frequency", o.frequency, "sine frequency");
  gen->add_option("--phase", o.phase, "sine phase");
  gen->add_option("--poly", o.poly, "polynomial coefficients c0,c1,...");
  gen->add_option("--coeffs", o.coeffs, "coefficient JSON for custom_schauder");
  gen->add_option("--out", o.out, "output path (.csv or .json)");

  auto profile_common = [&](CLI::App* s) {
    s->add_option("--in", o.in, "input path (CSV or JSON)");
    s->add_option("--levels", o.levels, "levels a:b inclusive, or a single level");
    s->add_option("--out", o.out, "output directory");
    s->add_flag("--no-profiles", o.no_profiles, "skip per-level profile CSVs");
    add_threshold_options(s, o);
  };
  auto* pvar = sub("pvar", "p-th variation along dyadic partitions", run_pvar);
  pvar->add_option("--p", o.p, "exponent p");
  profile_common(pvar);

  auto* sqv = sub("sqv", "scaled quadratic variation", run_sqv);
  sqv->add_option("--p", o.p, "index p");
  profile_common(sqv);
  add_source_options(sqv, o);

  auto* classical = sub("classical", "time-weighted scaled quadratic variation", run_classical);
  classical->add_option("--gamma", o.gamma, "time exponent gamma");
  profile_common(classical);

  auto* rough = sub("roughness", "bisection for the critical index", run_roughness);
  rough->add_option("--in", o.in, "input path");
  rough->add_option("--levels", o.levels, "levels a:b");
  rough->add_option("--out", o.out, "output directory");
  rough->add_option("--pmin", o.p_min, "lower end of the bracket");
  rough->add_option("--pmax", o.p_max, "upper end of the bracket");
  rough->add_option("--iters", o.iters, "bisection steps");
  add_source_options(rough, o);
  add_threshold_options(rough, o);

  auto comparison_common = [&](CLI::App* s) {
    s->add_option("--in", o.in, "input path");
    s->add_option("--levels", o.levels, "levels a:b");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--p", o.p, "index p");
    s->add_option("--tol", o.tol, "relative error tolerance at the top level");
  };
  auto* iso = sub("isometry", "pathwise isometry check", run_isometry);
  comparison_common(iso);
  iso->add_option("--map", o.map, "identity, affine, square_plus_one, sin, exp");
  iso->add_option("--a", o.map_a, "affine slope");
  iso->add_option("--b", o.map_b, "affine offset");
  iso->add_option("--integrand-power", o.integrand_power, "power of |f'| in the integrand (default p)");
  add_source_options(iso, o);

  auto* chain = sub("chainrule", "chain rule for the p-th variation", run_chainrule);
  comparison_common(chain);
  chain->add_option("--map", o.map, "identity, affine, square_plus_one, sin, exp");
  chain->add_option("--a", o.map_a, "affine slope");
  chain->add_option("--b", o.map_b, "affine offset");

  auto* inv = sub("invariance", "invariance under a smooth perturbation", run_invariance);
  comparison_common(inv);
  inv->add_option("--perturbation", o.perturbation, "perturbation path file");
  inv->add_option("--smooth", o.smooth, "built-in perturbation: sine or poly");
  inv->add_option("--amplitude", o.amplitude, "perturbation amplitude");
  inv->add_option("--frequency", o.frequency, "sine frequency");
  inv->add_option("--phase", o.phase, "sine phase");
  inv->add_option("--poly", o.poly, "polynomial coefficients c0,c1,...");
  add_source_options(inv, o);

  auto* ce = sub("counterexample", "oscillating quadratic variation example", run_counterexample);
  ce->add_option("--nmax", o.nmax, "number of blocks (3..6)");
  ce->add_option("--level", o.max_level, "grid level (default S_nmax)");
  ce->add_option("--out", o.out, "output directory");
  add_threshold_options(ce, o);

  auto* rep = sub("report", "summarize report JSON files", run_report);
  rep->add_option("--in", o.inputs, "report files or directories")->expected(1, -1);
  rep->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  // The bisection decides by the sign of the trend unless the user set a deadband.
  if (command == "roughness" && chosen->get_option("--slope-tol")->count() == 0)
    o.th.slope_tol = search_thresholds().slope_tol;

  const std::string started = utc_now();
  RunContext ctx(o);
  try {
    Outcome out = handlers.at(command)(ctx);
    const auto written = out.files.commit();
    ctx.clock.lap("write_seconds");

    json manifest = {{"command", command},
                     {"argv", std::vector<std::string>(argv + 1, argv + argc)},
                     {"config", options_json(chosen)},
                     {"versions", versions()},
                     {"threads", thread_cap()},
                     {"timings", ctx.clock.to_json()},
                     {"started_utc", started},
                     {"input_digests", ctx.input_digests},
                     {"outputs", written},
                     {"exit_code", out.status}};
    if (!out.failure.empty()) manifest["error"] = out.failure;
    ArtifactSet m;
    m.add(out.manifest, dump(manifest));
    m.commit();

    if (o.json_out)
      std::cout << dump(out.summary);
    else
      std::cout << out.human;
    if (out.status != kExitOk) std::cerr << "roughvar: " << out.failure << "\n";
    return out.status;
  } catch (const Error& e) {
    std::cerr << "roughvar " << command << ": " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::bad_alloc&) {
    std::cerr << "roughvar " << command << ": out of memory\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "roughvar " << command << ": " << e.what() << "\n";
    return kExitIo;
  }
}
