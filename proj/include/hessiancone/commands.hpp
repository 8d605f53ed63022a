#pragma once

// Batch experiments behind the command-line tool. Each command reads a
// Config, writes CSV files (provenance line first) to an output directory and
// returns the process exit code: 0 iff every enabled assertion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hessiancone/arrowhead.hpp"
#include "hessiancone/cone.hpp"
#include "hessiancone/diagnostics.hpp"
#include "hessiancone/estimates.hpp"
#include "hessiancone/io.hpp"
#include "hessiancone/presets.hpp"
#include "hessiancone/random.hpp"
#include "hessiancone/solver.hpp"

namespace hessiancone::commands {

enum class Profile { Fast, Full };

inline Profile parse_profile(std::string_view s) {
  if (s == "fast") return Profile::Fast;
  if (s == "full") return Profile::Full;
  fail(ErrorKind::Parse, "profile must be fast or full, got '" + std::string(s) + "'");
}

struct RunOptions {
  std::uint64_t seed = 1;
  std::filesystem::path out = ".";
  Profile profile = Profile::Fast;
  /// Human-readable progress and assertion lines; nullptr silences them.
  std::ostream* log = &std::cout;
};

/// Assertion bookkeeping shared by all commands.
class Checks {
 public:
  explicit Checks(std::ostream* log) : log_(log) {}

  void expect(bool ok, const std::string& what) {
    if (!ok) ++failures_;
    if (log_) *log_ << (ok ? "PASS " : "FAIL ") << what << '\n';
  }
  void note(const std::string& text) const {
    if (log_) *log_ << text << '\n';
  }
  [[nodiscard]] int failures() const { return failures_; }
  [[nodiscard]] int exit_code() const { return failures_ == 0 ? 0 : 1; }

 private:
  std::ostream* log_;
  int failures_ = 0;
};

/// Output CSV file with the provenance line and a column header.
class CsvFile {
 public:
  CsvFile(const RunOptions& opt, const std::string& name, std::string_view command, const Config& cfg,
          std::string_view header)
      : path_(opt.out / name), out_(path_) {
    if (!out_) fail(ErrorKind::Io, "cannot write " + path_.string());
    out_ << provenance_line(command, opt.seed, cfg.hash());
    if (!header.empty()) out_ << header << '\n';
  }
  std::ofstream& stream() { return out_; }
  void row(const std::string& line) { out_ << line << '\n'; }
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

namespace detail {

template <class T>
T pick(Profile p, T fast, T full) {
  return p == Profile::Fast ? fast : full;
}

inline std::string num(double v, int precision = 10) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline void prepare_output(const RunOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + opt.out.string());
}

inline GridPtr make_grid(const Config& cfg, Profile profile, long default_full = 32) {
  const std::string model = cfg.get("model", "complex");
  const long N = cfg.get_int("resolution", pick<long>(profile, 16, default_full));
  if (model == "complex") return GridGeometry::complex_model(static_cast<int>(cfg.get_int("n", 2)), static_cast<int>(N));
  if (model == "real") return GridGeometry::real_model(static_cast<int>(cfg.get_int("d", 2)), static_cast<int>(N));
  fail(ErrorKind::Parse, "model must be complex or real");
}

inline SolverConfig solver_config(const Config& cfg) {
  SolverConfig sc;
  sc.tolerance = cfg.get_double("tolerance", sc.tolerance);
  sc.stage_tolerance = cfg.get_double("stage_tolerance", sc.stage_tolerance);
  sc.initial_step = cfg.get_double("initial_step", sc.initial_step);
  sc.min_step = cfg.get_double("min_step", sc.min_step);
  sc.max_newton = static_cast<int>(cfg.get_int("max_newton", sc.max_newton));
  sc.linear_tolerance = cfg.get_double("linear_tolerance", sc.linear_tolerance);
  sc.linear_max_iterations = static_cast<int>(cfg.get_int("linear_max_iterations", sc.linear_max_iterations));
  return sc;
}

inline const std::set<std::string> kSolverKeys = {"tolerance",  "stage_tolerance", "initial_step",
                                                  "min_step",   "max_newton",      "linear_tolerance",
                                                  "linear_max_iterations"};
inline const std::set<std::string> kGridKeys = {"model", "n", "d", "resolution", "kind"};

inline std::set<std::string> keys(std::initializer_list<std::set<std::string>> groups,
                                  std::initializer_list<std::string> extra) {
  std::set<std::string> out(extra);
  for (const auto& g : groups) out.insert(g.begin(), g.end());
  return out;
}

/// Ratio before/after for the last two accepted Newton steps, or 0 if fewer.
inline std::pair<double, double> last_two_reductions(const std::vector<NewtonRecord>& h) {
  auto ratio = [](const NewtonRecord& r) {
    if (r.residual_after <= 0.0) return std::numeric_limits<double>::infinity();
    return r.residual_before / r.residual_after;
  };
  std::vector<const NewtonRecord*> taken;
  for (const NewtonRecord& r : h)
    if (r.damping > 0.0) taken.push_back(&r);
  if (taken.size() < 2) return {0.0, 0.0};
  return {ratio(*taken[taken.size() - 2]), ratio(*taken.back())};
}

/// A cone point away from the boundary: uniform entries shifted along
/// (1,...,1) until f(x) >= 0.05 max|x_i|.
inline Lambda sample_cone_point(Rng& rng, const SymmetricFunction& fun) {
  Lambda x(fun.dim());
  for (double& v : x) v = rng.uniform(-3.0, 3.0);
  for (int guard = 0; guard < 1000; ++guard) {
    if (fun.in_cone(x)) {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::abs(v));
      if (fun.value(x) >= 0.05 * m) return x;
    }
    for (double& v : x) v += 0.25;
  }
  fail(ErrorKind::NumericFailure, "could not sample a cone point");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_lemma_sweep(const Config& cfg, const RunOptions& opt) {
  cfg.require_known({"dims", "eps", "trials", "lemmas", "deflation_trials", "range"});
  detail::prepare_output(opt);
  Checks checks(opt.log);
  const auto dims = cfg.get_ints("dims", detail::pick<std::vector<long>>(opt.profile, {2, 3, 4}, {2, 3, 4, 5, 6, 7, 8}));
  const auto eps_list = cfg.get_doubles("eps", {0.05, 0.2, 1.0});
  const long trials = cfg.get_int("trials", detail::pick<long>(opt.profile, 1000, 10000));
  const long deflation_trials = cfg.get_int("deflation_trials", 1000);
  const double range = cfg.get_double("range", 10.0);
  const auto lemma_names = detail::split_list(cfg.get("lemmas", "strong,weak,distinct"));

  CsvFile sweep(opt, "lemma_sweep.csv", "lemma-sweep", cfg, "lemma,trials," + std::string(arrowhead::kSweepCsvHeader));
  std::uint64_t stream = 0;
  for (const std::string& name : lemma_names) {
    arrowhead::Lemma lemma;
    if (name == "strong") lemma = arrowhead::Lemma::Strong;
    else if (name == "weak") lemma = arrowhead::Lemma::Weak;
    else if (name == "distinct") lemma = arrowhead::Lemma::Distinct;
    else fail(ErrorKind::Parse, "unknown lemma '" + name + "'");
    for (long n : dims)
      for (double eps : eps_list) {
        const std::uint64_t seed = splitmix64(opt.seed ^ splitmix64(++stream));
        if (trials <= 0) continue;
        const auto s = arrowhead::lemma_sweep(lemma, static_cast<int>(n), eps, trials, seed, range);
        sweep.row(name + "," + std::to_string(trials) + "," + arrowhead::to_csv_row(s));
        checks.expect(s.violations == 0, "lemma " + name + " n=" + std::to_string(n) + " eps=" + detail::num(eps) +
                                             " violations=" + std::to_string(s.violations));
      }
  }

  CsvFile defl(opt, "deflation.csv", "lemma-sweep", cfg, "n,trials,max_mismatch,failures");
  for (long n : dims) {
    if (n < 3 || deflation_trials <= 0) continue;
    double worst = 0.0;
    long bad = 0;
    for (long t = 0; t < deflation_trials; ++t) {
      Rng rng = Rng::stream(opt.seed ^ 0xdef1a7e, static_cast<std::uint64_t>(n * 1000003 + t));
      const arrowhead::ArrowheadSpec spec = arrowhead::random_spec_with_repeat(rng, static_cast<int>(n), range);
      const auto d = arrowhead::deflate_repeated(spec);
      std::vector<double> full = arrowhead::eigenvalues(spec).values;
      std::vector<double> merged = arrowhead::eigenvalues(d.reduced).values;
      merged.push_back(d.eigenvalue);
      std::sort(full.begin(), full.end());
      std::sort(merged.begin(), merged.end());
      double m = 0.0;
      for (std::size_t i = 0; i < full.size(); ++i) m = std::max(m, std::abs(full[i] - merged[i]));
      worst = std::max(worst, m);
      if (!(m <= 1e-9)) ++bad;
    }
    defl.row(std::to_string(n) + "," + std::to_string(deflation_trials) + "," + detail::num(worst) + "," +
             std::to_string(bad));
    checks.expect(bad == 0, "deflation n=" + std::to_string(n) + " max mismatch " + detail::num(worst, 3));
  }
  return checks.exit_code();
}

// ---------------------------------------------------------------------------

struct ConeSuiteRow {
  std::string kind;
  int n = 0;
  long samples = 0;
  long gradient_failures = 0;
  long concavity_failures = 0;
  double euler_max = 0.0;
  long fi_sum_failures = 0;
  double fd_max_rel = 0.0;
  long ray_failures = 0;
  double ray_max_residual = 0.0;
  long gap_near = 0;
  long gap_far = 0;
  long gap_failures = 0;
  double eps_min = 0.0;
  double eps_median = 0.0;
  double eps_max = 0.0;

  [[nodiscard]] bool pass() const {
    return gradient_failures == 0 && concavity_failures == 0 && euler_max <= 1e-9 && fi_sum_failures == 0 &&
           fd_max_rel <= 1e-5 && ray_failures == 0 && gap_failures == 0;
  }
};

inline constexpr std::string_view kConeCsvHeader =
    "kind,n,samples,gradient_failures,concavity_failures,euler_max,fi_sum_failures,fd_max_rel,ray_failures,"
    "ray_max_residual,gap_near,gap_far,gap_failures,eps_min,eps_median,eps_max";

inline std::string to_csv_row(const ConeSuiteRow& r) {
  using detail::num;
  std::ostringstream os;
  os << r.kind << ',' << r.n << ',' << r.samples << ',' << r.gradient_failures << ',' << r.concavity_failures << ','
     << num(r.euler_max) << ',' << r.fi_sum_failures << ',' << num(r.fd_max_rel) << ',' << r.ray_failures << ','
     << num(r.ray_max_residual) << ',' << r.gap_near << ',' << r.gap_far << ',' << r.gap_failures << ','
     << num(r.eps_min) << ',' << num(r.eps_median) << ',' << num(r.eps_max);
  return os.str();
}

/// Structure checks on random level-set points; `ray_samples` of them also run
/// the ray-intersection check.
inline ConeSuiteRow cone_suite(const SymmetricFunction& fun, long samples, long ray_samples, std::uint64_t seed) {
  ConeSuiteRow r;
  r.kind = fun.name();
  r.n = fun.dim();
  r.samples = samples;
  const int n = fun.dim();
  std::vector<double> eps_values;
  for (long s = 0; s < samples; ++s) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(s));
    const double sigma = std::exp(rng.uniform(-2.0, 2.0));
    const cone::LevelSetPoint p = cone::make_level_set_point(fun, detail::sample_cone_point(rng, fun), sigma);
    const Lambda& x = p.lambda;
    const Lambda g = fun.gradient(x);
    if (!std::all_of(g.begin(), g.end(), [](double v) { return v > 0.0; })) ++r.gradient_failures;

    const Lambda y = detail::sample_cone_point(rng, fun);
    if (!cone::check_concavity(fun, x, y).pass) ++r.concavity_failures;

    r.euler_max = std::max(r.euler_max, std::abs(cone::euler_positivity(fun, x) - sigma) / (1.0 + sigma));

    if (!cone::check_fi_sum_bound(fun, p, std::exp(rng.uniform(-2.0, 2.0)))) ++r.fi_sum_failures;

    double gmax = 0.0, err = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < n; ++i) {
      // Per-coordinate step: f_i grows like 1 / lambda_i near the cone boundary.
      const double step = 1e-6 * std::max(std::abs(x[i]), 1e-3 * std::max(1.0, scale));
      Lambda a = x, b = x;
      a[i] += step;
      b[i] -= step;
      err = std::max(err, std::abs((fun.value(a) - fun.value(b)) / (2.0 * step) - g[i]));
    }
    r.fd_max_rel = std::max(r.fd_max_rel, err / gmax);

    // Subsolution point on the same level, scaled from an independent sample.
    const Lambda base = detail::sample_cone_point(rng, fun);
    const double k = cone::ray_intersect(fun, base, sigma * rng.uniform(1.0, 1.5));
    Lambda mu = base;
    for (double& v : mu) v *= k;
    const double beta = cone::beta_for(cone::unit_normal(fun, mu));
    const cone::GapResult gap = cone::subsolution_gap(fun, mu, x, {beta, 1e-3});
    if (gap.branch == cone::GapBranch::NormalNear) {
      ++r.gap_near;
    } else {
      ++r.gap_far;
      eps_values.push_back(gap.residual);
    }
    if (!gap.holds) ++r.gap_failures;

    if (s < ray_samples) {
      const Lambda base2 = detail::sample_cone_point(rng, fun);
      const double target = std::exp(rng.uniform(-3.0, 3.0));
      bool ok = true;
      try {
        const double t = cone::ray_intersect(fun, base2, target);
        Lambda at = base2;
        for (double& v : at) v *= t;
        const double res = std::abs(fun.value(at) - target);
        r.ray_max_residual = std::max(r.ray_max_residual, res / (1.0 + target));
        ok = res <= 1e-10 * (1.0 + target);
        // Sign of f(t x) - sigma along t = 2^j, j = -40..40.
        int changes = 0;
        double prev = 0.0;
        for (int j = -40; j <= 40; ++j) {
          Lambda z = base2;
          for (double& v : z) v *= std::ldexp(1.0, j);
          const double d = fun.value(z) - target;
          if (j > -40 && ((prev < 0.0) != (d < 0.0))) ++changes;
          prev = d;
        }
        ok = ok && changes == 1;
      } catch (const Error&) {
        ok = false;
      }
      if (!ok) ++r.ray_failures;
    }
  }
  if (!eps_values.empty()) {
    std::sort(eps_values.begin(), eps_values.end());
    r.eps_min = eps_values.front();
    r.eps_max = eps_values.back();
    r.eps_median = eps_values[eps_values.size() / 2];
  }
  return r;
}

inline int cmd_cone_check(const Config& cfg, const RunOptions& opt) {
  cfg.require_known({"kinds", "n", "samples", "ray_samples"});
  detail::prepare_output(opt);
  Checks checks(opt.log);
  const int n = static_cast<int>(cfg.get_int("n", 3));
  const auto kinds = detail::split_list(cfg.get("kinds", "sigma1,sigmaK:2,ma,quotient:1:2"));
  const long samples = cfg.get_int("samples", 1000);
  const long ray_samples = cfg.get_int("ray_samples", 100);
  CsvFile csv(opt, "cone_check.csv", "cone-check", cfg, kConeCsvHeader);
  std::uint64_t stream = 0;
  for (const std::string& kind : kinds) {
    const SymmetricFunction fun = SymmetricFunction::parse(kind, n);
    const ConeSuiteRow row = cone_suite(fun, samples, ray_samples, splitmix64(opt.seed ^ splitmix64(++stream)));
    csv.row(to_csv_row(row));
    checks.expect(row.pass(), "cone suite " + row.kind + " n=" + std::to_string(n));
  }
  return checks.exit_code();
}

// ---------------------------------------------------------------------------

inline constexpr std::string_view kSolveCsvHeader = "preset,kind,resolution,amplitude,sup_error,order,";

inline ScalarField import_or(const Config& cfg, const std::string& key, const ScalarField& fallback) {
  if (!cfg.has(key)) return fallback;
  ScalarField f = read_raw(cfg.require(key));
  if (!f.grid->same_shape(*fallback.grid)) fail(ErrorKind::DimensionMismatch, key + " grid differs from the run grid");
  f.grid = fallback.grid;
  return f;
}

inline int cmd_solve(const Config& cfg, const RunOptions& opt) {
  cfg.require_known(detail::keys({detail::kSolverKeys, detail::kGridKeys},
                                 {"preset", "resolutions", "amplitude", "bump", "dump", "psi_raw", "phi_raw",
                                  "subsolution_raw", "check_newton"}));
  detail::prepare_output(opt);
  Checks checks(opt.log);
  const std::string preset = cfg.get("preset", "trivial");
  const std::string kind = cfg.get("kind", "ma");
  const std::string dump = cfg.get("dump", "csv");
  const SolverConfig sc = detail::solver_config(cfg);
  const bool riemannian = preset == "riemannian";
  Config grid_cfg = cfg;
  if (riemannian) grid_cfg.set("model", "real");

  std::vector<long> resolutions;
  if (cfg.has("resolutions")) {
    resolutions = cfg.get_ints("resolutions", {});
  } else if (preset == "trivial") {
    resolutions = {cfg.get_int("resolution", detail::pick<long>(opt.profile, 16, 32))};
  } else if (riemannian) {
    resolutions = detail::pick<std::vector<long>>(opt.profile, {16, 32}, {32, 64});
  } else {
    resolutions = {16, 32};
  }
  if (resolutions.empty()) fail(ErrorKind::Parse, "resolutions is empty");

  CsvFile table(opt, "solve.csv", "solve", cfg, std::string(kSolveCsvHeader) + kSolveReportHeader);
  CsvFile newton(opt, "newton.csv", "solve", cfg, "resolution,step,t,residual_before,residual_after,damping,linear_iterations");
  double prev_err = std::numeric_limits<double>::quiet_NaN();
  double prev_h = 0.0;
  for (const long N : resolutions) {
    grid_cfg.set("resolution", std::to_string(N));
    const GridPtr grid = detail::make_grid(grid_cfg, opt.profile);
    const SymmetricFunction fun = SymmetricFunction::parse(kind, grid->dim());
    presets::PresetProblem pp = [&] {
      if (preset == "trivial") return presets::trivial(grid, fun);
      if (preset == "manufactured" || riemannian)
        return presets::manufactured(grid, fun, cfg.get_double("amplitude", 0.0), cfg.get_double("bump", 1.0));
      fail(ErrorKind::Parse, "unknown preset '" + preset + "'");
    }();
    pp.problem.psi = import_or(cfg, "psi_raw", pp.problem.psi);
    pp.problem.phi = import_or(cfg, "phi_raw", pp.problem.phi);
    pp.problem.subsolution = import_or(cfg, "subsolution_raw", pp.problem.subsolution);

    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult res = grid->is_complex() ? continuity_solve(pp.problem, sc) : solve_riemannian(pp.problem, sc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string tag = preset + " " + kind + " N=" + std::to_string(N);
    checks.note(tag + ": " + detail::num(secs, 3) + " s, " + std::to_string(res.report.newton_iterations) +
                " Newton steps");

    double err = std::numeric_limits<double>::quiet_NaN();
    double order = std::numeric_limits<double>::quiet_NaN();
    if (pp.exact) {
      err = presets::sup_error(res.u, *pp.exact);
      if (!std::isnan(prev_err)) order = std::log(prev_err / err) / std::log(prev_h / grid->h_max());
      prev_err = err;
      prev_h = grid->h_max();
    }
    table.row(preset + "," + kind + "," + std::to_string(N) + "," + detail::num(pp.amplitude) + "," +
              detail::num(err) + "," + detail::num(order) + "," + to_csv_row(res.report));
    for (std::size_t i = 0; i < res.report.history.size(); ++i) {
      const NewtonRecord& r = res.report.history[i];
      newton.row(std::to_string(N) + "," + std::to_string(i) + "," + detail::num(r.t) + "," +
                 detail::num(r.residual_before) + "," + detail::num(r.residual_after) + "," + detail::num(r.damping) +
                 "," + std::to_string(r.linear_iterations));
    }

    checks.expect(res.report.final_residual <= sc.tolerance, tag + " final residual " + detail::num(res.report.final_residual, 3));
    checks.expect(res.report.comparison_violations == 0,
                  tag + " comparison violations " + std::to_string(res.report.comparison_violations));
    if (!grid->is_complex())
      checks.expect(res.report.tangential_pass, tag + " tangential check, min gap " + detail::num(res.report.tangential_gap_min, 3));
    if (preset == "trivial") checks.expect(res.report.sup_u <= 1e-8, tag + " sup|u| " + detail::num(res.report.sup_u, 3));
    if (!std::isnan(order)) checks.expect(order >= 1.7 && order <= 2.3, tag + " convergence order " + detail::num(order, 4));
    if (preset != "trivial" && cfg.get_bool("check_newton", true)) {
      const auto [r1, r2] = detail::last_two_reductions(res.report.history);
      checks.expect(r1 >= 10.0 && r2 >= 10.0,
                    tag + " last two Newton reductions " + detail::num(r1, 3) + ", " + detail::num(r2, 3));
    }

    const std::string stem = "u_" + std::to_string(N);
    if (dump == "csv" || dump == "both") {
      CsvFile f(opt, stem + ".csv", "solve", cfg, "");
      write_field_csv(f.stream(), res.u);
    }
    if (dump == "raw" || dump == "both") write_raw((opt.out / (stem + ".raw")).string(), res.u);
  }
  return checks.exit_code();
}

// ---------------------------------------------------------------------------

inline constexpr std::string_view kScalingCsvHeader =
    "s,K,sup_grad,sup_ddbar_boundary,ratio,tangential_normal_ratio,comparison_violations,newton_iterations";

inline int cmd_boundary_scaling(const Config& cfg, const RunOptions& opt) {
  cfg.require_known(detail::keys({detail::kSolverKeys, detail::kGridKeys}, {"scales", "a", "m", "ratio_limit"}));
  detail::prepare_output(opt);
  Checks checks(opt.log);
  const GridPtr grid = detail::make_grid(cfg, opt.profile);
  const SymmetricFunction fun = SymmetricFunction::parse(cfg.get("kind", "ma"), grid->dim());
  const auto scales = cfg.get_doubles("scales", {0.0, 1.0, 2.0, 4.0, 8.0});
  const double a = cfg.get_double("a", 0.01);
  const int m = static_cast<int>(cfg.get_int("m", 2));
  const double limit = cfg.get_double("ratio_limit", 10.0);
  const SolverConfig sc = detail::solver_config(cfg);

  CsvFile csv(opt, "boundary_scaling.csv", "boundary-scaling", cfg, kScalingCsvHeader);
  std::vector<double> ratios, grads;
  for (const double s : scales) {
    const presets::PresetProblem pp = presets::scaling(grid, fun, s, a, m);
    const SolveResult res = continuity_solve(pp.problem, sc);
    const SolveReport& r = res.report;
    csv.row(detail::num(s) + "," + detail::num(pp.bump) + "," + detail::num(r.sup_grad()) + "," +
            detail::num(r.sup_ddbar_boundary) + "," + detail::num(r.boundary_ratio) + "," +
            detail::num(r.tangential_normal_ratio) + "," + std::to_string(r.comparison_violations) + "," +
            std::to_string(r.newton_iterations));
    checks.expect(r.comparison_violations == 0, "s=" + detail::num(s) + " comparison violations " +
                                                    std::to_string(r.comparison_violations));
    if (s == 0.0) {
      checks.expect(r.sup_grad() <= 1e-6 && r.sup_ddbar_boundary <= 1e-6,
                    "s=0 row vanishes (sup|grad u| " + detail::num(r.sup_grad(), 3) + ")");
    } else {
      ratios.push_back(r.boundary_ratio);
      grads.push_back(r.sup_grad());
    }
  }
  if (!ratios.empty()) {
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    const double spread = *hi / *lo;
    checks.expect(*lo > 0.0 && spread <= limit, "boundary ratio spread " + detail::num(spread, 4));
    bool monotone = true;
    for (std::size_t i = 1; i < grads.size(); ++i) monotone = monotone && grads[i] >= grads[i - 1];
    checks.expect(monotone, "sup|grad u| nondecreasing in s");
  }
  return checks.exit_code();
}

// ---------------------------------------------------------------------------

inline constexpr std::string_view kDegenerateCsvHeader =
    "eps,converged,sup_grad,sup_laplacian,final_residual,newton_iterations,comparison_violations,error";

inline std::string to_csv_row(const DegenerateRow& r) {
  using detail::num;
  if (!r.converged) return num(r.eps) + ",0,nan,nan,nan,0,0," + detail::csv_quote(r.error);
  return num(r.eps) + ",1," + num(r.sup_grad) + "," + num(r.sup_laplacian) + "," + num(r.final_residual) + "," +
         std::to_string(r.newton_iterations) + "," + std::to_string(r.comparison_violations) + ",";
}

inline int cmd_degenerate(const Config& cfg, const RunOptions& opt) {
  cfg.require_known(detail::keys({detail::kSolverKeys, detail::kGridKeys},
                                 {"eps", "psi0", "barrier", "spread_limit", "min_delta0"}));
  detail::prepare_output(opt);
  Checks checks(opt.log);
  const GridPtr grid = detail::make_grid(cfg, opt.profile);
  const SymmetricFunction fun = SymmetricFunction::parse(cfg.get("kind", "ma"), grid->dim());
  const auto eps_list = cfg.get_doubles("eps", {1e-1, 1e-2, 1e-3});
  const presets::PresetProblem base =
      presets::degenerate(grid, fun, 0.0, cfg.get_double("psi0", 1.0), cfg.get_double("barrier", 4.0));

  std::vector<double> psi_interior;
  for (const std::int32_t node : grid->interior()) psi_interior.push_back(base.problem.psi[node]);
  const double delta = cone::delta_nondegeneracy(fun, psi_interior);
  const double delta0 = presets::subsolution_margin(base.problem);
  checks.note("delta_{psi,f} = " + detail::num(delta, 4) + ", subsolution margin " + detail::num(delta0, 4));
  checks.expect(delta0 >= cfg.get_double("min_delta0", 0.5), "strict subsolution margin " + detail::num(delta0, 4));

  const auto rows = degenerate_sweep(base.problem, eps_list, detail::solver_config(cfg));
  CsvFile csv(opt, "degenerate.csv", "degenerate", cfg, kDegenerateCsvHeader);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const DegenerateRow& r : rows) {
    csv.row(to_csv_row(r));
    checks.expect(r.converged, "eps=" + detail::num(r.eps) + (r.converged ? " converged" : " failed: " + r.error));
    if (r.converged) {
      checks.expect(r.comparison_violations == 0, "eps=" + detail::num(r.eps) + " comparison violations " +
                                                      std::to_string(r.comparison_violations));
      lo = std::min(lo, r.sup_laplacian);
      hi = std::max(hi, r.sup_laplacian);
    }
  }
  if (hi > 0.0)
    checks.expect(hi / lo <= cfg.get_double("spread_limit", 2.0), "sup|Laplacian u| spread " + detail::num(hi / lo, 4));
  return checks.exit_code();
}

// ---------------------------------------------------------------------------

inline int run(const std::string& command, const Config& cfg, const RunOptions& opt) {
  if (command == "lemma-sweep") return cmd_lemma_sweep(cfg, opt);
  if (command == "cone-check") return cmd_cone_check(cfg, opt);
  if (command == "solve") return cmd_solve(cfg, opt);
  if (command == "boundary-scaling") return cmd_boundary_scaling(cfg, opt);
  if (command == "degenerate") return cmd_degenerate(cfg, opt);
  fail(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
}

}  // namespace hessiancone::commands
