#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"

#include "hsreg/config.hpp"
#include "hsreg/diagnostics_bounds.hpp"
#include "hsreg/effective_dimension.hpp"
#include "hsreg/experiment_harness.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/io.hpp"
#include "hsreg/mercer.hpp"
#include "hsreg/param_choice.hpp"
#include "hsreg/smoothness_distance.hpp"

namespace hsreg::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kPass = 0,
  kError = 1,
  kFail = 2,
  kUsage = 64,
  kBadConfig = 65,
};

using json = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
};

/// Outcome of one command: pass/fail, the summary line and written files.
struct Outcome {
  bool pass = false;
  std::string summary;
  std::string details;  ///< printed before the summary line
  std::vector<std::string> outputs;
  json config;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> k{"rate", "effdim", "bounds", "distance", "filters-check", "decompose"};
  return k;
}

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void put(const std::string& name, const std::string& content, Outcome& out) const {
    io::write_file((dir_ / name).string(), content);
    out.outputs.push_back(name);
  }

 private:
  std::filesystem::path dir_;
};

inline json versions() {
  return json{{"hsreg", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION},
#if defined(__clang__)
              {"compiler", std::string("clang ") + __clang_version__},
#elif defined(__GNUC__)
              {"compiler", std::string("gcc ") + __VERSION__},
#else
              {"compiler", "unknown"},
#endif
              {"cxx_standard", __cplusplus}};
}

// ---------------------------------------------------------------- rate

inline Outcome run_rate(const json& doc, const Writer& w) {
  const ExperimentConfig c = config::experiment_config(doc);
  const RateReport r = run_rate_experiment(c);
  Outcome out;
  out.config = config::experiment_config_json(c);
  out.seed = c.seed;
  w.put("rate_report.json", io::dump(io::to_json(r)), out);
  w.put("rate_report.csv", io::rate_csv(r), out);
  w.put("rate.svg", io::rate_svg(r), out);
  out.pass = r.pass;
  std::string s = "rate: fitted exponent " + fmt(r.fitted_exponent) + " (stderr " + fmt(r.fit_stderr, 2) +
                  ") vs theoretical " + fmt(r.theoretical_exponent) + ", tolerance " + fmt(r.tolerance, 3) + ", d=" +
                  std::to_string(r.d);
  if (r.degenerate) s += ", degenerate fit";
  if (r.trend_inversions > 1) s += ", " + std::to_string(r.trend_inversions) + " trend inversions";
  out.summary = s + (r.pass ? " -> PASS" : " -> FAIL");
  return out;
}

// ---------------------------------------------------------------- effdim

inline Outcome run_effdim(const json& doc, const Writer& w) {
  const auto c = config::effdim_config(doc);
  Outcome out;
  out.config = doc;
  Vec spectrum;
  std::string id;
  std::optional<SpectralProblem> problem;
  if (c.spectrum_exponent) {
    spectrum.resize(c.d);
    for (int j = 0; j < c.d; ++j) spectrum[j] = std::pow(static_cast<double>(j + 1), -*c.spectrum_exponent);
    id = "j^-" + fmt(*c.spectrum_exponent);
  } else {
    problem = config::problem_of(*c.problem, c.d);
    spectrum = problem->t();
    id = "problem";
  }
  const EffDimCurve curve = effdim_curve(spectrum, c.lambda_lo, c.lambda_hi, c.per_decade, id);
  const EffDimFit fit = fit_effdim_exponent(spectrum, c.lambda_lo, c.lambda_hi, curve.lambdas.size());
  bool pass = true;
  json report{{"spectrum", id},
              {"d", spectrum.size()},
              {"lambda_lo", c.lambda_lo},
              {"lambda_hi", c.lambda_hi},
              {"b_hat", fit.b_hat},
              {"b_stderr", fit.b_stderr},
              {"c_hat", fit.c_hat},
              {"max_log_residual", fit.max_log_residual},
              {"poor_power_fit", fit.poor_power_fit}};
  std::string s = "effdim: b_hat " + fmt(fit.b_hat) + " (stderr " + fmt(fit.b_stderr, 2) + ")";
  if (c.expected_b) {
    const bool ok = std::abs(fit.b_hat - *c.expected_b) <= c.tolerance;
    report["expected_b"] = *c.expected_b;
    report["tolerance"] = c.tolerance;
    s += " vs expected " + fmt(*c.expected_b) + " +/- " + fmt(c.tolerance, 3);
    pass = pass && ok;
  }
  if (problem) {
    const auto grid = logspace_per_decade(c.relation_lo, c.relation_hi, c.per_decade);
    const auto rel =
        check_effdim_relation(*problem, IndexFunction::power(problem->smoothness->a_link), grid, c.relation_ceiling);
    report["relation"] = {{"max_ratio", rel.max_ratio}, {"ceiling", rel.ceiling}, {"skipped", rel.skipped}, {"pass", rel.pass}};
    s += "; relation max ratio " + fmt(rel.max_ratio) + " (ceiling " + fmt(rel.ceiling) + ")";
    pass = pass && rel.pass;
  }
  report["pass"] = pass;
  w.put("effdim.csv", io::effdim_csv(curve), out);
  w.put("effdim.json", io::dump(report), out);
  w.put("effdim.svg",
        io::svg_loglog({io::SvgSeries{curve.lambdas, curve.values, "#1f77b4", "N(lambda)", false, false}},
                       "Effective dimension", "lambda", "N(lambda)"),
        out);
  out.pass = pass;
  out.summary = s + (pass ? " -> PASS" : " -> FAIL");
  return out;
}

// ---------------------------------------------------------------- bounds

inline Outcome run_bounds(const json& doc, const Writer& w) {
  const auto c = config::bounds_config(doc);
  const SpectralProblem p = config::problem_of(c.problem, 128);
  const Vec t = p.t();
  CoverageOptions opt;
  opt.seed = c.seed;
  opt.trials = c.trials;
  opt.threads = c.threads;
  opt.s = c.s;
  opt.zeta = IndexFunction::power(c.zeta_exponent);
  std::vector<BoundCheckReport> reports;
  for (std::size_t m : c.m_values) {
    const double lam = c.lambda ? *c.lambda : lambda_balance_effdim(t, m).lambda;
    const auto batch = montecarlo_coverage_batch(p, c.quantities, lam, m, c.etas, opt);
    reports.insert(reports.end(), batch.begin(), batch.end());
  }
  Outcome out;
  out.config = doc;
  out.seed = c.seed;
  std::size_t checked = 0, passed = 0, outside = 0;
  double worst = 1.0;
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back(io::to_json(r));
    if (!r.in_hypothesis) {
      ++outside;
      continue;
    }
    ++checked;
    if (r.pass) ++passed;
    worst = std::min(worst, r.coverage - (1.0 - r.eta));
  }
  w.put("bounds.csv", io::bounds_csv(reports), out);
  w.put("bounds.json", io::dump(arr), out);
  out.pass = checked > 0 && passed == checked;
  out.summary = "bounds: " + std::to_string(passed) + "/" + std::to_string(checked) +
                " coverage checks hold, worst margin " + fmt(worst, 3) +
                (outside ? ", " + std::to_string(outside) + " out of hypothesis" : std::string()) +
                (out.pass ? " -> PASS" : " -> FAIL");
  return out;
}

// ---------------------------------------------------------------- distance

inline Outcome run_distance(const json& doc, const Writer& w) {
  const auto c = config::distance_config(doc);
  const SpectralProblem p = config::problem_of(c.problem, 256);
  const auto Rs = logspace(c.R_lo, c.R_hi, c.n_points);
  const DistanceCurve curve = distance_curve(p, Rs, c.kind, c.q);
  Outcome out;
  out.config = doc;

  bool monotone = true;
  for (std::size_t i = 1; i < curve.values.size(); ++i)
    monotone = monotone && curve.values[i] <= curve.values[i - 1] * (1.0 + 1e-9) + 1e-15;
  bool zero_iff = true;
  bool dominated = true;
  std::size_t bound_cells = 0;
  if (c.kind == DistanceKind::D) {
    const double lf = p.u_true().norm();
    for (std::size_t i = 0; i < Rs.size(); ++i) {
      const bool zero = curve.values[i] == 0.0;
      zero_iff = zero_iff && (zero == (Rs[i] >= lf));
      if (c.problem.r < 1.0 && Rs[i] >= c.problem.R_dagger) {
        const auto b = distance_bound(c.problem.r, c.problem.R_dagger, Rs[i]);
        dominated = dominated && curve.values[i] <= b.value * (1.0 + 1e-9);
        ++bound_cells;
      }
    }
  }
  out.pass = monotone && zero_iff && dominated;
  json report{{"kind", c.kind == DistanceKind::D ? "d" : "dq"},
              {"q", c.q},
              {"monotone", monotone},
              {"zero_iff_radius", zero_iff},
              {"bound_dominates", dominated},
              {"bound_cells", bound_cells},
              {"pass", out.pass}};
  w.put("distance.csv", io::distance_csv(curve), out);
  w.put("distance.json", io::dump(report), out);
  w.put("distance.svg",
        io::svg_loglog({io::SvgSeries{curve.Rs, curve.values, "#1f77b4", "d(R)", false, false}}, "Distance function",
                       "R", "d(R)"),
        out);
  out.summary = std::string("distance: nonincreasing ") + (monotone ? "yes" : "no") + ", zero exactly past ||L f|| " +
                (zero_iff ? "yes" : "no") + ", bound dominates on " + std::to_string(bound_cells) + " radii " +
                (dominated ? "yes" : "no") + (out.pass ? " -> PASS" : " -> FAIL");
  return out;
}

// ---------------------------------------------------------------- filters-check

struct FilterRow {
  std::string filter;
  RegularizationCheck reg;
  double p = 0.0;
  double gamma_p_obs = 0.0;
  double gamma_p = 0.0;
  bool pass = false;
};

inline std::vector<FilterRow> filter_rows(const config::FiltersCheckConfig& c) {
  const auto lams = logspace(c.lambda_lo, 1.0, c.lambda_points);
  const auto ts = linspace(0.0, 1.0, c.t_points);
  std::vector<FilterRow> rows;
  for (const FilterFamily& f : {FilterFamily::tikhonov(), FilterFamily::cutoff(),
                                FilterFamily::landweber(c.landweber_p, 1.0, c.nu_max)}) {
    FilterRow row;
    row.filter = to_string(f.id);
    row.reg = check_regularization_constants(f, lams, ts, c.tol);
    // Infinite qualification is probed at the largest finite power used elsewhere.
    row.p = f.infinite_qualification() ? 4.0 : f.qualification_p;
    row.gamma_p = f.gamma_p;
    row.gamma_p_obs = check_qualification(f, row.p, lams, ts);
    row.pass = row.reg.pass && row.gamma_p_obs <= f.gamma_p + c.tol;
    rows.push_back(row);
  }
  return rows;
}

inline Outcome run_filters_check(const json& doc, const Writer& w) {
  const auto c = config::filters_check_config(doc);
  Outcome out;
  out.config = doc.is_null() ? json::object() : doc;
  const auto rows = filter_rows(c);
  const auto lams = logspace(c.lambda_lo, 1.0, c.lambda_points);
  const auto ts = linspace(0.0, 1.0, c.t_points);
  const double saturation = check_qualification(FilterFamily::tikhonov(), c.saturation_p, lams, ts);
  const bool saturated = saturation > c.saturation_min;

  const auto prop_t = check_prop_regularization(FilterFamily::tikhonov(), IndexFunction::power(0.5), lams, ts, c.tol);
  const auto prop_c = check_prop_regularization(FilterFamily::cutoff(), IndexFunction::power(1.0), lams, ts, c.tol);

  std::string csv = "filter,D,D_obs,B,B_obs,gamma,gamma_obs,p,gamma_p,gamma_p_obs,pass\n";
  std::ostringstream table;
  table << "filter      D_obs/D         B_obs/B         gamma_obs/gamma  p     gamma_p_obs/gamma_p\n";
  bool pass = true;
  for (const auto& r : rows) {
    const FilterFamily f = r.filter == "tikhonov" ? FilterFamily::tikhonov()
                           : r.filter == "cutoff"  ? FilterFamily::cutoff()
                                                   : FilterFamily::landweber(c.landweber_p, 1.0, c.nu_max);
    csv += r.filter + "," + io::fmt17(f.D) + "," + io::fmt17(r.reg.D_obs) + "," + io::fmt17(f.B) + "," +
           io::fmt17(r.reg.B_obs) + "," + io::fmt17(f.gamma) + "," + io::fmt17(r.reg.gamma_obs) + "," +
           io::fmt17(r.p) + "," + io::fmt17(r.gamma_p) + "," + io::fmt17(r.gamma_p_obs) + "," +
           (r.pass ? "true" : "false") + "\n";
    char line[200];
    std::snprintf(line, sizeof line, "%-11s %.4f/%-8.4g %.4f/%-8.4g %.4f/%-9.4g %-5.3g %.4f/%.4g %s\n", r.filter.c_str(),
                  r.reg.D_obs, f.D, r.reg.B_obs, f.B, r.reg.gamma_obs, f.gamma, r.p, r.gamma_p_obs, r.gamma_p,
                  r.pass ? "ok" : "VIOLATED");
    table << line;
    pass = pass && r.pass;
  }
  table << "tikhonov saturation: gamma_" << fmt(c.saturation_p) << " envelope " << fmt(saturation) << " (must exceed "
        << fmt(c.saturation_min) << ")\n";
  table << "prop tikhonov phi=t^0.5: " << fmt(prop_t.max_ratio_1) << " <= " << fmt(prop_t.bound_1) << ", "
        << fmt(prop_t.max_ratio_2) << " <= " << fmt(prop_t.bound_2) << "\n";
  table << "prop cutoff phi=t: " << fmt(prop_c.max_ratio_1) << " <= " << fmt(prop_c.bound_1) << ", "
        << fmt(prop_c.max_ratio_2) << " <= " << fmt(prop_c.bound_2) << "\n";
  pass = pass && saturated && prop_t.pass && prop_c.pass;

  json report{{"saturation_p", c.saturation_p},
              {"tikhonov_saturation_envelope", saturation},
              {"saturated", saturated},
              {"prop_tikhonov", {{"max_ratio_1", prop_t.max_ratio_1}, {"bound_1", prop_t.bound_1},
                                 {"max_ratio_2", prop_t.max_ratio_2}, {"bound_2", prop_t.bound_2}, {"pass", prop_t.pass}}},
              {"prop_cutoff", {{"max_ratio_1", prop_c.max_ratio_1}, {"bound_1", prop_c.bound_1},
                               {"max_ratio_2", prop_c.max_ratio_2}, {"bound_2", prop_c.bound_2}, {"pass", prop_c.pass}}},
              {"pass", pass}};
  w.put("filters_check.csv", csv, out);
  w.put("filters_check.json", io::dump(report), out);
  out.details = table.str();
  out.pass = pass;
  out.summary = std::string("filters-check: declared constants ") + (pass ? "hold" : "violated") +
                ", tikhonov gamma_2 envelope " + fmt(saturation) + (pass ? " -> PASS" : " -> FAIL");
  return out;
}

// ---------------------------------------------------------------- decompose

inline Outcome run_decompose(const json& doc, const Writer& w) {
  const auto c = config::decompose_config(doc);
  const Kernel k = c.kernel == KernelId::K1 ? Kernel::k1() : Kernel::k2();
  const MercerResult res = mercer_decompose(k, c.grid_n);
  Outcome out;
  out.config = doc;
  const bool k2 = c.kernel == KernelId::K2;
  std::string csv = k2 ? "k,eigenvalue,reference\n" : "k,eigenvalue\n";
  double worst_rel = 0.0;
  for (int i = 0; i < c.n_eigen; ++i) {
    const double ev = res.eigenvalues[i];
    csv += std::to_string(i + 1) + "," + io::fmt17(ev);
    if (k2) {
      const double ref = 1.0 / std::pow((i + 1) * std::numbers::pi, 2.0);
      csv += "," + io::fmt17(ref);
      if (i < c.k2_check_count) worst_rel = std::max(worst_rel, std::abs(ev - ref) / ref);
    }
    csv += "\n";
  }
  json report{{"kernel", k2 ? "K2" : "K1"},
              {"kernel_formula", k2 ? "min(x,y) - x*y" : "x*y + exp(-8 (x-y)^2)"},
              {"grid_n", c.grid_n},
              {"reconstruction_error", res.reconstruction_error},
              {"kernel_max", res.kernel_max},
              {"clamped", res.clamped}};
  std::string s;
  if (k2) {
    out.pass = worst_rel <= c.k2_rel_tol;
    report["max_rel_error"] = worst_rel;
    s = "decompose: K2 eigenvalues vs 1/(k pi)^2 for k <= " + std::to_string(c.k2_check_count) + ", max rel error " +
        fmt(worst_rel, 3) + " (tol " + fmt(c.k2_rel_tol, 3) + ")";
  } else {
    const double ratio = res.eigenvalues[9] / res.eigenvalues[1];
    out.pass = ratio < c.k1_ratio_max;
    report["ratio_10_2"] = ratio;
    s = "decompose: K1 lambda_10/lambda_2 = " + fmt(ratio, 4) + " (must be < " + fmt(c.k1_ratio_max, 3) + ")";
  }
  report["pass"] = out.pass;
  w.put("eigenvalues.csv", csv, out);
  w.put("decompose.json", io::dump(report), out);
  out.summary = s + (out.pass ? " -> PASS" : " -> FAIL");
  return out;
}

// ---------------------------------------------------------------- driver

inline bool command_takes_seed(const std::string& cmd) { return cmd == "rate" || cmd == "bounds"; }

inline int usage(std::ostream& err) {
  err << "usage: hsreg <rate|effdim|bounds|distance|filters-check|decompose> [--config PATH] [--out DIR] [--seed N] "
         "[--threads N] [--set key=value ...]\n";
  return kUsage;
}

/// Parses argv into Options; returns an exit code on usage errors.
inline std::optional<int> parse_args(int argc, const char* const* argv, Options& opt, std::ostream& err) {
  if (argc < 2) return usage(err);
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h") {
    usage(std::cout);
    return kPass;
  }
  if (cmd == "--version") {
    std::cout << "hsreg " << kVersion << "\n";
    return kPass;
  }
  if (std::find(commands().begin(), commands().end(), cmd) == commands().end()) {
    err << "hsreg: unknown command '" << cmd << "'\n";
    return usage(err);
  }
  opt.command = cmd;
  CLI::App app("hsreg " + cmd);
  app.add_option("--config", opt.config_path, "JSON configuration file");
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--threads", opt.threads, "worker cap (0: all cores)");
  app.add_option("--set", opt.overrides, "override key=value (dotted path)")->take_all();
  std::vector<std::string> rest(argv + 2, argv + argc);
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "hsreg: " << e.what() << "\n";
    return kUsage;
  }
  return std::nullopt;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options opt;
  if (auto code = parse_args(argc, argv, opt, err)) return *code;

  json doc;
  try {
    if (opt.config_path.empty()) {
      if (opt.command != "filters-check") throw config::ConfigError("", "--config is required for " + opt.command);
    } else {
      if (!std::filesystem::exists(opt.config_path))
        throw config::ConfigError("", "config file not found: " + opt.config_path);
      doc = config::parse_document(io::read_file(opt.config_path));
    }
    if (command_takes_seed(opt.command)) {
      if (opt.seed) config::apply_override(doc, "seed=" + std::to_string(*opt.seed));
      if (opt.threads) config::apply_override(doc, "threads=" + std::to_string(*opt.threads));
    }
    for (const auto& o : opt.overrides) config::apply_override(doc, o);
  } catch (const config::ConfigError& e) {
    err << "hsreg: config error at " << e.what() << "\n";
    return kBadConfig;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Outcome res;
  try {
    std::filesystem::create_directories(opt.out_dir);
    const Writer w(opt.out_dir);
    if (opt.command == "rate") res = run_rate(doc, w);
    else if (opt.command == "effdim") res = run_effdim(doc, w);
    else if (opt.command == "bounds") res = run_bounds(doc, w);
    else if (opt.command == "distance") res = run_distance(doc, w);
    else if (opt.command == "filters-check") res = run_filters_check(doc, w);
    else res = run_decompose(doc, w);

    const std::string canon = res.config.dump();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(opt.command + "\n" + canon)));
    res.outputs.push_back("manifest.json");
    const json manifest{{"command", opt.command},
                        {"config_hash", hash},
                        {"seed", opt.seed ? *opt.seed : res.seed},
                        {"threads", opt.threads ? *opt.threads : 0u},
                        {"versions", versions()},
                        {"outputs", res.outputs},
                        {"config", res.config}};
    io::write_file((std::filesystem::path(opt.out_dir) / "manifest.json").string(), io::dump(manifest));
  } catch (const config::ConfigError& e) {
    err << "hsreg: config error at " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    err << "hsreg: error: " << e.what() << "\n";
    return kError;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << res.details << res.summary << " [" << fmt(secs, 3) << " s]\n";
  return res.pass ? kPass : kFail;
}

}  // namespace hsreg::cli
