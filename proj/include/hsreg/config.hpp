#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsreg/diagnostics_bounds.hpp"
#include "hsreg/experiment_harness.hpp"
#include "hsreg/mercer.hpp"

namespace hsreg::config {

using json = nlohmann::ordered_json;

/// Malformed or missing configuration. `pointer` is a JSON pointer to the
/// offending field ("" for the whole document).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

inline std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

/// Read-only view of an object node that remembers its JSON pointer and
/// reports unknown keys.
class Node {
 public:
  Node(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) throw ConfigError(ptr_, "expected an object");
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + escape_token(key); }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(at(key), "required field is missing");
    return j_.at(key);
  }

  Node child(const std::string& key) const { return Node(raw(key), at(key)); }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double dflt) const { return has(key) ? number(key) : dflt; }

  std::int64_t integer(const std::string& key) const {
    const json& v = raw(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(at(key), "expected an integer");
  }
  std::int64_t integer(const std::string& key, std::int64_t dflt) const { return has(key) ? integer(key) : dflt; }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const std::int64_t i = integer(key);
    if (i < 0) throw ConfigError(at(key), "expected a nonnegative integer");
    return static_cast<std::uint64_t>(i);
  }

  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& dflt) const { return has(key) ? string(key) : dflt; }

  bool boolean(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  std::vector<std::size_t> sizes(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of positive integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() <= 0)
        throw ConfigError(at(key) + "/" + std::to_string(i), "expected a positive integer");
      out.push_back(static_cast<std::size_t>(v[i].get<std::int64_t>()));
    }
    return out;
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) throw ConfigError(at(k), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string ptr_;
};

template <class E, class Parse>
E enum_field(const Node& n, const std::string& key, E dflt, Parse parse) {
  if (!n.has(key)) return dflt;
  const auto v = parse(n.string(key));
  if (!v) throw ConfigError(n.at(key), "unrecognized value '" + n.string(key) + "'");
  return *v;
}

/// Applies "a.b.c=value". The value is parsed as JSON when possible and kept
/// as a string otherwise. Array elements are addressed by index.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("", "override must look like key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* cur = &doc;
  std::string ptr;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(ptr, "empty key in override path " + path);
    ptr += "/" + escape_token(key);
    json* next = nullptr;
    if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ConfigError(ptr, "array index expected");
      }
      if (idx >= cur->size()) throw ConfigError(ptr, "array index out of range");
      next = &(*cur)[idx];
    } else {
      if (cur->is_null()) *cur = json::object();
      if (!cur->is_object()) throw ConfigError(ptr, "cannot descend into a scalar");
      next = &(*cur)[key];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    cur = next;
    start = dot + 1;
  }
}

inline json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------- problem

inline ProblemSpec problem_spec(const Node& n) {
  n.allow_only({"s", "a_link", "r", "q", "R_dagger", "sigma", "d", "v_pattern", "v_seed"});
  ProblemSpec p;
  p.s = n.number("s", p.s);
  p.a_link = n.number("a_link", p.a_link);
  p.r = n.number("r", p.r);
  p.q = n.number("q", p.q);
  p.R_dagger = n.number("R_dagger", p.R_dagger);
  p.sigma = n.number("sigma", p.sigma);
  p.d = static_cast<int>(n.integer("d", 0));
  p.v_pattern.kind = enum_field(n, "v_pattern", p.v_pattern.kind, parse_v_pattern);
  p.v_pattern.seed = n.unsigned_integer("v_seed", 0);
  if (!(p.s > 0.0)) throw ConfigError(n.at("s"), "must be positive");
  if (!(p.a_link > 0.0 && p.a_link <= 0.5)) throw ConfigError(n.at("a_link"), "must lie in (0, 1/2]");
  if (!(p.r > 0.0)) throw ConfigError(n.at("r"), "must be positive");
  if (!(p.q >= 1.0)) throw ConfigError(n.at("q"), "must be >= 1");
  if (!(p.R_dagger > 0.0)) throw ConfigError(n.at("R_dagger"), "must be positive");
  if (!(p.sigma >= 0.0)) throw ConfigError(n.at("sigma"), "must be nonnegative");
  if (p.d != 0 && p.d < 2) throw ConfigError(n.at("d"), "must be >= 2 (or 0 for the truncation rule)");
  return p;
}

/// Problem for the single-problem commands; d defaults to `default_d`.
inline SpectralProblem problem_of(const ProblemSpec& ps, int default_d) {
  const int d = ps.d > 0 ? ps.d : default_d;
  return build_power_problem(ps.s, ps.a_link, ps.r, ps.q, ps.R_dagger, d, ps.sigma, ps.v_pattern);
}

// ---------------------------------------------------------------- rate

inline ExperimentConfig experiment_config(const json& doc) {
  const Node n(doc, "");
  n.allow_only({"problem", "filter", "landweber_p", "nu_max", "lambda_rule", "m_grid", "trials_per_m", "seed",
                "error_norm", "zeta_exponent", "case", "design", "tolerance", "expected_exponent", "threads"});
  ExperimentConfig c;
  c.problem = problem_spec(n.child("problem"));
  c.filter = enum_field(n, "filter", c.filter, parse_filter_id);
  c.landweber_p = n.number("landweber_p", c.landweber_p);
  c.nu_max = n.integer("nu_max", c.nu_max);
  if (n.has("lambda_rule")) {
    const Node lr = n.child("lambda_rule");
    lr.allow_only({"kind", "c", "scale"});
    c.lambda_rule.kind = enum_field(lr, "kind", c.lambda_rule.kind, parse_lambda_rule);
    c.lambda_rule.c = lr.number("c", c.lambda_rule.c);
    c.lambda_rule.scale = lr.number("scale", c.lambda_rule.scale);
    if (!(c.lambda_rule.c > 0.0)) throw ConfigError(lr.at("c"), "must be positive");
    if (!(c.lambda_rule.scale > 0.0)) throw ConfigError(lr.at("scale"), "must be positive");
  }
  c.m_grid = n.sizes("m_grid");
  const std::int64_t trials = n.integer("trials_per_m", static_cast<std::int64_t>(c.trials_per_m));
  if (trials < 10) throw ConfigError(n.at("trials_per_m"), "must be >= 10");
  c.trials_per_m = static_cast<std::size_t>(trials);
  c.seed = n.unsigned_integer("seed", c.seed);
  c.error_norm = enum_field(n, "error_norm", c.error_norm, parse_error_norm);
  c.zeta_exponent = n.number("zeta_exponent", c.zeta_exponent);
  c.rate_case = enum_field(n, "case", c.rate_case, parse_rate_case);
  c.design = enum_field(n, "design", c.design, parse_design);
  c.tolerance = n.number("tolerance", c.tolerance);
  if (n.has("expected_exponent")) c.expected_exponent = n.number("expected_exponent");
  const std::int64_t threads = n.integer("threads", 0);
  if (threads < 0) throw ConfigError(n.at("threads"), "must be nonnegative");
  c.threads = static_cast<unsigned>(threads);
  for (std::size_t i = 1; i < c.m_grid.size(); ++i)
    if (c.m_grid[i] <= c.m_grid[i - 1]) throw ConfigError(n.at("m_grid") + "/" + std::to_string(i), "must be strictly increasing");
  try {
    c.validate();
  } catch (const domain_error& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

inline json experiment_config_json(const ExperimentConfig& c) {
  json p{{"s", c.problem.s},
         {"a_link", c.problem.a_link},
         {"r", c.problem.r},
         {"q", c.problem.q},
         {"R_dagger", c.problem.R_dagger},
         {"sigma", c.problem.sigma},
         {"d", c.problem.d},
         {"v_pattern", to_string(c.problem.v_pattern.kind)},
         {"v_seed", c.problem.v_pattern.seed}};
  json j{{"problem", p},
         {"filter", to_string(c.filter)},
         {"landweber_p", c.landweber_p},
         {"nu_max", c.nu_max},
         {"lambda_rule", {{"kind", to_string(c.lambda_rule.kind)}, {"c", c.lambda_rule.c}, {"scale", c.lambda_rule.scale}}},
         {"m_grid", c.m_grid},
         {"trials_per_m", c.trials_per_m},
         {"seed", c.seed},
         {"error_norm", to_string(c.error_norm)},
         {"zeta_exponent", c.zeta_exponent},
         {"case", to_string(c.rate_case)},
         {"design", to_string(c.design)},
         {"tolerance", c.tolerance},
         {"threads", c.threads}};
  if (c.expected_exponent) j["expected_exponent"] = *c.expected_exponent;
  return j;
}

// ---------------------------------------------------------------- effdim

struct EffDimConfig {
  std::optional<double> spectrum_exponent;  ///< t_j = j^{-e}; otherwise the problem spectrum
  int d = 2000;
  std::optional<ProblemSpec> problem;
  double lambda_lo = 1e-5;
  double lambda_hi = 1e-2;
  std::size_t per_decade = 40;
  std::optional<double> expected_b;
  double tolerance = 0.05;
  double relation_ceiling = 8.0;
  double relation_lo = 1e-5;
  double relation_hi = 1e-1;
};

inline EffDimConfig effdim_config(const json& doc) {
  const Node n(doc, "");
  n.allow_only({"spectrum_exponent", "d", "problem", "lambda_lo", "lambda_hi", "per_decade", "expected_b", "tolerance",
                "relation_ceiling", "relation_lo", "relation_hi"});
  EffDimConfig c;
  if (n.has("spectrum_exponent")) c.spectrum_exponent = n.number("spectrum_exponent");
  c.d = static_cast<int>(n.integer("d", c.d));
  if (c.d < 1) throw ConfigError(n.at("d"), "must be positive");
  if (n.has("problem")) c.problem = problem_spec(n.child("problem"));
  if (!c.spectrum_exponent && !c.problem) throw ConfigError("", "need spectrum_exponent or problem");
  c.lambda_lo = n.number("lambda_lo", c.lambda_lo);
  c.lambda_hi = n.number("lambda_hi", c.lambda_hi);
  if (!(c.lambda_lo > 0.0 && c.lambda_lo < c.lambda_hi && c.lambda_hi <= 1.0))
    throw ConfigError(n.at("lambda_lo"), "need 0 < lambda_lo < lambda_hi <= 1");
  const std::int64_t pd = n.integer("per_decade", static_cast<std::int64_t>(c.per_decade));
  if (pd < 2) throw ConfigError(n.at("per_decade"), "must be >= 2");
  c.per_decade = static_cast<std::size_t>(pd);
  if (n.has("expected_b")) c.expected_b = n.number("expected_b");
  c.tolerance = n.number("tolerance", c.tolerance);
  c.relation_ceiling = n.number("relation_ceiling", c.relation_ceiling);
  c.relation_lo = n.number("relation_lo", c.relation_lo);
  c.relation_hi = n.number("relation_hi", c.relation_hi);
  return c;
}

// ---------------------------------------------------------------- bounds

struct BoundsConfig {
  ProblemSpec problem;
  std::vector<Quantity> quantities{Quantity::Psi, Quantity::Upsilon, Quantity::LambdaQ, Quantity::TxDev};
  std::vector<double> etas{0.05, 0.1};
  std::vector<std::size_t> m_values{1024, 4096};
  std::size_t trials = 500;
  std::optional<double> lambda;  ///< fixed lambda; otherwise the balance rule per m
  double s = 0.5;
  double zeta_exponent = 0.5;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

inline BoundsConfig bounds_config(const json& doc) {
  const Node n(doc, "");
  n.allow_only({"problem", "quantities", "etas", "m_values", "trials", "lambda", "s", "zeta_exponent", "seed", "threads"});
  BoundsConfig c;
  c.problem = problem_spec(n.child("problem"));
  if (c.problem.d == 0) c.problem.d = 128;
  if (n.has("quantities")) {
    c.quantities.clear();
    const auto names = n.strings("quantities");
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto q = parse_quantity(names[i]);
      if (!q) throw ConfigError(n.at("quantities") + "/" + std::to_string(i), "unknown quantity");
      c.quantities.push_back(*q);
    }
  }
  if (n.has("etas")) c.etas = n.numbers("etas");
  for (std::size_t i = 0; i < c.etas.size(); ++i)
    if (!(c.etas[i] > 0.0 && c.etas[i] < 1.0)) throw ConfigError(n.at("etas") + "/" + std::to_string(i), "must lie in (0, 1)");
  if (n.has("m_values")) c.m_values = n.sizes("m_values");
  const std::int64_t trials = n.integer("trials", static_cast<std::int64_t>(c.trials));
  if (trials < 100) throw ConfigError(n.at("trials"), "must be >= 100");
  c.trials = static_cast<std::size_t>(trials);
  if (n.has("lambda")) {
    c.lambda = n.number("lambda");
    if (!(*c.lambda > 0.0)) throw ConfigError(n.at("lambda"), "must be positive");
  }
  c.s = n.number("s", c.s);
  c.zeta_exponent = n.number("zeta_exponent", c.zeta_exponent);
  c.seed = n.unsigned_integer("seed", c.seed);
  c.threads = static_cast<unsigned>(n.unsigned_integer("threads", 0));
  return c;
}

// ---------------------------------------------------------------- distance

struct DistanceConfig {
  ProblemSpec problem;
  DistanceKind kind = DistanceKind::D;
  double q = 2.0;
  double R_lo = 0.01;
  double R_hi = 10.0;
  std::size_t n_points = 60;
};

inline DistanceConfig distance_config(const json& doc) {
  const Node n(doc, "");
  n.allow_only({"problem", "kind", "q", "R_lo", "R_hi", "n_points"});
  DistanceConfig c;
  c.problem = problem_spec(n.child("problem"));
  if (c.problem.d == 0) c.problem.d = 256;
  const std::string kind = n.string("kind", "d");
  if (kind == "d") c.kind = DistanceKind::D;
  else if (kind == "dq") c.kind = DistanceKind::DQ;
  else throw ConfigError(n.at("kind"), "expected \"d\" or \"dq\"");
  c.q = n.number("q", c.q);
  if (c.kind == DistanceKind::DQ && !(c.q > 1.0)) throw ConfigError(n.at("q"), "must exceed 1");
  c.R_lo = n.number("R_lo", c.R_lo);
  c.R_hi = n.number("R_hi", c.R_hi);
  if (!(c.R_lo > 0.0 && c.R_lo < c.R_hi)) throw ConfigError(n.at("R_lo"), "need 0 < R_lo < R_hi");
  const std::int64_t np = n.integer("n_points", static_cast<std::int64_t>(c.n_points));
  if (np < 2) throw ConfigError(n.at("n_points"), "must be >= 2");
  c.n_points = static_cast<std::size_t>(np);
  return c;
}

// ---------------------------------------------------------------- filters-check

struct FiltersCheckConfig {
  double landweber_p = 2.0;
  std::int64_t nu_max = 1000000;
  double lambda_lo = 1e-6;
  std::size_t lambda_points = 400;
  std::size_t t_points = 1000;
  double tol = 1e-9;
  double saturation_p = 2.0;
  double saturation_min = 10.0;
};

inline FiltersCheckConfig filters_check_config(const json& doc) {
  FiltersCheckConfig c;
  if (doc.is_null()) return c;
  const Node n(doc, "");
  n.allow_only({"landweber_p", "nu_max", "lambda_lo", "lambda_points", "t_points", "tol", "saturation_p", "saturation_min"});
  c.landweber_p = n.number("landweber_p", c.landweber_p);
  c.nu_max = n.integer("nu_max", c.nu_max);
  c.lambda_lo = n.number("lambda_lo", c.lambda_lo);
  if (!(c.lambda_lo > 0.0 && c.lambda_lo < 1.0)) throw ConfigError(n.at("lambda_lo"), "must lie in (0, 1)");
  c.lambda_points = static_cast<std::size_t>(n.integer("lambda_points", static_cast<std::int64_t>(c.lambda_points)));
  c.t_points = static_cast<std::size_t>(n.integer("t_points", static_cast<std::int64_t>(c.t_points)));
  if (c.lambda_points < 2) throw ConfigError(n.at("lambda_points"), "must be >= 2");
  if (c.t_points < 2) throw ConfigError(n.at("t_points"), "must be >= 2");
  c.tol = n.number("tol", c.tol);
  c.saturation_p = n.number("saturation_p", c.saturation_p);
  c.saturation_min = n.number("saturation_min", c.saturation_min);
  return c;
}

// ---------------------------------------------------------------- decompose

struct DecomposeConfig {
  KernelId kernel = KernelId::K2;
  int grid_n = 256;
  int n_eigen = 10;
  double k2_rel_tol = 0.01;
  int k2_check_count = 5;
  double k1_ratio_max = 1e-6;
};

inline DecomposeConfig decompose_config(const json& doc) {
  const Node n(doc, "");
  n.allow_only({"kernel", "grid_n", "n_eigen", "k2_rel_tol", "k2_check_count", "k1_ratio_max"});
  DecomposeConfig c;
  c.kernel = enum_field(n, "kernel", c.kernel, parse_kernel_id);
  c.grid_n = static_cast<int>(n.integer("grid_n", c.grid_n));
  if (c.grid_n < 16) throw ConfigError(n.at("grid_n"), "must be >= 16");
  c.n_eigen = static_cast<int>(n.integer("n_eigen", c.n_eigen));
  if (c.n_eigen < 1 || c.n_eigen > c.grid_n) throw ConfigError(n.at("n_eigen"), "must lie in [1, grid_n]");
  c.k2_rel_tol = n.number("k2_rel_tol", c.k2_rel_tol);
  c.k2_check_count = static_cast<int>(n.integer("k2_check_count", c.k2_check_count));
  c.k1_ratio_max = n.number("k1_ratio_max", c.k1_ratio_max);
  if (c.kernel == KernelId::K1 && c.n_eigen < 10) c.n_eigen = 10;
  return c;
}

}  // namespace hsreg::config
