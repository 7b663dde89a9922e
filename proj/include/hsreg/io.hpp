#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsreg/diagnostics_bounds.hpp"
#include "hsreg/effective_dimension.hpp"
#include "hsreg/error.hpp"
#include "hsreg/experiment_harness.hpp"
#include "hsreg/sampling_estimator.hpp"
#include "hsreg/smoothness_distance.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg::io {

using json = nlohmann::ordered_json;

/// Shortest text that parses back to the same double ("%.17g").
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw domain_error("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw domain_error("trailing characters in number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// NaN and infinities are emitted as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double num_of(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_of(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- problem

inline json to_json(const SpectralProblem& p) {
  json j;
  j["d"] = p.d;
  j["basis"] = "cosine";
  j["a"] = vec_json(p.a);
  j["l"] = vec_json(p.l);
  j["f_true"] = vec_json(p.f_true);
  j["noise"] = {{"sigma", p.noise.sigma}, {"M", p.noise.M}, {"Sigma", p.noise.Sigma}};
  if (p.smoothness) {
    const auto& s = *p.smoothness;
    j["smoothness"] = {{"r", s.r}, {"a_link", s.a_link}, {"q", s.q}, {"R_dagger", s.R_dagger}, {"s", s.s}};
  } else {
    j["smoothness"] = nullptr;
  }
  return j;
}

inline SpectralProblem problem_from_json(const json& j) {
  SpectralProblem p;
  p.d = j.at("d").get<int>();
  if (j.at("basis").get<std::string>() != "cosine") throw domain_error("problem: unsupported basis");
  p.a = vec_of(j.at("a"));
  p.l = vec_of(j.at("l"));
  p.f_true = vec_of(j.at("f_true"));
  const auto& n = j.at("noise");
  p.noise = {n.at("sigma").get<double>(), n.at("M").get<double>(), n.at("Sigma").get<double>()};
  if (j.contains("smoothness") && !j.at("smoothness").is_null()) {
    const auto& s = j.at("smoothness");
    p.smoothness = SmoothnessSpec{s.at("r").get<double>(), s.at("a_link").get<double>(), s.at("q").get<double>(),
                                  s.at("R_dagger").get<double>(), s.at("s").get<double>()};
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------- dataset / estimate

inline std::string dataset_csv(const Dataset& ds) {
  std::string out = "x,y\n";
  for (std::size_t i = 0; i < ds.m(); ++i) out += fmt15(ds.x[i]) + "," + fmt15(ds.y[i]) + "\n";
  return out;
}

inline Dataset dataset_from_csv(const std::string& text) {
  Dataset ds;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (line != "x,y") throw domain_error("dataset csv: expected header x,y");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2) throw domain_error("dataset csv: expected two fields");
    ds.x.push_back(parse_double(f[0]));
    ds.y.push_back(parse_double(f[1]));
  }
  return ds;
}

inline json to_json(const Estimate& e) {
  return json{{"lambda", e.lambda}, {"filter", to_string(e.filter)}, {"f_hat", vec_json(e.f_hat)}};
}

// ---------------------------------------------------------------- curves

inline std::string effdim_csv(const EffDimCurve& c) {
  std::string out = "lambda,n_effective\n";
  for (std::size_t i = 0; i < c.lambdas.size(); ++i) out += fmt17(c.lambdas[i]) + "," + fmt17(c.values[i]) + "\n";
  return out;
}

inline std::string distance_csv(const DistanceCurve& c) {
  std::string out = "R,d_value\n";
  for (std::size_t i = 0; i < c.Rs.size(); ++i) out += fmt17(c.Rs[i]) + "," + fmt17(c.values[i]) + "\n";
  return out;
}

// ---------------------------------------------------------------- bound checks

inline json to_json(const BoundCheckReport& r) {
  return json{{"quantity", to_string(r.quantity)},
              {"lambda", num(r.lambda)},
              {"m", r.m},
              {"eta", num(r.eta)},
              {"trials", r.trials},
              {"empirical_quantile", num(r.empirical_quantile)},
              {"bound_value", num(r.bound_value)},
              {"coverage", num(r.coverage)},
              {"pass", r.pass},
              {"in_hypothesis", r.in_hypothesis}};
}

inline BoundCheckReport bound_report_from_json(const json& j) {
  BoundCheckReport r;
  const auto q = parse_quantity(j.at("quantity").get<std::string>());
  if (!q) throw domain_error("bound report: unknown quantity");
  r.quantity = *q;
  r.lambda = num_of(j.at("lambda"));
  r.m = j.at("m").get<std::size_t>();
  r.eta = num_of(j.at("eta"));
  r.trials = j.at("trials").get<std::size_t>();
  r.empirical_quantile = num_of(j.at("empirical_quantile"));
  r.bound_value = num_of(j.at("bound_value"));
  r.coverage = num_of(j.at("coverage"));
  r.pass = j.at("pass").get<bool>();
  r.in_hypothesis = j.at("in_hypothesis").get<bool>();
  return r;
}

inline std::string bounds_csv(const std::vector<BoundCheckReport>& rs) {
  std::string out = "quantity,lambda,m,eta,trials,quantile,bound,coverage\n";
  for (const auto& r : rs) {
    out += std::string(to_string(r.quantity)) + "," + fmt17(r.lambda) + "," + std::to_string(r.m) + "," +
           fmt17(r.eta) + "," + std::to_string(r.trials) + "," + fmt17(r.empirical_quantile) + "," +
           fmt17(r.bound_value) + "," + fmt17(r.coverage) + "\n";
  }
  return out;
}

inline std::vector<BoundCheckReport> bounds_from_csv(const std::string& text) {
  std::vector<BoundCheckReport> out;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (line != "quantity,lambda,m,eta,trials,quantile,bound,coverage") throw domain_error("bounds csv: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw domain_error("bounds csv: expected eight fields");
    BoundCheckReport r;
    const auto q = parse_quantity(f[0]);
    if (!q) throw domain_error("bounds csv: unknown quantity");
    r.quantity = *q;
    r.lambda = parse_double(f[1]);
    r.m = std::stoull(f[2]);
    r.eta = parse_double(f[3]);
    r.trials = std::stoull(f[4]);
    r.empirical_quantile = parse_double(f[5]);
    r.bound_value = parse_double(f[6]);
    r.coverage = parse_double(f[7]);
    r.pass = r.coverage >= 1.0 - r.eta;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------- rate report

inline json to_json(const RateReport& r) {
  json cells = json::array();
  for (const auto& c : r.per_m) {
    cells.push_back(json{{"m", c.m},
                         {"lambda_used", num(c.lambda_used)},
                         {"mean_error", num(c.mean_error)},
                         {"median_error", num(c.median_error)},
                         {"std_error", num(c.std_error)},
                         {"lambda_flagged", c.lambda_flagged}});
  }
  return json{{"per_m", cells},
              {"fitted_exponent", num(r.fitted_exponent)},
              {"fit_stderr", num(r.fit_stderr)},
              {"theoretical_exponent", num(r.theoretical_exponent)},
              {"minimax_exponent", num(r.minimax_exponent)},
              {"tolerance", num(r.tolerance)},
              {"degenerate", r.degenerate},
              {"pass", r.pass},
              {"d", r.d},
              {"trend_inversions", r.trend_inversions},
              {"config_hash", r.config_hash}};
}

inline RateReport rate_report_from_json(const json& j) {
  RateReport r;
  for (const auto& c : j.at("per_m")) {
    RateCell cell;
    cell.m = c.at("m").get<std::size_t>();
    cell.lambda_used = num_of(c.at("lambda_used"));
    cell.mean_error = num_of(c.at("mean_error"));
    cell.median_error = num_of(c.at("median_error"));
    cell.std_error = num_of(c.at("std_error"));
    cell.lambda_flagged = c.at("lambda_flagged").get<bool>();
    r.per_m.push_back(cell);
  }
  r.fitted_exponent = num_of(j.at("fitted_exponent"));
  r.fit_stderr = num_of(j.at("fit_stderr"));
  r.theoretical_exponent = num_of(j.at("theoretical_exponent"));
  r.minimax_exponent = num_of(j.at("minimax_exponent"));
  r.tolerance = num_of(j.at("tolerance"));
  r.degenerate = j.at("degenerate").get<bool>();
  r.pass = j.at("pass").get<bool>();
  r.d = j.at("d").get<int>();
  r.trend_inversions = j.at("trend_inversions").get<std::size_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

/// Rows "m,lambda,mean,median,std" followed by "# key,value" footer lines.
inline std::string rate_csv(const RateReport& r) {
  std::string out = "m,lambda,mean,median,std\n";
  for (const auto& c : r.per_m) {
    out += std::to_string(c.m) + "," + fmt17(c.lambda_used) + "," + fmt17(c.mean_error) + "," +
           fmt17(c.median_error) + "," + fmt17(c.std_error) + "\n";
  }
  out += "# fitted_exponent," + fmt17(r.fitted_exponent) + "\n";
  out += "# fit_stderr," + fmt17(r.fit_stderr) + "\n";
  out += "# theoretical_exponent," + fmt17(r.theoretical_exponent) + "\n";
  out += "# tolerance," + fmt17(r.tolerance) + "\n";
  out += std::string("# pass,") + (r.pass ? "true" : "false") + "\n";
  return out;
}

inline RateReport rate_report_from_csv(const std::string& text) {
  RateReport r;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (line != "m,lambda,mean,median,std") throw domain_error("rate csv: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto f = split(line.substr(2), ',');
      if (f.size() != 2) throw domain_error("rate csv: bad footer line");
      if (f[0] == "fitted_exponent") r.fitted_exponent = parse_double(f[1]);
      else if (f[0] == "fit_stderr") r.fit_stderr = parse_double(f[1]);
      else if (f[0] == "theoretical_exponent") r.theoretical_exponent = parse_double(f[1]);
      else if (f[0] == "tolerance") r.tolerance = parse_double(f[1]);
      else if (f[0] == "pass") r.pass = f[1] == "true";
      else throw domain_error("rate csv: unknown footer key " + f[0]);
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 5) throw domain_error("rate csv: expected five fields");
    RateCell c;
    c.m = std::stoull(f[0]);
    c.lambda_used = parse_double(f[1]);
    c.mean_error = parse_double(f[2]);
    c.median_error = parse_double(f[3]);
    c.std_error = parse_double(f[4]);
    r.per_m.push_back(c);
  }
  return r;
}

// ---------------------------------------------------------------- SVG

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  std::string label;
  bool markers = false;
  bool dashed = false;
};

/// Log-log line plot with decade ticks.
inline std::string svg_loglog(const std::vector<SvgSeries>& series, const std::string& title, const std::string& xlabel,
                              const std::string& ylabel) {
  constexpr double W = 640, H = 440, L = 80, R = 20, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      x0 = std::min(x0, std::log10(s.x[i]));
      x1 = std::max(x1, std::log10(s.x[i]));
      y0 = std::min(y0, std::log10(s.y[i]));
      y1 = std::max(y1, std::log10(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-9) x1 = x0 + 1;
  if (y1 - y0 < 1e-9) y1 = y0 + 1;
  const double padx = 0.05 * (x1 - x0), pady = 0.08 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
  auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(x0)); e <= static_cast<int>(std::floor(x1)); ++e) {
    os << "<line x1=\"" << px(e) << "\" y1=\"" << T << "\" x2=\"" << px(e) << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << px(e) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"12\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(y0)); e <= static_cast<int>(std::floor(y1)); ++e) {
    os << "<line x1=\"" << L << "\" y1=\"" << py(e) << "\" x2=\"" << W - R << "\" y2=\"" << py(e)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
       << "font-size=\"12\">1e" << e << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"13\" transform=\"rotate(-90 18 " << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
  double ly = T + 16;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      os << px(std::log10(s.x[i])) << "," << py(std::log10(s.y[i])) << " ";
    }
    os << "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
        os << "<circle cx=\"" << px(std::log10(s.x[i])) << "\" cy=\"" << py(std::log10(s.y[i]))
           << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      }
    }
    os << "<text x=\"" << W - R - 8 << "\" y=\"" << ly << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
       << "font-size=\"12\" fill=\"" << s.color << "\">" << s.label << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
  return os.str();
}

/// Median errors with the fitted and theoretical slope lines through the
/// weighted centre of the data.
inline std::string rate_svg(const RateReport& r) {
  SvgSeries data{{}, {}, "#1f77b4", "median error", true, false};
  for (const auto& c : r.per_m) {
    data.x.push_back(static_cast<double>(c.m));
    data.y.push_back(c.median_error);
  }
  std::vector<SvgSeries> series{data};
  if (!data.x.empty()) {
    double lx = 0.0, lyv = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      if (!(data.y[i] > 0.0)) continue;
      lx += std::log(data.x[i]);
      lyv += std::log(data.y[i]);
      ++n;
    }
    if (n > 0) {
      lx /= n;
      lyv /= n;
      auto line = [&](double slope, const std::string& color, const std::string& label) {
        SvgSeries s{{}, {}, color, label, false, true};
        for (double xv : {data.x.front(), data.x.back()}) {
          s.x.push_back(xv);
          s.y.push_back(std::exp(lyv + slope * (std::log(xv) - lx)));
        }
        return s;
      };
      std::ostringstream f, t;
      f.precision(4);
      t.precision(4);
      f << "fitted slope " << r.fitted_exponent;
      t << "theoretical slope " << r.theoretical_exponent;
      if (std::isfinite(r.fitted_exponent)) series.push_back(line(r.fitted_exponent, "#d62728", f.str()));
      if (std::isfinite(r.theoretical_exponent)) series.push_back(line(r.theoretical_exponent, "#2ca02c", t.str()));
    }
  }
  return svg_loglog(series, "Convergence rate", "sample size m", "median error");
}

}  // namespace hsreg::io
