#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hsreg/error.hpp"

namespace hsreg {

/// Index functions used for source conditions, link conditions and
/// interpolation norms:
///   Power(e)        t -> t^e
///   Log(p, nu)      t -> t^p * log(1/t)^(-nu)      (defined for 0 <= t < 1)
///   Product(f, g)   t -> f(t) g(t)
///
/// The value type is cheap to copy; products hold their factors by value.
class IndexFunction {
 public:
  enum class Kind { Power, Log, Product };

  static IndexFunction power(double exponent) {
    IndexFunction f;
    f.kind_ = Kind::Power;
    f.p_ = exponent;
    return f;
  }

  static IndexFunction log_type(double p, double nu) {
    IndexFunction f;
    f.kind_ = Kind::Log;
    f.p_ = p;
    f.nu_ = nu;
    return f;
  }

  static IndexFunction product(IndexFunction a, IndexFunction b) {
    IndexFunction f;
    f.kind_ = Kind::Product;
    f.factors_.push_back(std::move(a));
    f.factors_.push_back(std::move(b));
    return f;
  }

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return p_; }
  double log_power() const noexcept { return nu_; }
  std::span<const IndexFunction> factors() const noexcept { return factors_; }

  /// Exponent e when the function is exactly t^e.
  std::optional<double> power_exponent() const {
    if (kind_ == Kind::Power) return p_;
    if (kind_ == Kind::Log && nu_ == 0.0) return p_;
    if (kind_ == Kind::Product) {
      double e = 0.0;
      for (const auto& f : factors_) {
        auto fe = f.power_exponent();
        if (!fe) return std::nullopt;
        e += *fe;
      }
      return e;
    }
    return std::nullopt;
  }

  double operator()(double t) const {
    if (t < 0.0) throw domain_error("index function evaluated at negative argument");
    switch (kind_) {
      case Kind::Power:
        if (t == 0.0) return p_ > 0.0 ? 0.0 : (p_ == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
        return std::pow(t, p_);
      case Kind::Log: {
        if (t == 0.0) {
          if (p_ > 0.0 || (p_ == 0.0 && nu_ > 0.0)) return 0.0;
          return std::numeric_limits<double>::infinity();
        }
        if (t >= 1.0) throw domain_error("log-type index function requires t < 1");
        return std::pow(t, p_) * std::pow(std::log(1.0 / t), -nu_);
      }
      case Kind::Product: {
        double v = 1.0;
        for (const auto& f : factors_) v *= f(t);
        return v;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// The companion t -> t / phi(t). Supported for power and log kinds.
  IndexFunction identity_quotient() const {
    switch (kind_) {
      case Kind::Power:
        return power(1.0 - p_);
      case Kind::Log:
        return log_type(1.0 - p_, -nu_);
      case Kind::Product:
        break;
    }
    throw domain_error("t/phi(t) is not representable for product index functions");
  }

  /// phi^k for a power or log function.
  IndexFunction raised(double k) const {
    switch (kind_) {
      case Kind::Power:
        return power(p_ * k);
      case Kind::Log:
        return log_type(p_ * k, nu_ * k);
      case Kind::Product: {
        IndexFunction f;
        f.kind_ = Kind::Product;
        for (const auto& g : factors_) f.factors_.push_back(g.raised(k));
        return f;
      }
    }
    return *this;
  }

  /// Strictly increasing on the (sorted) grid and vanishing at 0.
  bool is_index_function_on(std::span<const double> grid) const {
    if ((*this)(0.0) != 0.0) return false;
    double prev = 0.0;
    bool first = true;
    for (double t : grid) {
      if (t <= 0.0) continue;
      const double v = (*this)(t);
      if (!std::isfinite(v) || v <= 0.0) return false;
      if (!first && !(v > prev)) return false;
      prev = v;
      first = false;
    }
    return true;
  }

  /// Nondecreasing on the grid.
  bool is_nondecreasing_on(std::span<const double> grid) const {
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : grid) {
      const double v = (*this)(t);
      if (v < prev * (1.0 - 1e-12) - 1e-300) return false;
      prev = v;
    }
    return true;
  }

  /// t / phi(t) nondecreasing on the positive part of the grid.
  bool is_sublinear_on(std::span<const double> grid) const {
    double prev = 0.0;
    for (double t : grid) {
      if (t <= 0.0) continue;
      const double ratio = t / (*this)(t);
      if (ratio < prev * (1.0 - 1e-12)) return false;
      prev = ratio;
    }
    return true;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::Power:
        os << "t^" << p_;
        break;
      case Kind::Log:
        os << "t^" << p_ << "*log(1/t)^" << -nu_;
        break;
      case Kind::Product:
        for (std::size_t i = 0; i < factors_.size(); ++i) {
          if (i) os << " * ";
          os << "(" << factors_[i].describe() << ")";
        }
        break;
    }
    return os.str();
  }

 private:
  Kind kind_ = Kind::Power;
  double p_ = 1.0;
  double nu_ = 0.0;
  std::vector<IndexFunction> factors_;
};

}  // namespace hsreg
