#pragma once

#include <stdexcept>
#include <string>

namespace hsreg {

/// Parameter outside the documented domain of an operation.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Vector or matrix sizes that do not agree with the problem dimension.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Eigensolver failure, root finder non-convergence, NaN in a result.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw domain_error(what);
}

inline void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw dimension_error(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
}

}  // namespace detail
}  // namespace hsreg
