#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hsreg/error.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

enum class KernelId { K1, K2, Custom };

/// Kernel on [0,1]^2. K1(x,x') = x x' + exp(-8 (x - x')^2);
/// K2(x,x') = min(x,x') - x x' (Brownian bridge).
struct Kernel {
  KernelId id = KernelId::K1;
  std::function<double(double, double)> custom;

  static Kernel k1() { return {KernelId::K1, {}}; }
  static Kernel k2() { return {KernelId::K2, {}}; }
  static Kernel from(std::function<double(double, double)> f) { return {KernelId::Custom, std::move(f)}; }

  double operator()(double x, double y) const {
    switch (id) {
      case KernelId::K1: {
        const double dx = x - y;
        return x * y + std::exp(-8.0 * dx * dx);
      }
      case KernelId::K2:
        return std::min(x, y) - x * y;
      case KernelId::Custom:
        if (!custom) throw domain_error("custom kernel has no callable");
        return custom(x, y);
    }
    return 0.0;
  }
};

struct MercerResult {
  Vec grid;            ///< midpoints (i - 1/2)/n
  Vec eigenvalues;     ///< nonincreasing, clamped below 1e-12 * max
  Mat eigenfunctions;  ///< column k holds phi_k on the grid; (1/n) Phi^T Phi = I
  double reconstruction_error = 0.0;  ///< max |K - sum_k lambda_k phi_k phi_k^T|
  double kernel_max = 0.0;
  int clamped = 0;
};

/// Nystrom decomposition with midpoint quadrature (weights 1/n).
inline MercerResult mercer_decompose(const Kernel& kernel, int grid_n) {
  detail::require(grid_n >= 16, "mercer_decompose: grid_n must be >= 16");
  const Eigen::Index n = grid_n;
  MercerResult out;
  out.grid.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);

  Mat K(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) K(i, j) = kernel(out.grid[i], out.grid[j]);
  out.kernel_max = K.cwiseAbs().maxCoeff();
  if (!std::isfinite(out.kernel_max)) throw numerical_error("mercer_decompose: kernel is not finite on the grid");
  const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(out.kernel_max, 1e-300))
    throw domain_error("mercer_decompose: kernel is not symmetric on the grid");

  Eigen::SelfAdjointEigenSolver<Mat> es(K / static_cast<double>(n));
  if (es.info() != Eigen::Success) throw numerical_error("mercer_decompose: eigensolver failed");

  // Eigen returns ascending order; reverse to nonincreasing.
  Vec ev = es.eigenvalues().reverse();
  Mat V = es.eigenvectors().rowwise().reverse();
  const double top = std::max(ev[0], 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (ev[k] < 1e-12 * top) {
      if (ev[k] != 0.0) ++out.clamped;
      ev[k] = 0.0;
    }
  }
  out.eigenvalues = ev;
  out.eigenfunctions = V * std::sqrt(static_cast<double>(n));
  const Mat recon = out.eigenfunctions * ev.asDiagonal() * out.eigenfunctions.transpose();
  out.reconstruction_error = (K - recon).cwiseAbs().maxCoeff();
  return out;
}

inline std::optional<KernelId> parse_kernel_id(const std::string& s) {
  if (s == "K1" || s == "k1") return KernelId::K1;
  if (s == "K2" || s == "k2") return KernelId::K2;
  return std::nullopt;
}

}  // namespace hsreg
