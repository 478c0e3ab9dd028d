#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "fractalnet/errors.hpp"

namespace fractalnet {

// Ordinary least squares y = slope * x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;          // 0 when y is constant
  double residual_variance = 0.0;  // SS_res / (n - 2); 0 when n <= 2
  double sxx = 0.0;                // sum of (x - mean x)^2
  std::size_t points = 0;
};

inline LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("ordinary_least_squares: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientDataError("ordinary_least_squares: need at least 2 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw ArgumentError("ordinary_least_squares: all x values are equal");

  LinearFit fit;
  fit.points = n;
  fit.sxx = sxx;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.residual_variance = n > 2 ? ss_res / static_cast<double>(n - 2) : 0.0;
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 0.0;
  return fit;
}

}  // namespace fractalnet
