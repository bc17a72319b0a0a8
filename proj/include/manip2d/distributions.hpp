#pragma once

#include <cmath>

#include "manip2d/pose.hpp"

namespace manip2d {

inline double normal_logpdf(double z, double mu, double sigma) {
  const double d = (z - mu) / sigma;
  return -0.5 * d * d - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
}

inline double softplus(double x) {
  // Numerically stable log(1 + e^x).
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

/// d tanh/dz in log space, numerically stable for |z| large:
/// log(1 - tanh(z)^2) = log(4) - 2 log(e^z + e^-z) = log(4) - 2(|z| + log1p(e^-2|z|)).
inline double log_tanh_deriv(double z) {
  const double a = std::abs(z);
  return std::log(4.0) - 2.0 * (a + std::log1p(std::exp(-2.0 * a)));
}

/// tanh(r)/r with the small-r series.
inline double tanhc(double r) {
  if (r < 1e-5) return 1.0 - r * r / 3.0;
  return std::tanh(r) / r;
}

/// Radial tanh squash of a 2-vector onto the open disk of the given radius.
inline Vec2 disk_squash(const Vec2& z, double radius) {
  return radius * tanhc(z.norm()) * z;
}

/// log |det J| of disk_squash at z.
inline double disk_squash_log_det(const Vec2& z, double radius) {
  const double r = z.norm();
  return 2.0 * std::log(radius) + log_tanh_deriv(r) + std::log(tanhc(r));
}

}  // namespace manip2d
