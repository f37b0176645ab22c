#pragma once

#include <cmath>

#include "defsurv/errors.hpp"

namespace defsurv {

namespace detail {
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace detail

/// Standard normal CDF via the complementary error function.
inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * detail::kInvSqrt2);
}

/// Standard normal density.
inline double std_normal_pdf(double z) {
  return detail::kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

/// Phi(hi) - Phi(lo) for lo <= hi, grouped so both erfc terms share a tail.
/// Evaluating through the tail closer to the arguments keeps the relative
/// error of the difference bounded when both points sit far from zero.
inline double std_normal_cdf_diff(double lo, double hi) {
  if (lo + hi > 0.0)
    return 0.5 * (std::erfc(lo * detail::kInvSqrt2) -
                  std::erfc(hi * detail::kInvSqrt2));
  return 0.5 * (std::erfc(-hi * detail::kInvSqrt2) -
                std::erfc(-lo * detail::kInvSqrt2));
}

/// Signed Phi(z2) - Phi(z1) for arbitrary order.
inline double std_normal_cdf_diff_signed(double z1, double z2) {
  return z2 >= z1 ? std_normal_cdf_diff(z1, z2) : -std_normal_cdf_diff(z2, z1);
}

/// Standard normal quantile. Rational initial guess (Abramowitz & Stegun
/// 26.2.23) polished by Newton steps on the erfc-based CDF; accurate to a few
/// ulp for p away from the extreme denormal tails.
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw NumericError("std_normal_quantile: p must lie in (0,1)");
  const bool upper = p > 0.5;
  const double pp = upper ? 1.0 - p : p;
  const double t = std::sqrt(-2.0 * std::log(pp));
  double z = t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                     (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)));
  z = -z;  // lower-tail quantile of pp
  for (int i = 0; i < 4; ++i) {
    const double err = std_normal_cdf(z) - pp;
    const double d = std_normal_pdf(z);
    if (d <= 0.0) break;
    const double step = err / d;
    z -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) break;
  }
  return upper ? -z : z;
}

}  // namespace defsurv
