#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "slrlab/errors.hpp"

namespace slrlab {

inline constexpr double kBranchPointSlack = 1e-15;

/// Principal branch W0 of the Lambert W function, x >= -1/e.
///
/// Initial guess: branch-point series near -1/e, log1p for moderate x,
/// the two-term asymptote for large x. Refined with Halley's method.
inline double lambert_w0(double x) {
  constexpr double inv_e = 1.0 / std::numbers::e;
  if (std::isnan(x) || x < -inv_e - kBranchPointSlack) {
    throw DomainError("lambert_w0: argument below -1/e: " + std::to_string(x));
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  // p = sqrt(2(ex + 1)) measures distance from the branch point.
  const double q = std::numbers::e * x + 1.0;
  if (q <= 0.0) return -1.0;
  double w;
  if (x < -0.25) {
    const double p = std::sqrt(2.0 * q);
    w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))));
    if (p < 1e-3) return w;  // Halley is ill-conditioned this close; the series is exact to O(p^5)
  } else if (x < 3.0) {
    w = 0.5 * std::log1p(x);
    if (x < 0.0) w = x * (1.0 - x);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(w))) break;
  }
  return w;
}

/// Case-(c) boundary of the monotone-mean classification:
/// c2 = exp(W0(-c1 ln c1)), the root c2 > 1 of c1 ln c1 + c2 ln c2 = 0.
inline double umslr_case_c_c2(double c1) {
  if (!(c1 > 0.0 && c1 < 1.0)) {
    throw DomainError("umslr_case_c_c2: c1 must lie in (0,1), got " + std::to_string(c1));
  }
  return std::exp(lambert_w0(-c1 * std::log(c1)));
}

}  // namespace slrlab
