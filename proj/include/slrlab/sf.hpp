#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/rng.hpp"

namespace slrlab {

/// Distribution of the stochasticity factor u_k that multiplies the step size.
///
/// Constant:    u_k = value for every k.
/// UniformRoot: u_k ~ U(c1^(1/(k+1)), c2^(1/(k+1))), k = 0, 1, ...
struct SFSpec {
  enum class Kind { Constant, UniformRoot };

  Kind kind = Kind::Constant;
  double value = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;

  static SFSpec constant(double v) {
    SFSpec s{Kind::Constant, v, 0.0, 0.0};
    s.validate();
    return s;
  }

  static SFSpec uniform_root(double c1, double c2) {
    SFSpec s{Kind::UniformRoot, 0.0, c1, c2};
    s.validate();
    return s;
  }

  void validate() const {
    switch (kind) {
      case Kind::Constant:
        if (!(value > 0.0) || !std::isfinite(value)) {
          throw ValidationError("constant stochasticity factor must be positive and finite");
        }
        break;
      case Kind::UniformRoot:
        if (!(c1 > 0.0) || !std::isfinite(c2)) {
          throw ValidationError("uniform-root stochasticity factor requires 0 < c1");
        }
        if (!(c1 < c2)) {
          throw ValidationError("uniform-root stochasticity factor requires c1 < c2");
        }
        break;
    }
  }

  std::string describe() const;

  friend bool operator==(const SFSpec&, const SFSpec&) = default;
};

inline std::string to_string(SFSpec::Kind k) {
  return k == SFSpec::Kind::Constant ? "constant" : "uniform_root";
}

/// (lo, hi) of the support of u_k.
inline std::pair<double, double> support_bounds(const SFSpec& spec, std::size_t k) {
  spec.validate();
  if (spec.kind == SFSpec::Kind::Constant) return {spec.value, spec.value};
  const double e = 1.0 / static_cast<double>(k + 1);
  return {std::pow(spec.c1, e), std::pow(spec.c2, e)};
}

inline double mean(const SFSpec& spec, std::size_t k) {
  const auto [lo, hi] = support_bounds(spec, k);
  return (lo + hi) / 2.0;
}

inline double variance(const SFSpec& spec, std::size_t k) {
  const auto [lo, hi] = support_bounds(spec, k);
  const double w = hi - lo;
  return w * w / 12.0;
}

/// Inverse transform: lo + (hi - lo) * U with one 53-bit uniform draw.
/// Constant specs return the value and consume nothing from `rng`.
inline double sample(const SFSpec& spec, std::size_t k, Rng& rng) {
  const auto [lo, hi] = support_bounds(spec, k);
  if (spec.kind == SFSpec::Kind::Constant) return lo;
  const double u = lo + (hi - lo) * rng.uniform01();
  return std::clamp(u, lo, hi);
}

enum class Direction { Increasing, Decreasing, Constant, NonMonotone };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::Increasing: return "increasing";
    case Direction::Decreasing: return "decreasing";
    case Direction::Constant: return "constant";
    case Direction::NonMonotone: return "non-monotone";
  }
  return "?";
}

/// Strict comparison of consecutive terms, no tolerance.
inline Direction direction_of(const std::vector<double>& series) {
  bool up = false;
  bool down = false;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i] > series[i - 1]) up = true;
    if (series[i] < series[i - 1]) down = true;
  }
  if (up && down) return Direction::NonMonotone;
  if (up) return Direction::Increasing;
  if (down) return Direction::Decreasing;
  return Direction::Constant;
}

/// Closed-form mean/variance of u_k for k = 0..k_max with extremal bounds.
struct MomentProfile {
  SFSpec spec;
  std::size_t k_max = 0;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> upper;  // support upper bound per k
  double mu1 = 0.0;           // min of mean over the horizon
  double sup_support = 0.0;   // max of the support upper bound over the horizon
  double sup_support_limit = 0.0;  // sup over all k (the analytic limit when not attained)
  Direction mean_direction = Direction::Constant;
  Direction var_direction = Direction::Constant;

  std::size_t horizon() const { return k_max; }
};

inline MomentProfile moment_profile(const SFSpec& spec, std::size_t k_max) {
  spec.validate();
  if (k_max == 0) throw ValidationError("moment_profile needs k_max >= 1");

  MomentProfile p;
  p.spec = spec;
  p.k_max = k_max;
  p.mean.resize(k_max + 1);
  p.variance.resize(k_max + 1);
  p.upper.resize(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) {
    const auto [lo, hi] = support_bounds(spec, k);
    const double w = hi - lo;
    p.mean[k] = (lo + hi) / 2.0;
    p.variance[k] = w * w / 12.0;
    p.upper[k] = hi;
  }
  p.mu1 = *std::min_element(p.mean.begin(), p.mean.end());
  p.sup_support = *std::max_element(p.upper.begin(), p.upper.end());
  if (spec.kind == SFSpec::Kind::Constant) {
    p.sup_support_limit = spec.value;
  } else {
    // c2^(1/(k+1)) rises toward 1 when c2 < 1 and falls from c2 when c2 > 1.
    p.sup_support_limit = std::max(spec.c2, 1.0);
  }
  p.mean_direction = direction_of(p.mean);
  p.var_direction = direction_of(p.variance);
  return p;
}

inline std::string SFSpec::describe() const {
  char buf[128];
  if (kind == Kind::Constant) {
    std::snprintf(buf, sizeof buf, "constant(%.17g)", value);
  } else {
    std::snprintf(buf, sizeof buf, "uniform_root(%.17g,%.17g)", c1, c2);
  }
  return buf;
}

}  // namespace slrlab
