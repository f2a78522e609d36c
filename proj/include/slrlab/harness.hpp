#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/optimizer.hpp"
#include "slrlab/schedule.hpp"
#include "slrlab/sf.hpp"
#include "slrlab/validator.hpp"

namespace slrlab {

/// g_0 = G_0, g_{k+1} = (1 - w_k) g_k + w_k G_k, w_k = 2 eta_k / sum_{t<=k} eta_t,
/// where G_t = ||grad f(x_t)||^2. Returns g_0..g_n for n inputs.
///
/// w_0 = 2 is applied as written, so g_1 = G_0 exactly. Each step goes
/// through std::lerp, which for w in [0, 1] stays inside [min, max] of its
/// endpoints; that keeps g_k >= min_{t<k} G_t free of rounding slips.
inline Vector gk_sequence(std::span<const double> grad_norm_sq, const StepSizeSchedule& schedule) {
  if (grad_norm_sq.empty()) throw ValidationError("gk_sequence: empty series");
  for (std::size_t t = 0; t < grad_norm_sq.size(); ++t) {
    if (!(grad_norm_sq[t] >= 0.0)) {
      throw ValidationError("gk_sequence: negative or NaN entry at t=" + std::to_string(t));
    }
  }
  Vector g(grad_norm_sq.size() + 1);
  g[0] = grad_norm_sq[0];
  double sum = 0.0;
  for (std::size_t k = 0; k < grad_norm_sq.size(); ++k) {
    const double eta = step_size(schedule, k);
    sum += eta;
    const double w = 2.0 * eta / sum;
    g[k + 1] = std::lerp(g[k], grad_norm_sq[k], w);
  }
  return g;
}

/// Fills tr.g_series at the trajectory's eval points from its per-iteration
/// gradient norms.
inline void fill_g_series(Trajectory& tr, const StepSizeSchedule& schedule) {
  tr.g_series.clear();
  if (tr.grad_norm_sq_all.empty()) return;
  const Vector g = gk_sequence(tr.grad_norm_sq_all, schedule);
  for (std::size_t k : tr.eval_k) {
    tr.g_series.push_back(k < g.size() ? g[k] : std::nan(""));
  }
}

/// Pointwise rate envelope of one theorem case at iteration k >= 1.
///   1.1a: 1 / ((E - Var) S_k)   1.1b: 1 / (E S_k)
///   1.2:  (E - Var) / S_k        baseline: 1 / S_k
/// with S_k = sum_{t<k} eta_t and moments of u_k.
struct RateEnvelope {
  TheoremCase tcase = TheoremCase::DeterministicBaseline;
  std::vector<std::size_t> ks;
  Vector values;
  Vector mean;
  Vector variance;
  Vector sum_eta;
  Vector proof_form;  // 1 / (E (1 - Var/E) S_k) for 1.1a, equal to values otherwise
  bool certified = false;
};

namespace detail {

inline double envelope_value(TheoremCase c, double m, double v, double s, std::size_t k) {
  if ((c == TheoremCase::Case11a || c == TheoremCase::Case12) && !(m - v > 0.0)) {
    throw ValidationError(std::string("envelope ") + to_string(c) + ": mean - variance <= 0 at k=" +
                          std::to_string(k));
  }
  switch (c) {
    case TheoremCase::Case11a: return 1.0 / ((m - v) * s);
    case TheoremCase::Case11b: return 1.0 / (m * s);
    case TheoremCase::Case12: return (m - v) / s;
    case TheoremCase::DeterministicBaseline: return 1.0 / s;
  }
  return std::nan("");
}

}  // namespace detail

/// Envelope at the given iterations (each >= 1, ascending).
inline RateEnvelope envelope_series(TheoremCase c, const SFSpec& sf, const StepSizeSchedule& schedule,
                                    std::span<const std::size_t> ks, bool certified = false) {
  sf.validate();
  schedule.validate();
  RateEnvelope env;
  env.tcase = c;
  env.certified = certified;
  if (ks.empty()) return env;
  if (!std::is_sorted(ks.begin(), ks.end()) || ks.front() < 1) {
    throw ValidationError("envelope_series: iterations must be ascending and >= 1");
  }
  const Vector sums = partial_sums(schedule, ks.back());
  for (std::size_t k : ks) {
    const double m = mean(sf, k);
    const double v = variance(sf, k);
    const double s = sums[k];
    env.ks.push_back(k);
    env.mean.push_back(m);
    env.variance.push_back(v);
    env.sum_eta.push_back(s);
    env.values.push_back(detail::envelope_value(c, m, v, s, k));
    env.proof_form.push_back(c == TheoremCase::Case11a ? 1.0 / (m * (1.0 - v / m) * s) : env.values.back());
  }
  return env;
}

inline double envelope(TheoremCase c, const SFSpec& sf, const StepSizeSchedule& schedule, std::size_t k) {
  if (k < 1) throw ValidationError("envelope: k must be >= 1");
  const std::size_t ks[] = {k};
  return envelope_series(c, sf, schedule, ks).values.front();
}

enum class LittleOVerdict { ConsistentWithLittleO, Inconclusive, Violation };

inline const char* to_string(LittleOVerdict v) {
  switch (v) {
    case LittleOVerdict::ConsistentWithLittleO: return "ConsistentWithLittleO";
    case LittleOVerdict::Inconclusive: return "Inconclusive";
    case LittleOVerdict::Violation: return "Violation";
  }
  return "?";
}

/// Finite-horizon trend test on r_k = min_grad_sq[k] / envelope[k].
struct LittleODiagnostic {
  std::vector<std::size_t> ks;
  Vector ratios;
  double window_slope = 0.0;  // LS slope of log r vs log k over [k_hi/2, k_hi]
  double r_lo = 0.0;
  double r_hi = 0.0;
  LittleOVerdict verdict = LittleOVerdict::Inconclusive;
};

inline constexpr double kLittleOSlopeThreshold = 0.05;

/// `min_grad_sq` is aligned with env.ks. k_lo and k_hi must be among env.ks.
inline LittleODiagnostic little_o_diagnostic(std::span<const double> min_grad_sq, const RateEnvelope& env,
                                             std::size_t k_lo, std::size_t k_hi) {
  if (min_grad_sq.size() != env.ks.size()) throw ValidationError("little_o_diagnostic: series length mismatch");
  if (!(k_lo < k_hi)) throw ValidationError("little_o_diagnostic: need k_lo < k_hi");
  auto index_of = [&](std::size_t k) {
    const auto it = std::find(env.ks.begin(), env.ks.end(), k);
    if (it == env.ks.end()) throw ValidationError("little_o_diagnostic: k=" + std::to_string(k) + " not an eval point");
    return static_cast<std::size_t>(it - env.ks.begin());
  };
  const std::size_t i_lo = index_of(k_lo);
  const std::size_t i_hi = index_of(k_hi);

  LittleODiagnostic d;
  d.ks = env.ks;
  d.ratios.resize(env.ks.size());
  for (std::size_t i = 0; i < env.ks.size(); ++i) {
    if (!(env.values[i] > 0.0)) {
      throw ValidationError("little_o_diagnostic: non-positive envelope at k=" + std::to_string(env.ks[i]));
    }
    d.ratios[i] = min_grad_sq[i] / env.values[i];
    if (!std::isfinite(d.ratios[i]) || d.ratios[i] < 0.0) {
      throw ValidationError("little_o_diagnostic: invalid ratio at k=" + std::to_string(env.ks[i]));
    }
  }
  d.r_lo = d.ratios[i_lo];
  d.r_hi = d.ratios[i_hi];

  Vector xs, ys;
  bool hit_zero = false;
  for (std::size_t i = 0; i <= i_hi; ++i) {
    if (2 * env.ks[i] < k_hi) continue;
    if (d.ratios[i] == 0.0) {
      hit_zero = true;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(env.ks[i])));
    ys.push_back(std::log(d.ratios[i]));
  }
  if (hit_zero) {
    d.window_slope = -std::numeric_limits<double>::infinity();
  } else if (xs.size() >= 2) {
    const double nn = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= nn;
    my /= nn;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    d.window_slope = sxy / sxx;
  }

  if (d.window_slope <= -kLittleOSlopeThreshold && d.r_hi < d.r_lo) {
    d.verdict = LittleOVerdict::ConsistentWithLittleO;
  } else if (d.window_slope >= kLittleOSlopeThreshold && d.r_hi > 2.0 * d.r_lo) {
    d.verdict = LittleOVerdict::Violation;
  } else {
    d.verdict = LittleOVerdict::Inconclusive;
  }
  return d;
}

}  // namespace slrlab
