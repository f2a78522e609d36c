#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/lambert.hpp"
#include "slrlab/problems.hpp"
#include "slrlab/schedule.hpp"
#include "slrlab/sf.hpp"

namespace slrlab {

enum class TheoremCase { Case11a, Case11b, Case12, DeterministicBaseline };

inline const char* to_string(TheoremCase c) {
  switch (c) {
    case TheoremCase::Case11a: return "1.1a";
    case TheoremCase::Case11b: return "1.1b";
    case TheoremCase::Case12: return "1.2";
    case TheoremCase::DeterministicBaseline: return "baseline";
  }
  return "?";
}

inline TheoremCase parse_theorem_case(const std::string& s) {
  if (s == "1.1a") return TheoremCase::Case11a;
  if (s == "1.1b") return TheoremCase::Case11b;
  if (s == "1.2") return TheoremCase::Case12;
  if (s == "baseline") return TheoremCase::DeterministicBaseline;
  throw ValidationError("unknown theorem case '" + s + "' (expected 1.1a, 1.1b, 1.2 or baseline)");
}

struct ConditionReport {
  std::string condition_name;
  bool holds = true;
  std::optional<std::size_t> first_violation_k;
  std::string detail;

  bool operator==(const ConditionReport&) const = default;
};

/// One line per report: `<PASS|FAIL> <name> [first_violation_k=<k>] :: <detail>`.
inline std::string format_report_line(const ConditionReport& r) {
  std::string s = (r.holds ? "PASS " : "FAIL ") + r.condition_name;
  if (r.first_violation_k) s += " first_violation_k=" + std::to_string(*r.first_violation_k);
  if (!r.detail.empty()) s += " :: " + r.detail;
  return s;
}

inline bool all_hold(const std::vector<ConditionReport>& rs) {
  for (const auto& r : rs) {
    if (!r.holds) return false;
  }
  return true;
}

namespace detail {

inline std::string g17(double v) { return fmt17(v); }

/// Checks pred(k) for k = 0..horizon; reports the first failure.
template <class Pred>
ConditionReport per_iteration(std::string name, std::size_t horizon, Pred pred, std::string detail = {}) {
  ConditionReport r{std::move(name), true, std::nullopt, std::move(detail)};
  for (std::size_t k = 0; k <= horizon; ++k) {
    if (!pred(k)) {
      r.holds = false;
      r.first_violation_k = k;
      break;
    }
  }
  return r;
}

/// Strict monotonicity of series[0..horizon]; violation index is the k+1
/// whose term fails to move in the required direction.
inline ConditionReport strictly_monotone(std::string name, const std::vector<double>& s, std::size_t horizon,
                                         bool increasing) {
  ConditionReport r{std::move(name), true, std::nullopt, {}};
  for (std::size_t k = 1; k <= horizon; ++k) {
    const bool ok = increasing ? s[k] > s[k - 1] : s[k] < s[k - 1];
    if (!ok) {
      r.holds = false;
      r.first_violation_k = k;
      r.detail = "term " + std::to_string(k) + " = " + g17(s[k]) + " vs previous " + g17(s[k - 1]);
      return r;
    }
  }
  r.detail = "checked k = 0.." + std::to_string(horizon);
  return r;
}

}  // namespace detail

/// Monotone-mean classification of a uniform-root factor with 0 < c1 < c2.
struct Prop1Classification {
  char label = 'n';  // 'a', 'b', 'c', 'd' or 'n' (none)
  Direction mean_direction = Direction::Constant;  // numeric, horizon 1e4
  double case_c_c2 = std::nan("");                 // boundary value when c1 in (0,1)
  bool in_proof_interval_variant = false;          // 0 < c1 < 1 and 1 < c2 < e^{W(1/e)}, informational only

  std::string label_string() const { return label == 'n' ? "none" : std::string(1, label); }
};

inline constexpr std::size_t kClassifyHorizon = 10000;
inline constexpr double kCaseCTolerance = 1e-9;

inline Prop1Classification classify_prop1(double c1, double c2) {
  if (!(c1 > 0.0) || !(c1 < c2) || !std::isfinite(c2)) {
    throw ValidationError("classify_prop1 requires 0 < c1 < c2");
  }
  Prop1Classification out;
  if (c1 < 1.0) out.case_c_c2 = umslr_case_c_c2(c1);

  if (c1 >= 1.0 && c2 > 1.0) {
    out.label = 'a';
  } else if (c1 < 1.0 && c2 <= 1.0) {
    out.label = 'b';
  } else if (c1 < 1.0 && std::fabs(c2 - out.case_c_c2) <= kCaseCTolerance) {
    out.label = 'c';
  } else if (c1 < 1.0 && c2 > 1.0 / c1) {
    out.label = 'd';
  }
  if (c1 < 1.0) {
    const double upper = std::exp(lambert_w0(1.0 / std::numbers::e));
    out.in_proof_interval_variant = c2 > 1.0 && c2 < upper;
  }
  out.mean_direction = moment_profile(SFSpec::uniform_root(c1, c2), kClassifyHorizon).mean_direction;
  return out;
}

/// Step-size conditions: decreasing, sum eta = inf, sum eta^2 < inf,
/// sum eta_k / sum_{j<k} eta_j = inf. Verdicts on the series are analytic
/// per family; partial sums over the horizon are attached as detail.
inline std::vector<ConditionReport> check_assumption2(const StepSizeSchedule& schedule, std::size_t horizon) {
  schedule.validate();
  if (horizon < 2) throw ValidationError("check_assumption2 needs horizon >= 2");

  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::optional<std::size_t> not_decreasing;
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double e = step_size(schedule, k);
    if (k > 0 && s1 > 0.0) s3 += e / s1;
    if (k > 0 && !not_decreasing && !(e < step_size(schedule, k - 1))) not_decreasing = k;
    s1 += e;
    s2 += e * e;
  }
  const std::string h = " over k<=" + std::to_string(horizon) + ": ";

  bool sum_diverges = true, sq_converges = true, ratio_diverges = true;
  std::string why_sq, why_ratio;
  switch (schedule.family) {
    case StepSizeSchedule::Family::Constant:
      sq_converges = false;
      why_sq = "constant step: sum eta^2 grows linearly";
      why_ratio = "eta/(k eta) = 1/k, harmonic";
      break;
    case StepSizeSchedule::Family::InverseK:
      why_sq = "sum 1/k^2 converges";
      why_ratio = "eta_k / H_k ~ 1/(k ln k), diverges";
      break;
    case StepSizeSchedule::Family::InverseSqrtK:
      sq_converges = false;
      why_sq = "sum 1/k diverges";
      why_ratio = "eta_k / sum ~ 1/(2k), diverges";
      break;
  }

  std::vector<ConditionReport> out;
  ConditionReport dec{"assumption2.decreasing", !not_decreasing, not_decreasing, {}};
  dec.detail = not_decreasing ? std::string("non-increasing but not strictly decreasing")
                               : "strictly decreasing over k<=" + std::to_string(horizon);
  if (not_decreasing && schedule.family == StepSizeSchedule::Family::Constant) {
    dec.detail += " (constant step permitted by the runner)";
  }
  out.push_back(dec);
  out.push_back({"assumption2.sum_eta_diverges", sum_diverges, std::nullopt, "partial sum" + h + detail::g17(s1)});
  out.push_back({"assumption2.sum_eta_sq_finite", sq_converges, std::nullopt,
                 why_sq + "; partial sum" + h + detail::g17(s2)});
  out.push_back({"assumption2.ratio_sum_diverges", ratio_diverges, std::nullopt,
                 why_ratio + "; partial sum" + h + detail::g17(s3)});
  return out;
}

/// Per-case preconditions on the SF moments and the step-size bound, each
/// checked on every k = 0..horizon.
inline std::vector<ConditionReport> check_theorem_case(const MomentProfile& profile, TheoremCase c, double B,
                                                       double L, const StepSizeSchedule& schedule,
                                                       std::size_t horizon) {
  if (profile.horizon() < horizon) {
    throw ValidationError("check_theorem_case: profile horizon " + std::to_string(profile.horizon()) +
                          " shorter than requested horizon " + std::to_string(horizon));
  }
  if (!(B > 0.0) || !(L > 0.0)) throw ValidationError("check_theorem_case: B and L must be positive");
  schedule.validate();
  const auto& m = profile.mean;
  const auto& v = profile.variance;
  auto eta = [&](std::size_t k) { return step_size(schedule, k); };

  std::vector<ConditionReport> out;
  switch (c) {
    case TheoremCase::Case11a:
      out.push_back(detail::strictly_monotone("1.1a.mean_decreasing", m, horizon, false));
      out.push_back(detail::strictly_monotone("1.1a.variance_increasing", v, horizon, true));
      out.push_back(detail::per_iteration("1.1a.mean_gt_variance_plus_1", horizon,
                                          [&](std::size_t k) { return m[k] > v[k] + 1.0; }));
      out.push_back(detail::per_iteration("1.1a.eta_le_1/(B L mean)", horizon,
                                          [&](std::size_t k) { return eta(k) <= 1.0 / (B * L * m[k]); }));
      break;
    case TheoremCase::Case11b: {
      const double c2 = profile.sup_support_limit;
      out.push_back(detail::strictly_monotone("1.1b.mean_decreasing", m, horizon, false));
      out.push_back(detail::per_iteration("1.1b.eta_le_1/(B L c2)", horizon,
                                          [&](std::size_t k) { return eta(k) <= 1.0 / (B * L * c2); },
                                          "c2 = sup_k u_k = " + detail::g17(c2)));
      break;
    }
    case TheoremCase::Case12:
      out.push_back(detail::strictly_monotone("1.2.mean_increasing", m, horizon, true));
      out.push_back(detail::strictly_monotone("1.2.variance_decreasing", v, horizon, false));
      out.push_back(detail::per_iteration("1.2.mean_lt_1", horizon, [&](std::size_t k) { return m[k] < 1.0; }));
      out.push_back(detail::per_iteration("1.2.variance_over_mean_lt_1", horizon,
                                          [&](std::size_t k) { return v[k] / m[k] < 1.0; }));
      out.push_back(detail::per_iteration("1.2.eta_le_1/(B L)", horizon,
                                          [&](std::size_t k) { return eta(k) <= 1.0 / (B * L); }));
      break;
    case TheoremCase::DeterministicBaseline:
      out.push_back(detail::per_iteration("baseline.unit_factor", horizon,
                                          [&](std::size_t k) { return m[k] == 1.0 && v[k] == 0.0; }));
      out.push_back(detail::per_iteration("baseline.eta_le_1/(B L)", horizon,
                                          [&](std::size_t k) { return eta(k) <= 1.0 / (B * L); }));
      break;
  }
  for (auto& r : out) {
    if (r.holds && r.detail.empty()) r.detail = "checked k = 0.." + std::to_string(horizon);
  }
  return out;
}

/// Whether the case's envelope is strictly tighter than 1/sum eta at every k.
inline ConditionReport acceleration_check(const MomentProfile& profile, TheoremCase c) {
  const auto& m = profile.mean;
  const auto& v = profile.variance;
  const std::size_t h = profile.horizon();
  ConditionReport r;
  switch (c) {
    case TheoremCase::Case11a:
      r = detail::per_iteration("acceleration.1.1a.mean_gt_variance_plus_1", h,
                                [&](std::size_t k) { return m[k] > v[k] + 1.0; });
      break;
    case TheoremCase::Case11b:
      r = detail::per_iteration("acceleration.1.1b.mean_gt_1", h, [&](std::size_t k) { return m[k] > 1.0; });
      break;
    case TheoremCase::Case12:
      r = detail::per_iteration("acceleration.1.2.mean_minus_variance_lt_1", h,
                                [&](std::size_t k) { return m[k] - v[k] < 1.0; });
      break;
    case TheoremCase::DeterministicBaseline:
      return {"acceleration.baseline", false, 0, "the baseline is the reference envelope; never strictly tighter"};
  }
  if (r.holds) {
    r.detail = "strict for k = 0.." + std::to_string(h);
  } else if (*r.first_violation_k > 0) {
    r.detail = "strict for k = 0.." + std::to_string(*r.first_violation_k - 1);
  } else {
    r.detail = "fails at k = 0";
  }
  return r;
}

/// Increment-based alternative to the separate moment monotonicity
/// conditions: 1.1a wants dVar > dE, 1.2 wants dVar < dE at every step.
/// Informational only.
inline ConditionReport check_increment_condition(const MomentProfile& profile, TheoremCase c) {
  const auto& m = profile.mean;
  const auto& v = profile.variance;
  const bool var_above = c == TheoremCase::Case11a;
  if (c != TheoremCase::Case11a && c != TheoremCase::Case12) {
    return {"increment.n/a", true, std::nullopt, "no increment alternative for this case"};
  }
  ConditionReport r{std::string("increment.") + to_string(c), true, std::nullopt, "informational"};
  for (std::size_t k = 0; k + 1 <= profile.horizon(); ++k) {
    const double dv = v[k + 1] - v[k];
    const double dm = m[k + 1] - m[k];
    if (!(var_above ? dv > dm : dv < dm)) {
      r.holds = false;
      r.first_violation_k = k;
      break;
    }
  }
  return r;
}

}  // namespace slrlab
