#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/hash.hpp"
#include "slrlab/problems.hpp"
#include "slrlab/rng.hpp"
#include "slrlab/schedule.hpp"
#include "slrlab/sf.hpp"

namespace slrlab {

inline constexpr double kDivergenceLoss = 1e12;

/// x - eta_k * u_k * g.
inline Vector sgd_step(std::span<const double> x, std::span<const double> g, double eta_k, double u_k) {
  if (x.size() != g.size()) throw ValidationError("sgd_step: x and g differ in length");
  if (!(eta_k > 0.0) || !std::isfinite(eta_k)) throw ValidationError("sgd_step: eta_k must be positive");
  if (!(u_k > 0.0) || !std::isfinite(u_k)) throw ValidationError("sgd_step: u_k must be positive");
  const double s = eta_k * u_k;
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(g[i])) throw ValidationError("sgd_step: non-finite input");
    out[i] = x[i] - s * g[i];
  }
  return out;
}

/// Per-run record. Series suffixed "at eval" are aligned with `eval_k`;
/// the rest are indexed by iteration t = 0..completed-1.
struct Trajectory {
  std::size_t iterations = 0;  // requested horizon
  std::size_t completed = 0;   // steps actually taken
  std::size_t eval_every = 1;

  std::vector<std::size_t> eval_k;
  Vector loss;          // at eval
  Vector grad_norm_sq;  // at eval, true ||grad f(x_k)||^2
  Vector min_grad_sq;   // at eval, running min over evaluated iterates t <= k
  Vector sum_eta;       // at eval, sum_{t<k} eta_t
  Vector g_series;      // at eval, filled by the harness

  Vector grad_norm_sq_all;  // per iteration, empty unless tracked
  Vector eta_series;
  Vector u_series;
  std::vector<std::uint64_t> sample_tags;

  Vector final_x;
  bool certified = true;
  bool truncated = false;
  std::string truncation_reason;
  std::uint64_t seed = 0;
  std::string config_digest;

  bool operator==(const Trajectory&) const = default;
};

struct RunOptions {
  std::size_t iterations = 1000;
  std::size_t eval_every = 10;
  std::optional<Vector> x0;  // all-ones when absent
  std::uint64_t seed = 0;
  bool track_all_gradients = true;  // needed for the g_k recurrence
};

inline std::string run_digest(const Problem& problem, const StepSizeSchedule& schedule, const SFSpec& sf,
                              const RunOptions& opt) {
  std::string s = problem.describe() + "|" + to_string(schedule.family) + ":" + detail::fmt17(schedule.eta) + "|" +
                  sf.describe() + "|iterations=" + std::to_string(opt.iterations) +
                  "|eval_every=" + std::to_string(opt.eval_every) + "|x0=";
  if (opt.x0) {
    for (double v : *opt.x0) s += detail::fmt17(v) + ",";
  } else {
    s += "ones";
  }
  return hex_digest(s);
}

/// Runs x_{k+1} = x_k - eta_k u_k grad f_{v_k}(x_k) for opt.iterations steps.
///
/// Gradient noise and u_k come from independent sub-streams of opt.seed.
/// The true gradient norm is evaluated at every k divisible by eval_every
/// (k = 0 and k = iterations included). A loss above 1e12 or a non-finite
/// iterate stops the run early with `truncated` set.
inline Trajectory run(const Problem& problem, const StepSizeSchedule& schedule, const SFSpec& sf,
                      const RunOptions& opt) {
  schedule.validate();
  sf.validate();
  if (opt.iterations < 1) throw ValidationError("run: iterations must be >= 1");
  if (opt.eval_every < 1) throw ValidationError("run: eval_every must be >= 1");
  if (opt.iterations % opt.eval_every != 0) throw ValidationError("run: eval_every must divide iterations");

  Vector x = opt.x0.value_or(Vector(problem.dim(), 1.0));
  if (x.size() != problem.dim()) throw ValidationError("run: x0 has wrong dimension");

  Trajectory tr;
  tr.iterations = opt.iterations;
  tr.eval_every = opt.eval_every;
  tr.seed = opt.seed;
  tr.config_digest = run_digest(problem, schedule, sf, opt);
  const std::size_t n_eval = opt.iterations / opt.eval_every + 1;
  for (auto* v : {&tr.loss, &tr.grad_norm_sq, &tr.min_grad_sq, &tr.sum_eta}) v->reserve(n_eval);
  tr.eval_k.reserve(n_eval);
  tr.eta_series.reserve(opt.iterations);
  tr.u_series.reserve(opt.iterations);
  tr.sample_tags.reserve(opt.iterations);
  if (opt.track_all_gradients) tr.grad_norm_sq_all.reserve(opt.iterations);

  Rng noise_rng(stream_seed(opt.seed, Stream::GradientNoise));
  Rng sf_rng(stream_seed(opt.seed, Stream::StochasticFactor));
  double running_sum = 0.0;
  double running_min = std::numeric_limits<double>::infinity();
  tr.certified = problem.in_certified_domain(x);

  auto norm_sq = [](const Vector& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return s;
  };

  for (std::size_t k = 0;; ++k) {
    const bool eval = k % opt.eval_every == 0;
    double gns = 0.0;
    if (eval || (opt.track_all_gradients && k < opt.iterations)) gns = norm_sq(problem.full_gradient(x));
    if (eval) {
      const double f = problem.loss(x);
      if (!std::isfinite(f) || f > kDivergenceLoss || !std::isfinite(gns)) {
        tr.truncated = true;
        tr.truncation_reason = "loss exceeded 1e12 or became non-finite at k=" + std::to_string(k);
        break;
      }
      running_min = std::min(running_min, gns);
      tr.eval_k.push_back(k);
      tr.loss.push_back(f);
      tr.grad_norm_sq.push_back(gns);
      tr.min_grad_sq.push_back(running_min);
      tr.sum_eta.push_back(running_sum);
    }
    if (k == opt.iterations) break;
    if (opt.track_all_gradients) tr.grad_norm_sq_all.push_back(gns);

    const double eta_k = step_size(schedule, k);
    const double u_k = sample(sf, k, sf_rng);
    GradientSample gs = problem.stochastic_gradient(x, noise_rng);
    bool finite = true;
    for (double v : gs.vector) finite = finite && std::isfinite(v);
    if (!finite) {
      tr.truncated = true;
      tr.truncation_reason = "non-finite stochastic gradient at k=" + std::to_string(k);
      break;
    }
    x = sgd_step(x, gs.vector, eta_k, u_k);
    running_sum += eta_k;
    tr.eta_series.push_back(eta_k);
    tr.u_series.push_back(u_k);
    tr.sample_tags.push_back(gs.sample_tag);
    tr.completed = k + 1;
    if (!problem.in_certified_domain(x)) tr.certified = false;
    for (double v : x) {
      if (!std::isfinite(v)) {
        tr.truncated = true;
        tr.truncation_reason = "non-finite iterate after k=" + std::to_string(k);
      }
    }
    if (tr.truncated) break;
  }
  if (tr.truncated) tr.certified = false;
  tr.final_x = std::move(x);
  return tr;
}

}  // namespace slrlab
