#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/harness.hpp"
#include "slrlab/optimizer.hpp"
#include "slrlab/rng.hpp"
#include "slrlab/tdist.hpp"

namespace slrlab {

inline constexpr std::size_t kDefaultSeeds = 40;
inline constexpr double kDefaultFwer = 0.05;

/// Trajectories of one configuration over several seeds.
struct RunSet {
  std::string config_digest;
  std::vector<std::uint64_t> seeds;
  std::vector<Trajectory> trajectories;
  std::vector<std::size_t> checkpoints;

  std::size_t iterations() const { return trajectories.empty() ? 0 : trajectories.front().iterations; }
  std::size_t eval_every() const { return trajectories.empty() ? 1 : trajectories.front().eval_every; }
};

/// Seeds are split(master_seed, i) for i = 0..n_seeds-1. Runs execute on up
/// to `threads` workers (0 = hardware concurrency); the result does not
/// depend on the thread count.
inline RunSet run_multi_seed(const Problem& problem, const StepSizeSchedule& schedule, const SFSpec& sf,
                             const RunOptions& base, std::size_t n_seeds, std::uint64_t master_seed,
                             unsigned threads = 0) {
  if (n_seeds < 2) throw ValidationError("run_multi_seed: n_seeds must be >= 2");
  RunSet rs;
  rs.seeds.resize(n_seeds);
  for (std::size_t i = 0; i < n_seeds; ++i) rs.seeds[i] = split(master_seed, i);
  rs.trajectories.resize(n_seeds);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_seeds));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n_seeds; i = next++) {
      try {
        RunOptions opt = base;
        opt.seed = rs.seeds[i];
        Trajectory tr = run(problem, schedule, sf, opt);
        fill_g_series(tr, schedule);
        rs.trajectories[i] = std::move(tr);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);

  rs.config_digest = rs.trajectories.front().config_digest;
  return rs;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool degenerate = false;  // both samples have zero variance
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite df and a
/// two-sided p-value. Zero variance on both sides gives t = 0, p = 1 for
/// equal means and t = +-inf, p = 0 otherwise, with df = n_a + n_b - 2.
inline WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("welch_t: each sample needs at least 2 values");
  auto moments = [](std::span<const double> s) {
    double m = 0.0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    double ss = 0.0;
    for (double v : s) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(s.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  WelchResult r;
  const double qa = va / na;
  const double qb = vb / nb;
  if (qa + qb == 0.0) {
    r.degenerate = true;
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = (ma - mb) / std::sqrt(qa + qb);
  r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

/// flag_i = p_i <= fwer / m.
inline std::vector<bool> bonferroni(std::span<const double> pvals, double fwer) {
  if (pvals.empty()) throw ValidationError("bonferroni: empty p-value list");
  if (!(fwer > 0.0 && fwer < 1.0)) throw ValidationError("bonferroni: fwer must lie in (0, 1)");
  const double threshold = fwer / static_cast<double>(pvals.size());
  std::vector<bool> out;
  out.reserve(pvals.size());
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("bonferroni: p-value outside [0, 1]");
    out.push_back(p <= threshold);
  }
  return out;
}

/// `count` log-spaced eval points between eval_every and iterations, snapped
/// to the eval grid and deduplicated.
inline std::vector<std::size_t> auto_checkpoints(std::size_t iterations, std::size_t eval_every,
                                                 std::size_t count = 10) {
  if (eval_every == 0 || iterations < eval_every) throw ValidationError("auto_checkpoints: bad horizon");
  std::vector<std::size_t> out;
  const double lo = std::log(static_cast<double>(eval_every));
  const double hi = std::log(static_cast<double>(iterations));
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double k = std::exp(lo + f * (hi - lo));
    std::size_t snapped = static_cast<std::size_t>(std::llround(k / static_cast<double>(eval_every))) * eval_every;
    snapped = std::clamp(snapped, eval_every, iterations);
    if (out.empty() || out.back() != snapped) out.push_back(snapped);
  }
  return out;
}

enum class Metric { Loss, MinGradSq };

inline const char* to_string(Metric m) { return m == Metric::Loss ? "loss" : "min_grad_sq"; }

inline Metric parse_metric(const std::string& s) {
  if (s == "loss") return Metric::Loss;
  if (s == "min_grad_sq") return Metric::MinGradSq;
  throw ValidationError("unknown metric '" + s + "' (expected loss or min_grad_sq)");
}

struct CheckpointRow {
  std::size_t k = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;
  std::size_t wins_a = 0;  // paired seeds where a is strictly lower
  std::size_t wins_b = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;

  bool operator==(const CheckpointRow&) const = default;
};

struct ComparisonReport {
  std::string metric = "min_grad_sq";
  std::string method = "welch";
  std::string correction = "bonferroni";
  double fwer = kDefaultFwer;
  bool paired = true;
  std::size_t excluded_a = 0;  // truncated runs left out of the tests
  std::size_t excluded_b = 0;
  std::vector<CheckpointRow> rows;

  bool operator==(const ComparisonReport&) const = default;
};

/// Per checkpoint: Welch t-test of the metric across seeds, Bonferroni over
/// checkpoints. Paired mode requires identical seed lists and adds per-seed
/// win counts (lower is better).
inline ComparisonReport compare(const RunSet& a, const RunSet& b, Metric metric,
                                std::span<const std::size_t> checkpoints, double fwer = kDefaultFwer,
                                bool paired = true) {
  if (a.trajectories.empty() || b.trajectories.empty()) throw ValidationError("compare: empty run set");
  if (a.iterations() != b.iterations() || a.eval_every() != b.eval_every()) {
    throw ValidationError("compare: run sets differ in horizon or eval cadence");
  }
  if (checkpoints.empty()) throw ValidationError("compare: no checkpoints");
  const std::size_t every = a.eval_every();
  for (std::size_t k : checkpoints) {
    if (k % every != 0 || k > a.iterations()) {
      throw ValidationError("compare: checkpoint " + std::to_string(k) + " is not an eval point");
    }
  }
  if (paired && a.seeds != b.seeds) throw ValidationError("compare: paired mode needs identical seed lists");

  auto value = [&](const Trajectory& tr, std::size_t k) {
    const std::size_t idx = k / every;
    return metric == Metric::Loss ? tr.loss[idx] : tr.min_grad_sq[idx];
  };

  ComparisonReport rep;
  rep.metric = to_string(metric);
  rep.fwer = fwer;
  rep.paired = paired;
  for (const auto& tr : a.trajectories) rep.excluded_a += tr.truncated ? 1 : 0;
  for (const auto& tr : b.trajectories) rep.excluded_b += tr.truncated ? 1 : 0;

  std::vector<double> pvals;
  for (std::size_t k : checkpoints) {
    std::vector<double> xa, xb;
    for (const auto& tr : a.trajectories) {
      if (!tr.truncated) xa.push_back(value(tr, k));
    }
    for (const auto& tr : b.trajectories) {
      if (!tr.truncated) xb.push_back(value(tr, k));
    }
    const WelchResult w = welch_t(xa, xb);
    CheckpointRow row;
    row.k = k;
    for (double v : xa) row.mean_a += v;
    for (double v : xb) row.mean_b += v;
    row.mean_a /= static_cast<double>(xa.size());
    row.mean_b /= static_cast<double>(xb.size());
    row.t = w.t;
    row.df = w.df;
    row.p = w.p;
    row.n_a = xa.size();
    row.n_b = xb.size();
    if (paired) {
      for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
        const auto& ta = a.trajectories[i];
        const auto& tb = b.trajectories[i];
        if (ta.truncated || tb.truncated) continue;
        const double va = value(ta, k);
        const double vb = value(tb, k);
        if (va < vb) ++row.wins_a;
        if (vb < va) ++row.wins_b;
      }
    }
    pvals.push_back(w.p);
    rep.rows.push_back(row);
  }
  const auto flags = bonferroni(pvals, fwer);
  for (std::size_t i = 0; i < flags.size(); ++i) rep.rows[i].significant = flags[i];
  return rep;
}

/// Checks that every seed saw the same gradient-noise draws in both run
/// sets, over the iterations both arms completed. Returns the number of
/// seeds whose tag streams match.
inline std::size_t paired_stream_matches(const RunSet& a, const RunSet& b) {
  if (a.seeds != b.seeds) return 0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    const auto& ta = a.trajectories[i].sample_tags;
    const auto& tb = b.trajectories[i].sample_tags;
    const std::size_t n = std::min(ta.size(), tb.size());
    if (std::equal(ta.begin(), ta.begin() + static_cast<std::ptrdiff_t>(n), tb.begin())) ++ok;
  }
  return ok;
}

}  // namespace slrlab
