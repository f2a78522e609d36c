#pragma once

// Experiment commands behind the slrlab CLI. Each returns a process exit
// code: 0 success, 1 validation failure, 2 runtime error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slrlab/config.hpp"
#include "slrlab/errors.hpp"
#include "slrlab/harness.hpp"
#include "slrlab/io.hpp"
#include "slrlab/optimizer.hpp"
#include "slrlab/rng.hpp"
#include "slrlab/stats.hpp"
#include "slrlab/validator.hpp"

namespace slrlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char* kSeedEnvVar = "SLRLAB_SEED";

namespace detail {

struct LoadedConfig {
  ExperimentConfig cfg;
  std::string seed_source = "config";
};

inline LoadedConfig load_config(const std::filesystem::path& path) {
  LoadedConfig lc;
  lc.cfg = parse_config(read_text_file(path));
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    const std::string s(env);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ValidationError(std::string(kSeedEnvVar) + " must be a non-negative integer, got '" + s + "'");
    }
    lc.cfg.master_seed = v;
    lc.seed_source = kSeedEnvVar;
  }
  return lc;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

inline std::vector<std::size_t> positive_eval_points(std::size_t iterations, std::size_t eval_every) {
  std::vector<std::size_t> ks;
  for (std::size_t k = eval_every; k <= iterations; k += eval_every) ks.push_back(k);
  return ks;
}

inline std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (auto v : seeds) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

// Common experiment setup shared by run / envelope / compare.
struct Experiment {
  ExperimentConfig cfg;
  Problem problem;
  StepSizeSchedule schedule;
  RunOptions options;
  RateEnvelope baseline;
  std::optional<RateEnvelope> case_envelope;
  std::vector<ConditionReport> case_reports;
};

inline Experiment prepare(const ExperimentConfig& cfg, std::optional<TheoremCase> tcase) {
  Problem problem = make_problem(cfg.problem);
  const StepSizeSchedule schedule = resolve_schedule(cfg, problem);
  schedule.validate();
  RunOptions opt;
  opt.iterations = cfg.iterations;
  opt.eval_every = cfg.eval_every;
  const auto ks = positive_eval_points(cfg.iterations, cfg.eval_every);
  Experiment ex{cfg, std::move(problem), schedule, opt, {}, std::nullopt, {}};
  ex.baseline = envelope_series(TheoremCase::DeterministicBaseline, SFSpec::constant(1.0), schedule, ks, true);
  if (tcase) {
    const auto profile = moment_profile(cfg.sf, cfg.iterations);
    ex.case_reports = check_theorem_case(profile, *tcase, ex.problem.constants().B, ex.problem.constants().L,
                                         schedule, cfg.iterations);
    ex.case_envelope = envelope_series(*tcase, cfg.sf, schedule, ks, all_hold(ex.case_reports));
  }
  return ex;
}

inline Metadata base_metadata(const std::string& command, const Experiment& ex, const std::string& seed_source) {
  const auto& c = ex.problem.constants();
  Metadata m{
      {"command", command},
      {"rng", Rng::algorithm},
      {"master_seed", std::to_string(ex.cfg.master_seed)},
      {"seed_source", seed_source},
      {"problem", ex.problem.describe()},
      {"constants", "L=" + fmt17(c.L) + " A=" + fmt17(c.A) + " B=" + fmt17(c.B) + " C=" + fmt17(c.C)},
      {"schedule", std::string(to_string(ex.schedule.family)) + " eta=" + fmt17(ex.schedule.eta)},
      {"sf", ex.cfg.sf.describe()},
      {"iterations", std::to_string(ex.cfg.iterations)},
      {"eval_every", std::to_string(ex.cfg.eval_every)},
      {"min_grad_sq", "running minimum over eval points t <= k (every eval_every iterations)"},
  };
  for (const auto& note : ex.problem.notes()) m.emplace_back("problem_note", note);
  if (ex.case_envelope) {
    m.emplace_back("theorem_case", to_string(ex.case_envelope->tcase));
    m.emplace_back("case_certified", ex.case_envelope->certified ? "true" : "false");
  }
  return m;
}

// Mean over non-truncated runs at each eval point. Per-iteration columns
// (eta_k, u_k) are left empty.
inline Trajectory mean_trajectory(const RunSet& rs) {
  Trajectory out;
  std::size_t used = 0;
  for (const auto& tr : rs.trajectories) {
    if (tr.truncated) continue;
    if (used == 0) {
      out.iterations = tr.iterations;
      out.eval_every = tr.eval_every;
      out.eval_k = tr.eval_k;
      out.loss.assign(tr.loss.size(), 0.0);
      out.grad_norm_sq.assign(tr.loss.size(), 0.0);
      out.min_grad_sq.assign(tr.loss.size(), 0.0);
      out.g_series.assign(tr.g_series.size(), 0.0);
      out.sum_eta = tr.sum_eta;
    }
    for (std::size_t i = 0; i < tr.loss.size(); ++i) {
      out.loss[i] += tr.loss[i];
      out.grad_norm_sq[i] += tr.grad_norm_sq[i];
      out.min_grad_sq[i] += tr.min_grad_sq[i];
    }
    for (std::size_t i = 0; i < tr.g_series.size() && i < out.g_series.size(); ++i) out.g_series[i] += tr.g_series[i];
    ++used;
  }
  if (used == 0) return out;
  const double n = static_cast<double>(used);
  for (auto* v : {&out.loss, &out.grad_norm_sq, &out.min_grad_sq, &out.g_series}) {
    for (double& x : *v) x /= n;
  }
  return out;
}

inline RunSet run_experiment(const Experiment& ex) {
  if (ex.cfg.n_seeds == 1) {
    RunSet rs;
    RunOptions opt = ex.options;
    opt.seed = split(ex.cfg.master_seed, 0);
    Trajectory tr = run(ex.problem, ex.schedule, ex.cfg.sf, opt);
    fill_g_series(tr, ex.schedule);
    rs.seeds = {opt.seed};
    rs.config_digest = tr.config_digest;
    rs.trajectories.push_back(std::move(tr));
    return rs;
  }
  return run_multi_seed(ex.problem, ex.schedule, ex.cfg.sf, ex.options, ex.cfg.n_seeds, ex.cfg.master_seed);
}

inline std::string seed_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seed_%03zu.csv", i);
  return buf;
}

}  // namespace detail

/// Step-size and theorem-case checks plus the monotone-mean classification.
/// Exit 1 when a step-size or (requested) theorem-case condition fails.
inline int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto lc = detail::load_config(config_path);
    const auto& cfg = lc.cfg;
    const Problem problem = make_problem(cfg.problem);
    const StepSizeSchedule schedule = resolve_schedule(cfg, problem);
    bool ok = true;

    out << "# problem " << problem.describe() << "\n";
    out << "# schedule " << to_string(schedule.family) << " eta=" << fmt17(schedule.eta) << "\n";
    out << "# sf " << cfg.sf.describe() << "\n";
    for (const auto& r : check_assumption2(schedule, cfg.iterations)) {
      ok = ok && r.holds;
      out << format_report_line(r) << "\n";
    }
    const auto profile = moment_profile(cfg.sf, cfg.iterations);
    out << "# mean " << to_string(profile.mean_direction) << ", variance " << to_string(profile.var_direction)
        << " over k=0.." << cfg.iterations << "\n";
    if (cfg.sf.kind == SFSpec::Kind::UniformRoot) {
      const auto cls = classify_prop1(cfg.sf.c1, cfg.sf.c2);
      out << "# monotone-mean case " << cls.label_string() << ", mean " << to_string(cls.mean_direction);
      if (!std::isnan(cls.case_c_c2)) out << ", boundary c2 " << fmt17(cls.case_c_c2);
      out << "\n";
    }
    if (cfg.theorem_case) {
      const auto& c = problem.constants();
      for (const auto& r : check_theorem_case(profile, *cfg.theorem_case, c.B, c.L, schedule, cfg.iterations)) {
        ok = ok && r.holds;
        out << format_report_line(r) << "\n";
      }
      out << "# informational\n";
      out << format_report_line(acceleration_check(profile, *cfg.theorem_case)) << "\n";
      out << format_report_line(check_increment_condition(profile, *cfg.theorem_case)) << "\n";
    }
    out << (ok ? "valid" : "invalid") << "\n";
    return ok ? kExitOk : kExitValidation;
  });
}

/// Runs the configured experiment. One seed writes trajectory.csv; several
/// seeds write seed_NNN.csv per seed plus mean.csv.
inline int cmd_run(const std::filesystem::path& config_path, std::optional<std::filesystem::path> out_dir,
                   std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto lc = detail::load_config(config_path);
    const auto ex = detail::prepare(lc.cfg, lc.cfg.theorem_case);
    const std::filesystem::path dir = out_dir.value_or(lc.cfg.out_dir);
    const RunSet rs = detail::run_experiment(ex);
    const RateEnvelope* case_env = ex.case_envelope ? &*ex.case_envelope : nullptr;

    Metadata meta = detail::base_metadata("run", ex, lc.seed_source);
    meta.emplace_back("config_digest", rs.config_digest);
    meta.emplace_back("n_seeds", std::to_string(rs.seeds.size()));
    meta.emplace_back("seeds", detail::join_seeds(rs.seeds));
    std::size_t truncated = 0;
    for (const auto& tr : rs.trajectories) truncated += tr.truncated ? 1 : 0;
    meta.emplace_back("truncated_runs", std::to_string(truncated));
    for (std::size_t i = 0; i < rs.trajectories.size(); ++i) {
      if (rs.trajectories[i].truncated) {
        meta.emplace_back("truncated_seed_" + std::to_string(i), rs.trajectories[i].truncation_reason);
      }
    }

    if (rs.trajectories.size() == 1) {
      write_trajectory_csv(rs.trajectories.front(), dir / "trajectory.csv", &ex.baseline, case_env);
      meta.emplace_back("certified_domain", rs.trajectories.front().certified ? "true" : "false");
    } else {
      for (std::size_t i = 0; i < rs.trajectories.size(); ++i) {
        write_trajectory_csv(rs.trajectories[i], dir / detail::seed_file_name(i), &ex.baseline, case_env);
      }
      write_trajectory_csv(detail::mean_trajectory(rs), dir / "mean.csv", &ex.baseline, case_env);
    }
    write_text_file(dir / "config.txt", serialize_config(lc.cfg));
    write_text_file(dir / "metadata.txt", format_metadata(meta));
    out << "wrote " << rs.trajectories.size() << " trajectory file(s) to " << dir.string() << "\n";
    return kExitOk;
  });
}

/// Paired multi-seed comparison of two configurations on the same problem.
inline int cmd_compare(const std::filesystem::path& config_a, const std::filesystem::path& config_b,
                       std::optional<std::filesystem::path> out_dir, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto la = detail::load_config(config_a);
    const auto lb = detail::load_config(config_b);
    const auto& a = la.cfg;
    const auto& b = lb.cfg;
    if (!(a.problem == b.problem)) throw ValidationError("compare: configs must use the same problem");
    if (a.iterations != b.iterations || a.eval_every != b.eval_every) {
      throw ValidationError("compare: configs must share iterations and eval_every");
    }
    if (a.n_seeds != b.n_seeds || a.master_seed != b.master_seed) {
      throw ValidationError("compare: configs must share n_seeds and master_seed for paired streams");
    }
    if (a.n_seeds < 2) throw ValidationError("compare: n_seeds must be >= 2");
    if (a.checkpoints && b.checkpoints && *a.checkpoints != *b.checkpoints) {
      throw ValidationError("compare: configs list different checkpoints");
    }
    const auto checkpoints = resolve_checkpoints(a.checkpoints ? a : b);

    const auto ea = detail::prepare(a, std::nullopt);
    const auto eb = detail::prepare(b, std::nullopt);
    const RunSet ra = detail::run_experiment(ea);
    const RunSet rb = detail::run_experiment(eb);
    ComparisonReport rep = compare(ra, rb, a.metric, checkpoints, a.fwer, true);
    const std::size_t matched = paired_stream_matches(ra, rb);

    const std::filesystem::path dir = out_dir.value_or(a.out_dir);
    const std::string label_a = a.sf.describe() + " / " + to_string(ea.schedule.family);
    const std::string label_b = b.sf.describe() + " / " + to_string(eb.schedule.family);
    std::string summary = format_report_summary(rep, label_a, label_b);
    summary += "paired gradient streams identical: " + std::to_string(matched) + "/" + std::to_string(a.n_seeds) + "\n";
    if (!rep.rows.empty()) {
      const auto& last = rep.rows.back();
      const char* lower = last.mean_a < last.mean_b ? "a" : (last.mean_b < last.mean_a ? "b" : "neither");
      summary += "lower mean at k=" + std::to_string(last.k) + ": " + lower + "\n";
    }

    Metadata meta = detail::base_metadata("compare", ea, la.seed_source);
    meta.emplace_back("sf_b", b.sf.describe());
    meta.emplace_back("schedule_b", std::string(to_string(eb.schedule.family)) + " eta=" + fmt17(eb.schedule.eta));
    meta.emplace_back("config_digest_a", ra.config_digest);
    meta.emplace_back("config_digest_b", rb.config_digest);
    meta.emplace_back("n_seeds", std::to_string(a.n_seeds));
    meta.emplace_back("seeds", detail::join_seeds(ra.seeds));
    meta.emplace_back("paired_streams_identical", std::to_string(matched) + "/" + std::to_string(a.n_seeds));

    write_report(rep, dir);
    write_text_file(dir / "summary.txt", summary);
    write_trajectory_csv(detail::mean_trajectory(ra), dir / "mean_a.csv", &ea.baseline);
    write_trajectory_csv(detail::mean_trajectory(rb), dir / "mean_b.csv", &eb.baseline);
    write_text_file(dir / "config_a.txt", serialize_config(a));
    write_text_file(dir / "config_b.txt", serialize_config(b));
    write_text_file(dir / "metadata.txt", format_metadata(meta));
    out << summary;
    if (matched != a.n_seeds) {
      err << "error: gradient streams differ between arms for " << (a.n_seeds - matched) << " seed(s)\n";
      return kExitRuntime;
    }
    return kExitOk;
  });
}

/// Single-path envelope and little-o diagnostic for one theorem case.
inline int cmd_envelope(const std::filesystem::path& config_path, const std::string& case_name,
                        std::optional<std::filesystem::path> out_dir, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto lc = detail::load_config(config_path);
    const TheoremCase tcase = parse_theorem_case(case_name);
    const auto ex = detail::prepare(lc.cfg, tcase);
    const std::filesystem::path dir = out_dir.value_or(lc.cfg.out_dir);
    const auto& env = *ex.case_envelope;

    RunOptions opt = ex.options;
    opt.seed = split(lc.cfg.master_seed, 0);
    Trajectory tr = run(ex.problem, ex.schedule, lc.cfg.sf, opt);
    fill_g_series(tr, ex.schedule);
    if (tr.truncated) throw std::runtime_error("envelope: run diverged: " + tr.truncation_reason);

    // min_grad_sq aligned with env.ks (eval points k >= 1)
    const Vector mins(tr.min_grad_sq.begin() + 1, tr.min_grad_sq.end());
    const std::size_t k_hi = lc.cfg.iterations;
    std::size_t k_lo = std::max(lc.cfg.eval_every, k_hi / 100 / lc.cfg.eval_every * lc.cfg.eval_every);
    if (k_lo >= k_hi) k_lo = lc.cfg.eval_every;
    if (k_lo >= k_hi) throw ValidationError("envelope: need at least two eval points after k=0");
    const auto diag = little_o_diagnostic(mins, env, k_lo, k_hi);

    std::string csv = "k,envelope_case,envelope_det,proof_form,mean,variance,sum_eta,min_grad_sq,ratio\n";
    for (std::size_t i = 0; i < env.ks.size(); ++i) {
      csv += std::to_string(env.ks[i]) + ',' + fmt17(env.values[i]) + ',' + fmt17(ex.baseline.values[i]) + ',' +
             fmt17(env.proof_form[i]) + ',' + fmt17(env.mean[i]) + ',' + fmt17(env.variance[i]) + ',' +
             fmt17(env.sum_eta[i]) + ',' + fmt17(mins[i]) + ',' + fmt17(diag.ratios[i]) + '\n';
    }

    std::string text;
    text += "case = " + std::string(to_string(tcase)) + "\n";
    text += std::string("certified = ") + (env.certified ? "true" : "false") + "\n";
    text += "k_lo = " + std::to_string(k_lo) + "\n";
    text += "k_hi = " + std::to_string(k_hi) + "\n";
    text += "r_lo = " + fmt17(diag.r_lo) + "\n";
    text += "r_hi = " + fmt17(diag.r_hi) + "\n";
    text += "window_slope = " + fmt17(diag.window_slope) + "\n";
    text += std::string("verdict = ") + to_string(diag.verdict) + "\n";
    std::string conditions;
    for (const auto& r : ex.case_reports) conditions += format_report_line(r) + "\n";

    Metadata meta = detail::base_metadata("envelope", ex, lc.seed_source);
    meta.emplace_back("config_digest", tr.config_digest);
    meta.emplace_back("seed", std::to_string(opt.seed));
    meta.emplace_back("certified_domain", tr.certified ? "true" : "false");

    write_text_file(dir / "envelope.csv", csv);
    write_trajectory_csv(tr, dir / "trajectory.csv", &ex.baseline, &env);
    write_text_file(dir / "diagnostic.txt", text);
    write_text_file(dir / "conditions.txt", conditions);
    write_text_file(dir / "metadata.txt", format_metadata(meta));
    out << conditions << text;
    return kExitOk;
  });
}

/// Plots min_grad_sq (and envelopes when present) from the trajectory CSVs
/// written by run / compare / envelope. `in` may be a directory or a file.
inline int cmd_plot(const std::filesystem::path& in, const std::filesystem::path& svg_path, std::ostream& out,
                    std::ostream& err) {
  return detail::guarded(err, [&] {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_regular_file(in)) {
      files.push_back(in);
    } else if (std::filesystem::is_directory(in)) {
      for (const char* name : {"trajectory.csv", "mean.csv", "mean_a.csv", "mean_b.csv"}) {
        if (std::filesystem::is_regular_file(in / name)) files.push_back(in / name);
      }
    }
    if (files.empty()) throw IoError(in, "no trajectory CSV found");

    std::vector<PlotSeries> series;
    auto has_values = [](const std::vector<double>& v) {
      return std::any_of(v.begin(), v.end(), [](double x) { return !std::isnan(x); });
    };
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
      const CsvTable t = parse_csv(read_text_file(files[fi]));
      if (t.header.empty() || t.header.front() != "k") throw IoError(files[fi], "not a trajectory CSV");
      const auto& ks = t.column("k");
      const std::string stem = files[fi].stem().string();
      series.push_back({stem + " min_grad_sq", ks, t.column("min_grad_sq")});
      if (fi == 0) {
        for (const char* col : {"envelope_det", "envelope_case"}) {
          const auto& v = t.column(col);
          if (has_values(v)) series.push_back({std::string(col), ks, v});
        }
      }
    }
    PlotOptions opt;
    opt.title = in.filename().string();
    opt.y_label = "min squared gradient norm";
    render_svg(series, svg_path, opt);
    out << "wrote " << svg_path.string() << " (" << series.size() << " series)\n";
    return kExitOk;
  });
}

}  // namespace slrlab
