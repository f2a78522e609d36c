#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/problems.hpp"
#include "slrlab/schedule.hpp"
#include "slrlab/sf.hpp"
#include "slrlab/stats.hpp"
#include "slrlab/validator.hpp"

namespace slrlab {

/// Parse failure carrying the offending key and 1-based line (0 when the
/// problem is a missing key).
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& msg)
      : ValidationError(format(key, line, msg)), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& key, std::size_t line, const std::string& msg) {
    std::string s = line ? "line " + std::to_string(line) + ": " : std::string("config: ");
    return s + "key '" + key + "': " + msg;
  }
  std::string key_;
  std::size_t line_;
};

struct ProblemConfig {
  enum class Kind { Quadratic, Rosenbrock, LogReg };
  Kind kind = Kind::Quadratic;
  std::size_t dim = 10;
  double cond = 10.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t n = 200;
  std::size_t d = 5;
  double reg = 0.1;

  bool operator==(const ProblemConfig&) const = default;
};

struct ExperimentConfig {
  ProblemConfig problem;
  StepSizeSchedule::Family schedule_family = StepSizeSchedule::Family::InverseK;
  std::optional<double> eta;  // absent means "auto" = 1 / (B L)
  SFSpec sf = SFSpec{SFSpec::Kind::Constant, 1.0, 0.0, 0.0};
  std::size_t iterations = 1000;
  std::size_t eval_every = 10;
  std::size_t n_seeds = kDefaultSeeds;
  std::uint64_t master_seed = 0;
  std::optional<std::vector<std::size_t>> checkpoints;  // absent means "auto"
  std::string out_dir = "out";
  std::optional<TheoremCase> theorem_case;
  Metric metric = Metric::MinGradSq;
  double fwer = kDefaultFwer;

  bool operator==(const ExperimentConfig&) const = default;
};

inline Problem make_problem(const ProblemConfig& pc) {
  switch (pc.kind) {
    case ProblemConfig::Kind::Quadratic: return make_quadratic(pc.dim, pc.cond, pc.sigma, pc.seed);
    case ProblemConfig::Kind::Rosenbrock: return make_rosenbrock(pc.sigma);
    case ProblemConfig::Kind::LogReg: return make_logreg_nonconvex(pc.n, pc.d, pc.reg, pc.seed);
  }
  throw ValidationError("unknown problem kind");
}

inline StepSizeSchedule resolve_schedule(const ExperimentConfig& cfg, const Problem& p) {
  const double eta = cfg.eta.value_or(1.0 / (p.constants().B * p.constants().L));
  return StepSizeSchedule{cfg.schedule_family, eta};
}

inline std::vector<std::size_t> resolve_checkpoints(const ExperimentConfig& cfg) {
  return cfg.checkpoints.value_or(auto_checkpoints(cfg.iterations, cfg.eval_every));
}

namespace detail {

struct Entry {
  std::string value;
  std::size_t line;
  bool used = false;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class EntryMap {
 public:
  void add(const std::string& key, std::string value, std::size_t line) {
    if (entries_.count(key)) throw ConfigError(key, line, "duplicate key");
    entries_.emplace(key, Entry{std::move(value), line});
  }

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  const Entry& require(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw ConfigError(key, 0, "required key missing");
    return *e;
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_) {
      if (!e.used) throw ConfigError(k, e.line, "unknown or inapplicable key");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

inline double parse_real(const std::string& key, const Entry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ConfigError(key, e.line, "expected a finite real number, got '" + e.value + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const Entry& e) {
  std::uint64_t v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(key, e.line, "expected a non-negative integer, got '" + e.value + "'");
  }
  return v;
}

}  // namespace detail

inline const char* to_string(ProblemConfig::Kind k) {
  switch (k) {
    case ProblemConfig::Kind::Quadratic: return "quadratic";
    case ProblemConfig::Kind::Rosenbrock: return "rosenbrock";
    case ProblemConfig::Kind::LogReg: return "logreg";
  }
  return "?";
}

/// Parses the line-oriented `key = value` format. `#` starts a comment.
/// Unknown keys, and keys that do not apply to the chosen families, are
/// rejected.
inline ExperimentConfig parse_config(std::string_view text) {
  detail::EntryMap entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, line_no, "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "empty key");
    if (value.empty()) throw ConfigError(key, line_no, "empty value");
    entries.add(key, value, line_no);
  }

  ExperimentConfig cfg;
  auto real = [&](const std::string& key, double& dst) {
    if (const auto* e = entries.find(key)) dst = detail::parse_real(key, *e);
  };
  auto count = [&](const std::string& key, std::size_t& dst) {
    if (const auto* e = entries.find(key)) dst = static_cast<std::size_t>(detail::parse_uint(key, *e));
  };
  auto line_of = [&](const std::string& key) -> std::size_t {
    const auto* e = entries.find(key);
    return e ? e->line : 0;
  };

  // problem
  {
    const auto& e = entries.require("problem");
    auto& pc = cfg.problem;
    if (e.value == "quadratic") {
      pc.kind = ProblemConfig::Kind::Quadratic;
      count("problem.dim", pc.dim);
      real("problem.cond", pc.cond);
      real("problem.sigma", pc.sigma);
      if (const auto* s = entries.find("problem.seed")) pc.seed = detail::parse_uint("problem.seed", *s);
      if (pc.dim < 1) throw ConfigError("problem.dim", line_of("problem.dim"), "must be >= 1");
      if (pc.cond < 1.0) throw ConfigError("problem.cond", line_of("problem.cond"), "must be >= 1");
    } else if (e.value == "rosenbrock") {
      pc.kind = ProblemConfig::Kind::Rosenbrock;
      real("problem.sigma", pc.sigma);
    } else if (e.value == "logreg") {
      pc.kind = ProblemConfig::Kind::LogReg;
      count("problem.n", pc.n);
      count("problem.d", pc.d);
      real("problem.reg", pc.reg);
      if (const auto* s = entries.find("problem.seed")) pc.seed = detail::parse_uint("problem.seed", *s);
      if (pc.n < 2) throw ConfigError("problem.n", line_of("problem.n"), "must be >= 2");
      if (pc.d < 1) throw ConfigError("problem.d", line_of("problem.d"), "must be >= 1");
      if (pc.reg < 0.0) throw ConfigError("problem.reg", line_of("problem.reg"), "must be >= 0");
    } else {
      throw ConfigError("problem", e.line, "unknown problem '" + e.value + "' (quadratic, rosenbrock, logreg)");
    }
    if (pc.sigma < 0.0) throw ConfigError("problem.sigma", line_of("problem.sigma"), "must be >= 0");
  }

  // schedule
  {
    const auto& e = entries.require("schedule");
    if (e.value == "constant") {
      cfg.schedule_family = StepSizeSchedule::Family::Constant;
    } else if (e.value == "inverse_k") {
      cfg.schedule_family = StepSizeSchedule::Family::InverseK;
    } else if (e.value == "inverse_sqrt_k") {
      cfg.schedule_family = StepSizeSchedule::Family::InverseSqrtK;
    } else {
      throw ConfigError("schedule", e.line, "unknown family '" + e.value + "' (constant, inverse_k, inverse_sqrt_k)");
    }
    const auto& eta = entries.require("schedule.eta");
    if (eta.value == "auto") {
      cfg.eta.reset();
    } else {
      cfg.eta = detail::parse_real("schedule.eta", eta);
      if (!(*cfg.eta > 0.0)) throw ConfigError("schedule.eta", eta.line, "must be positive");
    }
  }

  // stochasticity factor
  {
    const auto& e = entries.require("sf");
    if (e.value == "constant") {
      const auto& v = entries.require("sf.value");
      const double value = detail::parse_real("sf.value", v);
      if (!(value > 0.0)) throw ConfigError("sf.value", v.line, "must be positive");
      cfg.sf = SFSpec{SFSpec::Kind::Constant, value, 0.0, 0.0};
    } else if (e.value == "uniform_root") {
      const auto& e1 = entries.require("sf.c1");
      const auto& e2 = entries.require("sf.c2");
      const double c1 = detail::parse_real("sf.c1", e1);
      const double c2 = detail::parse_real("sf.c2", e2);
      if (!(c1 > 0.0)) throw ConfigError("sf.c1", e1.line, "must be positive");
      if (!(c2 > c1)) throw ConfigError("sf.c2", e2.line, "must exceed sf.c1 (0 < c1 < c2)");
      cfg.sf = SFSpec{SFSpec::Kind::UniformRoot, 0.0, c1, c2};
    } else {
      throw ConfigError("sf", e.line, "unknown factor '" + e.value + "' (constant, uniform_root)");
    }
  }

  {
    const auto& e = entries.require("iterations");
    cfg.iterations = static_cast<std::size_t>(detail::parse_uint("iterations", e));
    if (cfg.iterations < 1) throw ConfigError("iterations", e.line, "must be >= 1");
  }
  count("eval_every", cfg.eval_every);
  if (cfg.eval_every < 1) throw ConfigError("eval_every", line_of("eval_every"), "must be >= 1");
  if (cfg.iterations % cfg.eval_every != 0) {
    throw ConfigError("eval_every", line_of("eval_every"), "must divide iterations");
  }
  count("n_seeds", cfg.n_seeds);
  if (cfg.n_seeds < 1) throw ConfigError("n_seeds", line_of("n_seeds"), "must be >= 1");
  if (const auto* e = entries.find("master_seed")) cfg.master_seed = detail::parse_uint("master_seed", *e);

  if (const auto* e = entries.find("checkpoints"); e && e->value != "auto") {
    std::vector<std::size_t> ks;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      detail::Entry tmp{detail::trim(item), e->line};
      const auto k = static_cast<std::size_t>(detail::parse_uint("checkpoints", tmp));
      if (k == 0 || k % cfg.eval_every != 0 || k > cfg.iterations) {
        throw ConfigError("checkpoints", e->line, "checkpoint " + std::to_string(k) + " is not a positive eval point");
      }
      if (!ks.empty() && k <= ks.back()) throw ConfigError("checkpoints", e->line, "checkpoints must be ascending");
      ks.push_back(k);
    }
    if (ks.empty()) throw ConfigError("checkpoints", e->line, "empty list");
    cfg.checkpoints = std::move(ks);
  }
  if (const auto* e = entries.find("out_dir")) cfg.out_dir = e->value;
  if (const auto* e = entries.find("theorem_case"); e && e->value != "none") {
    try {
      cfg.theorem_case = parse_theorem_case(e->value);
    } catch (const ValidationError& err) {
      throw ConfigError("theorem_case", e->line, err.what());
    }
  }
  if (const auto* e = entries.find("metric")) {
    try {
      cfg.metric = parse_metric(e->value);
    } catch (const ValidationError& err) {
      throw ConfigError("metric", e->line, err.what());
    }
  }
  real("fwer", cfg.fwer);
  if (!(cfg.fwer > 0.0 && cfg.fwer < 1.0)) throw ConfigError("fwer", line_of("fwer"), "must lie in (0, 1)");

  entries.reject_unused();
  return cfg;
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  using detail::fmt17;
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  const auto& pc = cfg.problem;
  kv("problem", to_string(pc.kind));
  switch (pc.kind) {
    case ProblemConfig::Kind::Quadratic:
      kv("problem.dim", std::to_string(pc.dim));
      kv("problem.cond", fmt17(pc.cond));
      kv("problem.sigma", fmt17(pc.sigma));
      kv("problem.seed", std::to_string(pc.seed));
      break;
    case ProblemConfig::Kind::Rosenbrock:
      kv("problem.sigma", fmt17(pc.sigma));
      break;
    case ProblemConfig::Kind::LogReg:
      kv("problem.n", std::to_string(pc.n));
      kv("problem.d", std::to_string(pc.d));
      kv("problem.reg", fmt17(pc.reg));
      kv("problem.seed", std::to_string(pc.seed));
      break;
  }
  kv("schedule", to_string(cfg.schedule_family));
  kv("schedule.eta", cfg.eta ? fmt17(*cfg.eta) : "auto");
  kv("sf", to_string(cfg.sf.kind));
  if (cfg.sf.kind == SFSpec::Kind::Constant) {
    kv("sf.value", fmt17(cfg.sf.value));
  } else {
    kv("sf.c1", fmt17(cfg.sf.c1));
    kv("sf.c2", fmt17(cfg.sf.c2));
  }
  kv("iterations", std::to_string(cfg.iterations));
  kv("eval_every", std::to_string(cfg.eval_every));
  kv("n_seeds", std::to_string(cfg.n_seeds));
  kv("master_seed", std::to_string(cfg.master_seed));
  if (cfg.checkpoints) {
    std::string list;
    for (std::size_t k : *cfg.checkpoints) list += (list.empty() ? "" : ",") + std::to_string(k);
    kv("checkpoints", list);
  } else {
    kv("checkpoints", "auto");
  }
  kv("out_dir", cfg.out_dir);
  kv("theorem_case", cfg.theorem_case ? to_string(*cfg.theorem_case) : "none");
  kv("metric", to_string(cfg.metric));
  kv("fwer", fmt17(cfg.fwer));
  return s;
}

}  // namespace slrlab
