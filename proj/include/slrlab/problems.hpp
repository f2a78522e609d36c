#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "slrlab/errors.hpp"
#include "slrlab/rng.hpp"

namespace slrlab {

using Vector = std::vector<double>;

/// One stochastic gradient draw. `sample_tag` identifies the realized
/// randomness: the summand index for finite sums, a fingerprint of the noise
/// bits for additive-noise models.
struct GradientSample {
  Vector vector;
  std::uint64_t sample_tag = 0;
};

/// Constants of the expected-smoothness bound
///   E||grad f_v(x)||^2 <= A (f(x) - f*) + B ||grad f(x)||^2 + C
/// plus the smoothness constant L. When f* is unknown, `f_lower` is a
/// certified lower bound on f used in its place.
struct ProblemConstants {
  double L = 1.0;
  std::optional<double> f_star;
  double f_lower = 0.0;
  double A = 0.0;
  double B = 1.0;
  double C = 0.0;
};

/// Axis-aligned box [lo, hi]^dim on which L is certified.
struct Box {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

inline void require_finite(std::span<const double> x, std::size_t dim) {
  if (x.size() != dim) throw ValidationError("point has wrong dimension");
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("non-finite coordinate in input point");
  }
}

inline std::uint64_t fingerprint(std::span<const double> v) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

inline GradientSample add_noise(Vector g, double sigma, Rng& rng) {
  if (sigma == 0.0) return {std::move(g), 0};
  Vector xi(g.size());
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : xi) v = normal(rng);
  const std::uint64_t tag = fingerprint(xi);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += xi[i];
  return {std::move(g), tag};
}

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

/// f(x) = 1/2 sum_i lambda_i x_i^2 plus N(0, sigma^2) noise per coordinate.
struct QuadraticModel {
  Vector eigenvalues;
  double sigma = 0.0;
};

/// f(x, y) = (1 - x)^2 + 100 (y - x^2)^2 plus additive gradient noise.
struct RosenbrockModel {
  double sigma = 0.0;
};

/// Finite sum of logistic losses with the nonconvex penalty
/// reg * sum_j w_j^2 / (1 + w_j^2) folded into every summand.
struct LogRegModel {
  std::size_t n = 0;
  std::size_t d = 0;
  Vector features;  // n x d, row-major
  Vector labels;    // +1 / -1
  double reg = 0.0;
};

class Problem {
 public:
  using Model = std::variant<QuadraticModel, RosenbrockModel, LogRegModel>;

  Problem(std::string name, std::size_t dim, ProblemConstants constants, Model model,
          std::optional<Box> box = std::nullopt, std::string params = {})
      : name_(std::move(name)),
        dim_(dim),
        constants_(constants),
        model_(std::move(model)),
        box_(box),
        params_(std::move(params)) {}

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  const ProblemConstants& constants() const { return constants_; }
  const Model& model() const { return model_; }
  std::optional<Box> domain_box() const { return box_; }

  /// Canonical parameter string, stable across runs.
  std::string describe() const { return name_ + "(" + params_ + ")"; }

  /// Notes recorded while constructing (e.g. data reseeds).
  const std::vector<std::string>& notes() const { return notes_; }
  void add_note(std::string n) { notes_.push_back(std::move(n)); }

  double loss(std::span<const double> x) const {
    detail::require_finite(x, dim_);
    return std::visit([&](const auto& m) { return loss_of(m, x); }, model_);
  }

  Vector full_gradient(std::span<const double> x) const {
    detail::require_finite(x, dim_);
    return std::visit([&](const auto& m) { return gradient_of(m, x); }, model_);
  }

  GradientSample stochastic_gradient(std::span<const double> x, Rng& rng) const {
    detail::require_finite(x, dim_);
    return std::visit(
        [&](const auto& m) -> GradientSample {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, LogRegModel>) {
            std::uniform_int_distribution<std::size_t> pick(0, m.n - 1);
            const std::size_t i = pick(rng);
            return {summand_gradient_of(m, x, i), static_cast<std::uint64_t>(i)};
          } else {
            return detail::add_noise(gradient_of(m, x), m.sigma, rng);
          }
        },
        model_);
  }

  /// Number of summands for finite-sum problems.
  std::optional<std::size_t> finite_sum_size() const {
    if (const auto* m = std::get_if<LogRegModel>(&model_)) return m->n;
    return std::nullopt;
  }

  Vector summand_gradient(std::span<const double> x, std::size_t i) const {
    detail::require_finite(x, dim_);
    const auto* m = std::get_if<LogRegModel>(&model_);
    if (m == nullptr) throw ValidationError(name_ + " is not a finite-sum problem");
    if (i >= m->n) throw ValidationError("summand index out of range");
    return summand_gradient_of(*m, x, i);
  }

  /// Additive-noise standard deviation (0 for finite sums).
  double noise_sigma() const {
    return std::visit(
        [](const auto& m) -> double {
          if constexpr (requires { m.sigma; }) return m.sigma;
          return 0.0;
        },
        model_);
  }

  bool in_certified_domain(std::span<const double> x) const {
    if (!box_) return true;
    return std::all_of(x.begin(), x.end(), [&](double v) { return v >= box_->lo && v <= box_->hi; });
  }

 private:
  static double loss_of(const QuadraticModel& m, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += m.eigenvalues[i] * x[i] * x[i];
    return 0.5 * s;
  }
  static Vector gradient_of(const QuadraticModel& m, std::span<const double> x) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = m.eigenvalues[i] * x[i];
    return g;
  }

  static double loss_of(const RosenbrockModel&, std::span<const double> x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  }
  static Vector gradient_of(const RosenbrockModel&, std::span<const double> x) {
    const double b = x[1] - x[0] * x[0];
    return {-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b, 200.0 * b};
  }

  static double margin(const LogRegModel& m, std::span<const double> w, std::size_t i) {
    double z = 0.0;
    for (std::size_t j = 0; j < m.d; ++j) z += m.features[i * m.d + j] * w[j];
    return m.labels[i] * z;
  }
  static double penalty(const LogRegModel& m, std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += v * v / (1.0 + v * v);
    return m.reg * s;
  }
  static double loss_of(const LogRegModel& m, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) s += detail::softplus(-margin(m, w, i));
    return s / static_cast<double>(m.n) + penalty(m, w);
  }
  static Vector summand_gradient_of(const LogRegModel& m, std::span<const double> w, std::size_t i) {
    const double coef = -m.labels[i] * detail::sigmoid(-margin(m, w, i));
    Vector g(m.d);
    for (std::size_t j = 0; j < m.d; ++j) {
      const double t = 1.0 + w[j] * w[j];
      g[j] = coef * m.features[i * m.d + j] + m.reg * 2.0 * w[j] / (t * t);
    }
    return g;
  }
  static Vector gradient_of(const LogRegModel& m, std::span<const double> w) {
    Vector g(m.d, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
      const double coef = -m.labels[i] * detail::sigmoid(-margin(m, w, i));
      for (std::size_t j = 0; j < m.d; ++j) g[j] += coef * m.features[i * m.d + j];
    }
    for (std::size_t j = 0; j < m.d; ++j) {
      const double t = 1.0 + w[j] * w[j];
      g[j] = g[j] / static_cast<double>(m.n) + m.reg * 2.0 * w[j] / (t * t);
    }
    return g;
  }

  std::string name_;
  std::size_t dim_;
  ProblemConstants constants_;
  Model model_;
  std::optional<Box> box_;
  std::string params_;
  std::vector<std::string> notes_;
};

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

using detail::fmt17;

/// Diagonal quadratic with eigenvalues log-spaced over [1, cond] (a single
/// eigenvalue equal to cond when dim = 1). The seed permutes their order.
/// Constants (A, B, C) = (0, 1, sigma^2 dim).
inline Problem make_quadratic(std::size_t dim, double cond, double sigma, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("quadratic: dim must be >= 1");
  if (!(cond >= 1.0) || !std::isfinite(cond)) throw ValidationError("quadratic: cond must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("quadratic: sigma must be >= 0");

  Vector eig(dim);
  if (dim == 1) {
    eig[0] = cond;
  } else {
    for (std::size_t i = 0; i < dim; ++i) {
      eig[i] = std::pow(cond, static_cast<double>(i) / static_cast<double>(dim - 1));
    }
    eig.back() = cond;
    Rng rng(stream_seed(seed, Stream::Data));
    std::shuffle(eig.begin(), eig.end(), rng);
  }
  ProblemConstants c;
  c.L = cond;
  c.f_star = 0.0;
  c.f_lower = 0.0;
  c.A = 0.0;
  c.B = 1.0;
  c.C = sigma * sigma * static_cast<double>(dim);
  std::string params = "dim=" + std::to_string(dim) + ",cond=" + detail::fmt17(cond) +
                       ",sigma=" + detail::fmt17(sigma) + ",seed=" + std::to_string(seed);
  return Problem("quadratic", dim, c, QuadraticModel{std::move(eig), sigma}, std::nullopt, std::move(params));
}

/// Rosenbrock in 2-D. L = 6402 is the Gershgorin bound of the Hessian
///   [[2 - 400y + 1200x^2, -400x], [-400x, 200]]
/// over [-2, 2]^2; outside that box the run is marked uncertified.
inline Problem make_rosenbrock(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("rosenbrock: sigma must be >= 0");
  ProblemConstants c;
  c.L = 6402.0;
  c.f_star = 0.0;
  c.f_lower = 0.0;
  c.A = 0.0;
  c.B = 1.0;
  c.C = 2.0 * sigma * sigma;
  return Problem("rosenbrock", 2, c, RosenbrockModel{sigma}, Box{-2.0, 2.0}, "sigma=" + detail::fmt17(sigma));
}

/// Synthetic logistic regression with 10% label flips and the nonconvex
/// penalty. If every label comes out equal the data are regenerated from
/// seed + 1 (repeatedly) and a note is recorded.
///
/// L = lambda_max(A^T A) / (4n) + 2 reg, since the logistic Hessian is at most
/// a a^T / 4 per sample and |d^2/dt^2 t^2/(1+t^2)| <= 2.
/// Per-summand gradients obey ||grad f_i|| <= ||a_i|| + reg * G sqrt(d) with
/// G = max_t |2t/(1+t^2)^2| = 3 sqrt(3) / 8, giving A = 0, B = 1 and
/// C = mean_i of that bound squared. f_lower = 0.
inline Problem make_logreg_nonconvex(std::size_t n, std::size_t d, double reg, std::uint64_t seed) {
  if (n < 2) throw ValidationError("logreg: n must be >= 2");
  if (d < 1) throw ValidationError("logreg: d must be >= 1");
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw ValidationError("logreg: reg must be >= 0");

  LogRegModel m{n, d, Vector(n * d), Vector(n), reg};
  std::vector<std::string> notes;
  std::uint64_t data_seed = seed;
  for (;;) {
    Rng rng(stream_seed(data_seed, Stream::Data));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution flip(0.1);
    Vector w_true(d);
    for (auto& v : w_true) v = normal(rng);
    for (auto& v : m.features) v = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += m.features[i * d + j] * w_true[j];
      double y = z >= 0.0 ? 1.0 : -1.0;
      if (flip(rng)) y = -y;
      m.labels[i] = y;
    }
    const bool degenerate =
        std::all_of(m.labels.begin(), m.labels.end(), [&](double y) { return y == m.labels.front(); });
    if (!degenerate) break;
    notes.push_back("degenerate labels for data seed " + std::to_string(data_seed) + ", regenerated with seed " +
                    std::to_string(data_seed + 1));
    ++data_seed;
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      m.features.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd gram = a.transpose() * a;
  const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();

  const double pen_grad = reg * (3.0 * std::sqrt(3.0) / 8.0) * std::sqrt(static_cast<double>(d));
  double c_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double bound = a.row(static_cast<Eigen::Index>(i)).norm() + pen_grad;
    c_sum += bound * bound;
  }

  ProblemConstants c;
  c.L = lambda_max / (4.0 * static_cast<double>(n)) + 2.0 * reg;
  c.f_star = std::nullopt;
  c.f_lower = 0.0;
  c.A = 0.0;
  c.B = 1.0;
  c.C = c_sum / static_cast<double>(n);
  std::string params = "n=" + std::to_string(n) + ",d=" + std::to_string(d) + ",reg=" + detail::fmt17(reg) +
                       ",seed=" + std::to_string(seed);
  Problem p("logreg", d, c, std::move(m), std::nullopt, std::move(params));
  for (auto& note : notes) p.add_note(std::move(note));
  return p;
}

}  // namespace slrlab
