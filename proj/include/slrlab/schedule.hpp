#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slrlab/errors.hpp"

namespace slrlab {

/// Deterministic step size eta_k. All three families are non-increasing.
struct StepSizeSchedule {
  enum class Family { Constant, InverseK, InverseSqrtK };

  Family family = Family::Constant;
  double eta = 0.1;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("schedule.eta must be positive and finite");
  }

  StepSizeSchedule scaled(double factor) const { return {family, eta * factor}; }

  friend bool operator==(const StepSizeSchedule&, const StepSizeSchedule&) = default;
};

inline const char* to_string(StepSizeSchedule::Family f) {
  switch (f) {
    case StepSizeSchedule::Family::Constant: return "constant";
    case StepSizeSchedule::Family::InverseK: return "inverse_k";
    case StepSizeSchedule::Family::InverseSqrtK: return "inverse_sqrt_k";
  }
  return "?";
}

inline double step_size(const StepSizeSchedule& s, std::size_t k) {
  const double kp1 = static_cast<double>(k + 1);
  switch (s.family) {
    case StepSizeSchedule::Family::Constant: return s.eta;
    case StepSizeSchedule::Family::InverseK: return s.eta / kp1;
    case StepSizeSchedule::Family::InverseSqrtK: return s.eta / std::sqrt(kp1);
  }
  throw ValidationError("unknown step-size family");
}

/// Running sums S_k = sum_{t<k} eta_t for k = 0..k_max (S_0 = 0). Every
/// consumer that needs S_k goes through here so the summation order, and
/// hence the bits, agree everywhere.
inline std::vector<double> partial_sums(const StepSizeSchedule& s, std::size_t k_max) {
  std::vector<double> out(k_max + 1);
  double acc = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    out[k] = acc;
    acc += step_size(s, k);
  }
  return out;
}

}  // namespace slrlab
