#ifndef GOSSIPEG_STEP_HPP_
#define GOSSIPEG_STEP_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "gossipeg/error.hpp"

namespace gossipeg {

enum class StepKind { constant, decreasing, theorem_sm, theorem_m, theorem_nm };

inline std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::constant: return "constant";
    case StepKind::decreasing: return "decreasing";
    case StepKind::theorem_sm: return "theorem_sm";
    case StepKind::theorem_m: return "theorem_m";
    case StepKind::theorem_nm: return "theorem_nm";
  }
  return "?";
}

inline StepKind parse_step_kind(std::string_view name) {
  for (auto kind : {StepKind::constant, StepKind::decreasing, StepKind::theorem_sm, StepKind::theorem_m,
                    StepKind::theorem_nm})
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown step kind '" + std::string(name) + "'");
}

/// Step-size rule gamma_k.
///
/// The theorem kinds return the largest constant step allowed by the
/// corresponding convergence guarantee:
///   strongly monotone  gamma <= p / (120 L tau)
///   monotone           gamma <= 1 / (3 L)
///   non-monotone       gamma <= 1 / (4 L)
struct StepSchedule {
  StepKind kind = StepKind::constant;
  double gamma = 0.0;  // constant
  double alpha = 0.0;  // decreasing: alpha / (k + beta)
  double beta = 0.0;
  double L = 0.0;      // theorem kinds
  double p = 1.0;
  std::size_t tau = 1;

  static StepSchedule constant_step(double gamma) { return {.kind = StepKind::constant, .gamma = gamma}; }
  static StepSchedule decreasing_step(double alpha, double beta) {
    return {.kind = StepKind::decreasing, .alpha = alpha, .beta = beta};
  }
  static StepSchedule theorem(StepKind kind, double L, double p = 1.0, std::size_t tau = 1) {
    return {.kind = kind, .L = L, .p = p, .tau = tau};
  }

  void validate() const {
    switch (kind) {
      case StepKind::constant:
        detail::require(gamma > 0.0 && std::isfinite(gamma), "constant step needs gamma > 0");
        break;
      case StepKind::decreasing:
        detail::require(alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta),
                        "decreasing step needs alpha > 0 and beta > 0");
        break;
      case StepKind::theorem_sm:
        detail::require(p > 0.0 && p <= 1.0 && tau >= 1, "theorem_sm step needs p in (0,1] and tau >= 1");
        [[fallthrough]];
      case StepKind::theorem_m:
      case StepKind::theorem_nm:
        detail::require(L > 0.0 && std::isfinite(L), "theorem step needs L > 0");
        break;
    }
  }
};

inline double step_value(const StepSchedule& s, std::size_t k) {
  switch (s.kind) {
    case StepKind::constant: return s.gamma;
    case StepKind::decreasing: return s.alpha / (static_cast<double>(k) + s.beta);
    case StepKind::theorem_sm: return s.p / (120.0 * s.L * static_cast<double>(s.tau));
    case StepKind::theorem_m: return 1.0 / (3.0 * s.L);
    case StepKind::theorem_nm: return 1.0 / (4.0 * s.L);
  }
  return 0.0;
}

/// Budget-dependent constant step of the monotone analysis:
///   min{ 1/(3L), (2 Oc^2 M / (5 (K+1) sigma^2))^(1/2), (Oc^2 / (6 (K+1)^2 L^2 Delta))^(1/4) }
/// with Oc the diameter of the gap set. Terms with a zero denominator drop out.
inline double monotone_budget_step(double L, double sigma2, double M, std::size_t K, double omega_c, double delta) {
  detail::require(L > 0.0 && M >= 1.0 && omega_c > 0.0 && sigma2 >= 0.0 && delta >= 0.0,
                  "monotone_budget_step: invalid inputs");
  const double k1 = static_cast<double>(K) + 1.0;
  double gamma = 1.0 / (3.0 * L);
  if (sigma2 > 0.0) gamma = std::min(gamma, std::sqrt(2.0 * omega_c * omega_c * M / (5.0 * k1 * sigma2)));
  if (delta > 0.0) gamma = std::min(gamma, std::pow(omega_c * omega_c / (6.0 * k1 * k1 * L * L * delta), 0.25));
  return gamma;
}

}  // namespace gossipeg

#endif  // GOSSIPEG_STEP_HPP_
