#ifndef GOSSIPEG_METRICS_HPP_
#define GOSSIPEG_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gossipeg/error.hpp"
#include "gossipeg/problem.hpp"
#include "gossipeg/rng.hpp"

namespace gossipeg {

/// Metrics at one recorded iteration. Columns of the state are machines.
struct RunRecord {
  std::size_t k = 0;
  double gamma = 0.0;                    // step used by round k (next round)
  std::optional<double> dist2;           // (1/M) sum_m |z_m - z*|^2
  std::optional<double> mean_dist2;      // |zbar - z*|^2
  double consensus_err = 0.0;            // (1/M) sum_m |z_m - zbar|^2
  std::optional<double> gap;             // restricted gap at the ergodic point
  double avg_sq_opnorm = 0.0;            // (1/(k+1)) sum_{i<=k} |F(zbar^i)|^2
  double max_mean_norm = 0.0;            // max_{i<=k} |zbar^i|
  std::optional<Iterate> ergodic_point;  // mean of zbar^{i+1/3}, i < k
};

inline Eigen::VectorXd machine_average(const Eigen::MatrixXd& Z) { return Z.rowwise().mean(); }

/// Err = (1/M) sum_m |z_m - zbar|^2.
inline double consensus_error(const Eigen::MatrixXd& Z) {
  if (Z.cols() == 0) return 0.0;
  const Eigen::VectorXd mean = machine_average(Z);
  return (Z.colwise() - mean).squaredNorm() / static_cast<double>(Z.cols());
}

/// (1/M) sum_m |z_m - target|^2.
inline double mean_sq_distance(const Eigen::MatrixXd& Z, const Eigen::VectorXd& target) {
  return (Z.colwise() - target).squaredNorm() / static_cast<double>(Z.cols());
}

/// Running mean of |F(zbar^k)|^2.
class OperatorNormAverage {
 public:
  template <VariationalOperator Op>
  void add(const Op& op, const Eigen::VectorXd& mean_point) {
    sum_ += mean_operator(op, mean_point).squaredNorm();
    ++count_;
  }

  double value() const noexcept { return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_); }
  std::size_t count() const noexcept { return count_; }

 private:
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

template <VariationalOperator Op>
double avg_sq_operator_norm(std::span<const Iterate> history, const Op& op) {
  OperatorNormAverage avg;
  for (const auto& z : history) avg.add(op, z);
  return avg.value();
}

struct GapOptions {
  std::size_t restarts = 16;
  std::uint64_t seed = 0;
  double stationarity_tol = 1e-10;
  std::size_t max_ascent_iter = 100000;
  /// Dense-grid cross-check when 2n <= 4.
  bool grid_check = true;
  std::size_t grid_points = 1000000;
};

namespace detail {

inline double gap_objective(const AffineForm& F, const Eigen::VectorXd& u, const Eigen::VectorXd& z) {
  return (F.jacobian * z + F.offset).dot(u - z);
}

inline void project_ball(Eigen::VectorXd& z, const Eigen::VectorXd& center, double radius) {
  const double dist = (z - center).norm();
  if (dist > radius) z = center + (radius / dist) * (z - center);
}

/// Projected gradient ascent on g(z) = <J z + c, u - z> from `start`.
inline double ascend_gap(const AffineForm& F, const Eigen::VectorXd& u, const Eigen::VectorXd& center,
                         double radius, Eigen::VectorXd z, const GapOptions& opt) {
  const Eigen::MatrixXd& J = F.jacobian;
  // grad g = J^T u - (J + J^T) z - c
  const Eigen::MatrixXd H = J + J.transpose();
  const Eigen::VectorXd lin = J.transpose() * u - F.offset;
  const double curvature = H.norm();  // Frobenius norm bounds the spectral norm
  project_ball(z, center, radius);
  double best = gap_objective(F, u, z);
  for (std::size_t it = 0; it < opt.max_ascent_iter; ++it) {
    const Eigen::VectorXd grad = lin - H * z;
    const double gnorm = grad.norm();
    if (gnorm == 0.0) break;
    // Linear objectives (H = 0) jump straight to the boundary.
    const double eta = curvature > 0.0 ? 1.0 / curvature : 4.0 * radius / gnorm;
    Eigen::VectorXd next = z + eta * grad;
    project_ball(next, center, radius);
    const double step = (next - z).norm();
    z = std::move(next);
    best = std::max(best, gap_objective(F, u, z));
    if (step <= opt.stationarity_tol * (1.0 + radius)) break;
  }
  return best;
}

inline Eigen::VectorXd uniform_in_ball(const Eigen::VectorXd& center, double radius, NormalStream& stream) {
  const Eigen::Index d = center.size();
  Eigen::VectorXd dir(d);
  for (Eigen::Index i = 0; i < d; ++i) dir[i] = stream();
  const double n = dir.norm();
  if (n == 0.0) return center;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::pow(unif(stream.engine()), 1.0 / static_cast<double>(d));
  return center + (r / n) * dir;
}

}  // namespace detail

/// Maximum of g over a tensor grid on the ball (cube cells clipped to the ball).
inline double gap_grid_search(const AffineForm& F, const Eigen::VectorXd& u, const Eigen::VectorXd& center,
                              double radius, std::size_t points) {
  const Eigen::Index d = center.size();
  auto per_axis = static_cast<std::size_t>(
      std::max(3.0, std::floor(std::pow(static_cast<double>(points), 1.0 / static_cast<double>(d)) + 1e-9)));
  if (per_axis % 2 == 0) --per_axis;  // odd count keeps the center on the grid
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd z(d);
  double best = -std::numeric_limits<double>::infinity();
  const double h = 2.0 * radius / static_cast<double>(per_axis - 1);
  while (true) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = center[i] - radius + h * static_cast<double>(idx[static_cast<std::size_t>(i)]);
    if ((z - center).squaredNorm() <= radius * radius) best = std::max(best, detail::gap_objective(F, u, z));
    std::size_t axis = 0;
    while (axis < idx.size() && ++idx[axis] == per_axis) idx[axis++] = 0;
    if (axis == idx.size()) break;
  }
  return best;
}

/// Lower estimate of sup_{|z - center| <= radius} <F(z), u - z>.
///
/// Multistart projected gradient ascent; for 2n <= 4 a dense grid search is
/// also run and the larger value returned.
template <VariationalOperator Op>
double restricted_gap(const Op& op, const Eigen::VectorXd& u, const Eigen::VectorXd& center, double radius,
                      const GapOptions& opt = {}) {
  detail::require(radius > 0.0, "restricted_gap: radius must be > 0");
  detail::require(u.size() == static_cast<Eigen::Index>(op.dim()) && center.size() == u.size(),
                  "restricted_gap: point dimensions differ from the operator");
  const std::optional<AffineForm> form = op.affine_form();
  if (!form) throw InvalidArgument("restricted_gap: only affine operators are supported");

  NormalStream stream(derive_seed(opt.seed, 0x676170ULL));
  double best = detail::ascend_gap(*form, u, center, radius, center, opt);
  best = std::max(best, detail::ascend_gap(*form, u, center, radius, u, opt));
  for (std::size_t r = 0; r < opt.restarts; ++r)
    best = std::max(best, detail::ascend_gap(*form, u, center, radius,
                                             detail::uniform_in_ball(center, radius, stream), opt));
  if (opt.grid_check && u.size() <= 4)
    best = std::max(best, gap_grid_search(*form, u, center, radius, opt.grid_points));
  return best;
}

enum class Regime { SM, M, NM };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::SM: return "SM";
    case Regime::M: return "M";
    case Regime::NM: return "NM";
  }
  return "?";
}

/// Network error (tau/p) (D^2 tau/p + sigma^2).
inline double network_delta(double tau, double p, double D2, double sigma2) {
  return (tau / p) * (D2 * tau / p + sigma2);
}

struct RateInputs {
  double L = 1.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double D = 0.0;
  double M = 1.0;
  double p = 1.0;
  double tau = 1.0;
  double K = 1.0;
  double r0_sq = 0.0;    // |z0 - z*|^2
  double omega_c = 1.0;  // diameter of the gap set
  std::optional<double> omega;  // bound on |zbar^k| (and |z*| for NM)
};

struct RateTerm {
  std::string name;
  double value = 0.0;
};

struct RatePrediction {
  Regime regime = Regime::SM;
  RateInputs inputs;
  std::vector<RateTerm> terms;
  double delta = 0.0;

  double total() const {
    return std::accumulate(terms.begin(), terms.end(), 0.0,
                           [](double acc, const RateTerm& t) { return acc + t.value; });
  }
  double term(std::string_view name) const {
    for (const auto& t : terms)
      if (t.name == name) return t.value;
    throw InvalidArgument("no rate term named '" + std::string(name) + "'");
  }
};

/// Evaluates each addend of the convergence bound for `regime` with every
/// hidden absolute constant set to 1. Only useful for shape comparisons.
inline RatePrediction rate_predict(Regime regime, const RateInputs& in) {
  detail::require(in.L > 0.0 && in.p > 0.0 && in.p <= 1.0 && in.tau >= 1.0 && in.K > 0.0 && in.M >= 1.0,
                  "rate_predict: need L > 0, p in (0,1], tau >= 1, K > 0, M >= 1");
  detail::require(in.sigma2 >= 0.0 && in.D >= 0.0, "rate_predict: sigma2 and D must be >= 0");
  RatePrediction out;
  out.regime = regime;
  out.inputs = in;
  out.delta = network_delta(in.tau, in.p, in.D * in.D, in.sigma2);
  const double delta = out.delta;
  const double sigma = std::sqrt(in.sigma2);
  const double L = in.L;
  const double K = in.K;

  switch (regime) {
    case Regime::SM:
      detail::require(in.mu > 0.0, "rate_predict: strongly monotone regime needs mu > 0");
      out.terms = {
          {"exp_term", in.r0_sq * std::exp(-in.mu * K * in.p / (240.0 * L * in.tau))},
          {"stoch_term", in.sigma2 / (in.mu * in.mu * in.M * K)},
          {"network_term", L * L * delta / (std::pow(in.mu, 4) * K * K)},
      };
      break;
    case Regime::M: {
      const double oc = in.omega_c;
      const double sd = std::sqrt(delta);
      if (!in.omega) {
        out.terms = {
            {"det_term", L * oc * oc / K},
            {"stoch_term", sigma * oc / std::sqrt(in.M * K)},
            {"network_term", std::sqrt(L * oc * oc * oc * sd) / std::sqrt(K)},
            {"network_bias_term", std::sqrt((delta + L * L * oc * oc) * oc * sd / (K * L))},
        };
      } else {
        const double om = *in.omega;
        out.terms = {
            {"det_term", L * oc * oc / K},
            {"stoch_term", sigma * oc / std::sqrt(in.M * K)},
            {"network_term", std::sqrt(L * oc * oc * oc * sd) / std::pow(K, 0.75)},
            {"network_bias_term", std::sqrt(((om + oc) * L * sd + delta) * oc * oc / K)},
        };
      }
      break;
    }
    case Regime::NM: {
      const double r0 = std::sqrt(in.r0_sq);
      if (!in.omega) {
        out.terms = {
            {"det_term", L * L * in.r0_sq / K},
            {"stoch_term", in.sigma2 / in.M},
            {"network_term", L * r0 * std::sqrt(delta)},
            {"network_decay_term", std::sqrt(L * r0 * std::pow(delta, 0.75)) / std::sqrt(K)},
        };
      } else {
        const double om = *in.omega;
        out.terms = {
            {"det_term", L * L * om * om / K},
            {"stoch_term", in.sigma2 / in.M},
            {"network_decay_term", std::pow(L * om * delta, 2.0 / 3.0) / std::cbrt(K)},
            {"network_term", L * om * std::sqrt(delta)},
        };
      }
      break;
    }
  }
  return out;
}

}  // namespace gossipeg

#endif  // GOSSIPEG_METRICS_HPP_
