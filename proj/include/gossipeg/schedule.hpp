#ifndef GOSSIPEG_SCHEDULE_HPP_
#define GOSSIPEG_SCHEDULE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "gossipeg/error.hpp"
#include "gossipeg/rng.hpp"
#include "gossipeg/topology.hpp"

namespace gossipeg {

enum class ScheduleKind { constant, periodic_local, random_clusters, full_every_period, explicit_sequence };

inline std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::periodic_local: return "periodic_local";
    case ScheduleKind::random_clusters: return "random_clusters";
    case ScheduleKind::full_every_period: return "full_every_period";
    case ScheduleKind::explicit_sequence: return "explicit_sequence";
  }
  return "?";
}

inline ScheduleKind parse_schedule_kind(std::string_view name) {
  for (auto kind : {ScheduleKind::constant, ScheduleKind::periodic_local, ScheduleKind::random_clusters,
                    ScheduleKind::full_every_period, ScheduleKind::explicit_sequence})
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown schedule kind '" + std::string(name) + "'");
}

struct ScheduleParams {
  std::optional<MixingMatrix> base;    // constant, periodic_local
  std::size_t period = 1;              // periodic_local, random_clusters, full_every_period
  std::size_t cluster_size = 4;        // random_clusters
  std::vector<MixingMatrix> sequence;  // explicit_sequence
};

/// Rule producing the gossip matrix W^k of iteration k.
///
/// Matrices are a pure function of (kind, params, seed, k): there is no cursor,
/// so concurrent callers at different k see the same sequence as a serial caller.
class TopologySchedule {
 public:
  using MatrixPtr = std::shared_ptr<const MixingMatrix>;

  TopologySchedule(ScheduleKind kind, ScheduleParams params, std::size_t machines, std::uint64_t seed)
      : kind_(kind), period_(params.period), cluster_size_(params.cluster_size), machines_(machines), seed_(seed) {
    detail::require(machines_ >= 1, "schedule: M must be >= 1");
    detail::require(period_ >= 1, "schedule: period (tau) must be >= 1");
    identity_ = std::make_shared<const MixingMatrix>(identity_matrix(machines_));
    switch (kind_) {
      case ScheduleKind::constant:
      case ScheduleKind::periodic_local:
        detail::require(params.base.has_value(), "schedule: kind needs a base matrix");
        detail::require(static_cast<std::size_t>(params.base->size()) == machines_,
                        "schedule: base matrix size differs from M");
        base_ = std::make_shared<const MixingMatrix>(std::move(*params.base));
        break;
      case ScheduleKind::full_every_period:
        base_ = std::make_shared<const MixingMatrix>(full_matrix(machines_));
        break;
      case ScheduleKind::random_clusters:
        detail::require(cluster_size_ >= 1, "schedule: cluster size must be >= 1");
        detail::require(machines_ % cluster_size_ == 0, "schedule: cluster size must divide M");
        break;
      case ScheduleKind::explicit_sequence:
        detail::require(!params.sequence.empty(), "schedule: explicit sequence is empty");
        for (auto& W : params.sequence) {
          detail::require(static_cast<std::size_t>(W.size()) == machines_,
                          "schedule: sequence matrix size differs from M");
          sequence_.push_back(std::make_shared<const MixingMatrix>(std::move(W)));
        }
        break;
    }
  }

  ScheduleKind kind() const noexcept { return kind_; }
  std::size_t machines() const noexcept { return machines_; }
  std::size_t period() const noexcept { return period_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// True when every iteration emits the same matrix.
  bool is_constant() const noexcept {
    switch (kind_) {
      case ScheduleKind::constant: return true;
      case ScheduleKind::periodic_local: return period_ == 1;
      case ScheduleKind::full_every_period: return period_ == 1;
      case ScheduleKind::explicit_sequence: return sequence_.size() == 1;
      case ScheduleKind::random_clusters: return false;
    }
    return false;
  }

  MatrixPtr at(std::size_t k) const {
    switch (kind_) {
      case ScheduleKind::constant:
        return base_;
      case ScheduleKind::periodic_local:
      case ScheduleKind::full_every_period:
        return (k % period_ == period_ - 1) ? base_ : identity_;
      case ScheduleKind::explicit_sequence:
        return sequence_[k % sequence_.size()];
      case ScheduleKind::random_clusters:
        return std::make_shared<const MixingMatrix>(cluster_matrix(k / period_));
    }
    return identity_;
  }

  /// Node partition used during period `l` (random_clusters only).
  std::vector<std::vector<std::size_t>> clusters(std::size_t l) const {
    std::vector<std::size_t> perm(machines_);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    SplitMix64 engine(derive_seed(seed_, 0x636c7573ULL, l));
    std::shuffle(perm.begin(), perm.end(), engine);
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t s = 0; s < machines_; s += cluster_size_)
      groups.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(s),
                          perm.begin() + static_cast<std::ptrdiff_t>(s + cluster_size_));
    return groups;
  }

 private:
  MixingMatrix cluster_matrix(std::size_t l) const {
    const auto M = static_cast<Eigen::Index>(machines_);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(M, M);
    Adjacency mask = Adjacency::Constant(M, M, false);
    const double w = 1.0 / static_cast<double>(cluster_size_);
    for (const auto& group : clusters(l)) {
      for (std::size_t i : group) {
        for (std::size_t j : group) {
          W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
          if (i != j) mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true;
        }
      }
    }
    return MixingMatrix(std::move(W), std::move(mask));
  }

  ScheduleKind kind_;
  std::size_t period_;
  std::size_t cluster_size_;
  std::size_t machines_;
  std::uint64_t seed_;
  MatrixPtr base_;
  MatrixPtr identity_;
  std::vector<MatrixPtr> sequence_;
};

inline TopologySchedule make_schedule(ScheduleKind kind, ScheduleParams params, std::size_t M,
                                      std::uint64_t seed = 0) {
  return TopologySchedule(kind, std::move(params), M, seed);
}

inline TopologySchedule constant_schedule(MixingMatrix W) {
  const auto M = static_cast<std::size_t>(W.size());
  ScheduleParams params;
  params.base = std::move(W);
  return TopologySchedule(ScheduleKind::constant, std::move(params), M, 0);
}

enum class PMethod { spectral, monte_carlo };

inline std::string_view to_string(PMethod m) { return m == PMethod::spectral ? "spectral" : "monte_carlo"; }

inline PMethod parse_p_method(std::string_view name) {
  if (name == "spectral") return PMethod::spectral;
  if (name == "monte_carlo") return PMethod::monte_carlo;
  throw InvalidArgument("unknown p estimation method '" + std::string(name) + "'");
}

/// Estimated pair (p, tau) of the expected consensus rate.
struct ConsensusEstimate {
  double p_hat = 1.0;
  std::size_t tau = 1;
  PMethod method = PMethod::spectral;
  std::size_t trials = 0;
  double half_width = 0.0;  // 95% half-width; zero for the spectral method
};

namespace detail {

constexpr double kMinP = 1e-15;
// Resolution of the power iteration used by the Monte-Carlo estimator.
constexpr double kPowerIterationFloor = 1e-9;

inline double clamp_p(double p) { return std::clamp(p, kMinP, 1.0); }

inline Eigen::MatrixXd deviation_projector(Eigen::Index M) {
  return Eigen::MatrixXd::Identity(M, M) - Eigen::MatrixXd::Constant(M, M, 1.0 / static_cast<double>(M));
}

/// Largest modulus of W on the complement of the all-ones vector.
inline double second_eigenvalue_modulus(const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd P = deviation_projector(W.rows());
  const Eigen::MatrixXd S = P * W * P;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Worst ratio v^T S v / v^T v over deviation vectors, by power iteration
/// from `starts` random Gaussian deviation vectors.
inline double worst_deviation_ratio(const Eigen::MatrixXd& S, NormalStream& stream, int starts = 8,
                                    int max_iter = 20000) {
  const Eigen::Index M = S.rows();
  if (M == 1) return 0.0;
  const Eigen::MatrixXd P = deviation_projector(M);
  const Eigen::MatrixXd PSP = P * S * P;
  double best = 0.0;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd v(M);
    for (Eigen::Index i = 0; i < M; ++i) v[i] = stream();
    v = P * v;
    if (v.norm() == 0.0) continue;
    v.normalize();
    double ratio = v.dot(PSP * v);
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd w = PSP * v;
      const double norm = w.norm();
      if (norm == 0.0) {
        ratio = 0.0;
        break;
      }
      w = P * (w / norm);
      const double next = w.dot(PSP * w);
      const bool done = std::abs(next - ratio) <= 1e-15 * std::max(1.0, next);
      v = w;
      ratio = next;
      if (done) break;
    }
    best = std::max(best, ratio);
  }
  return best;
}

}  // namespace detail

/// Product W^{l tau} ... W^{(l+1) tau - 1} of one block of the schedule.
inline Eigen::MatrixXd block_product(const TopologySchedule& schedule, std::size_t l, std::size_t tau) {
  const auto M = static_cast<Eigen::Index>(schedule.machines());
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(M, M);
  for (std::size_t t = l * tau; t < (l + 1) * tau; ++t) {
    const auto W = schedule.at(t);
    if (!W->is_identity()) prod = prod * W->weights();
  }
  return prod;
}

/// Estimates p in E|Z W_{l,tau} - Zbar|_F^2 <= (1 - p) |Z - Zbar|_F^2.
///
/// spectral: constant schedules only, p = 1 - lambda_2^(2 tau).
/// monte_carlo: averages W W^T over `trials` sampled block products and takes
/// the worst deviation ratio found from random Gaussian starts; the half-width
/// comes from splitting the trials into batches.
inline ConsensusEstimate estimate_p(const TopologySchedule& schedule, std::size_t tau, PMethod method,
                                    std::size_t trials = 200, std::uint64_t seed = 0) {
  detail::require(tau >= 1, "estimate_p: tau must be >= 1");
  ConsensusEstimate est;
  est.tau = tau;
  est.method = method;

  if (method == PMethod::spectral) {
    if (!schedule.is_constant())
      throw InvalidArgument("spectral p estimate needs a constant schedule; use monte_carlo for " +
                            std::string(to_string(schedule.kind())));
    const double lambda2 = detail::second_eigenvalue_modulus(schedule.at(0)->weights());
    est.p_hat = detail::clamp_p(1.0 - std::pow(lambda2, 2.0 * static_cast<double>(tau)));
    return est;
  }

  detail::require(trials >= 1, "estimate_p: monte_carlo needs trials >= 1");
  est.trials = trials;
  const auto M = static_cast<Eigen::Index>(schedule.machines());
  const std::size_t batches = std::min<std::size_t>(10, trials);
  NormalStream stream(derive_seed(seed, 0x705f6d63ULL));

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(M, M);
  std::vector<double> batch_ratios;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * trials / batches;
    const std::size_t hi = (b + 1) * trials / batches;
    Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(M, M);
    for (std::size_t l = lo; l < hi; ++l) {
      const Eigen::MatrixXd prod = block_product(schedule, l, tau);
      batch.noalias() += prod * prod.transpose();
    }
    total += batch;
    batch_ratios.push_back(detail::worst_deviation_ratio(batch / static_cast<double>(hi - lo), stream));
  }
  const double ratio = detail::worst_deviation_ratio(total / static_cast<double>(trials), stream);
  est.p_hat = detail::clamp_p(1.0 - ratio);

  double half_width = 0.0;
  if (batches >= 2) {
    const double mean = std::accumulate(batch_ratios.begin(), batch_ratios.end(), 0.0) /
                        static_cast<double>(batches);
    double var = 0.0;
    for (double r : batch_ratios) var += (r - mean) * (r - mean);
    var /= static_cast<double>(batches - 1);
    const boost::math::students_t dist(static_cast<double>(batches - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    half_width = t * std::sqrt(var / static_cast<double>(batches));
  }
  est.half_width = std::max(half_width, detail::kPowerIterationFloor);
  return est;
}

}  // namespace gossipeg

#endif  // GOSSIPEG_SCHEDULE_HPP_
