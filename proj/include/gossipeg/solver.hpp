#ifndef GOSSIPEG_SOLVER_HPP_
#define GOSSIPEG_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gossipeg/error.hpp"
#include "gossipeg/metrics.hpp"
#include "gossipeg/problem.hpp"
#include "gossipeg/rng.hpp"
#include "gossipeg/schedule.hpp"
#include "gossipeg/step.hpp"
#include "gossipeg/topology.hpp"

namespace gossipeg {

/// Abort threshold on |entry| of any iterate.
inline constexpr double kDivergenceBound = 1e12;

/// Iterates of all machines (column m is z_m) at iteration k.
struct SolverState {
  Eigen::MatrixXd Z;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  std::size_t machines() const noexcept { return static_cast<std::size_t>(Z.cols()); }
  Eigen::VectorXd mean() const { return machine_average(Z); }
};

/// Every machine starts from the same point.
inline SolverState initial_state(const Iterate& z0, std::size_t machines, std::uint64_t seed) {
  detail::require(machines >= 1, "initial_state: need at least one machine");
  SolverState s;
  s.Z = z0.replicate(1, static_cast<Eigen::Index>(machines));
  s.seed = seed;
  return s;
}

/// Intermediate quantities of the last round, kept for metrics.
struct RoundBuffers {
  Eigen::MatrixXd extrapolated;  // z^{k+1/3}
  Eigen::MatrixXd updated;       // z^{k+2/3}
  Eigen::MatrixXd first_oracle;  // F_m(z^k_m, xi^k_m)
  Eigen::MatrixXd second_oracle; // F_m(z^{k+1/3}_m, xi^{k+1/3}_m)
};

namespace detail {

/// Runs fn(begin, end) over [0, count) split across `threads` workers.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t)
    pool.emplace_back([&, t] { fn(t * count / threads, (t + 1) * count / threads); });
  fn(0, count / threads);
}

inline void check_finite(const Eigen::MatrixXd& Z, std::size_t k) {
  for (Eigen::Index m = 0; m < Z.cols(); ++m) {
    const double mag = Z.col(m).cwiseAbs().maxCoeff();
    if (!(mag <= kDivergenceBound)) throw DivergenceError(k, static_cast<std::size_t>(m), mag);
  }
}

}  // namespace detail

/// One round: two extragradient half-steps on every machine, then one gossip
/// step with W. Oracle noise for (machine m, iteration k, half h) comes from a
/// stream derived from (seed, m, k, h), so the result does not depend on the
/// machine order or on `threads`.
template <VariationalOperator Op>
void extragradient_round(SolverState& state, const Op& op, double gamma, const MixingMatrix& W,
                         RoundBuffers& buf, std::size_t threads = 1) {
  detail::require(gamma >= 0.0 && std::isfinite(gamma), "extragradient_round: gamma must be finite and >= 0");
  const auto M = static_cast<Eigen::Index>(op.machines());
  const auto d = static_cast<Eigen::Index>(op.dim());
  detail::require(state.Z.cols() == M && state.Z.rows() == d, "extragradient_round: state shape mismatch");
  detail::require(W.size() == M, "extragradient_round: mixing matrix size mismatch");

  buf.extrapolated.resize(d, M);
  buf.updated.resize(d, M);
  buf.first_oracle.resize(d, M);
  buf.second_oracle.resize(d, M);

  bool batched = false;
  if constexpr (BatchedOperator<Op>) {
    if (op.constants().sigma2 == 0.0) {
      op.evaluate_all(state.Z, buf.first_oracle);
      buf.extrapolated = state.Z - gamma * buf.first_oracle;
      op.evaluate_all(buf.extrapolated, buf.second_oracle);
      buf.updated = state.Z - gamma * buf.second_oracle;
      batched = true;
    }
  }
  if (!batched) {
    const std::uint64_t seed = state.seed;
    const std::size_t k = state.k;
    detail::parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t lo, std::size_t hi) {
      Eigen::VectorXd z(d), g(d), h(d);
      for (std::size_t m = lo; m < hi; ++m) {
        const auto col = static_cast<Eigen::Index>(m);
        z = state.Z.col(col);
        NormalStream first = oracle_stream(seed, m, k, 0);
        op.evaluate_noisy(m, z, first, g);
        buf.first_oracle.col(col) = g;
        h = z - gamma * g;
        buf.extrapolated.col(col) = h;
        NormalStream second = oracle_stream(seed, m, k, 1);
        op.evaluate_noisy(m, h, second, g);
        buf.second_oracle.col(col) = g;
        buf.updated.col(col) = z - gamma * g;
      }
    });
  }
  W.gossip(buf.updated, state.Z);
  ++state.k;
  detail::check_finite(state.Z, state.k);
}

/// Value-returning form of extragradient_round.
template <VariationalOperator Op>
SolverState extragradient_round(const SolverState& state, const Op& op, double gamma, const MixingMatrix& W) {
  SolverState next = state;
  RoundBuffers buf;
  extragradient_round(next, op, gamma, W, buf);
  return next;
}

struct RunOptions {
  std::size_t iterations = 1;          // K
  std::uint64_t seed = 0;
  std::size_t cadence = 1;
  Iterate z0;
  std::optional<double> gap_radius;    // enables the restricted gap at the ergodic point
  std::optional<Iterate> gap_center;   // defaults to z0
  GapOptions gap_options{};
  bool keep_ergodic_point = false;     // copy the ergodic point into each record
  std::size_t threads = 1;
};

struct RunSummary {
  SolverState final_state;
  std::size_t records = 0;
  Iterate ergodic_point;               // mean over executed rounds of zbar^{i+1/3}
  double max_mean_norm = 0.0;
};

/// Radius 2(|z0 - z*| + 1) used when no gap radius is configured.
inline double default_gap_radius(const Iterate& z0, const Iterate& z_star) {
  return 2.0 * ((z0 - z_star).norm() + 1.0);
}

/// Executes K rounds and hands a RunRecord to `sink` at k = 0, every
/// `cadence` iterations, and at k = K.
template <VariationalOperator Op, typename Sink>
RunSummary run(const Op& op, const TopologySchedule& schedule, const StepSchedule& steps,
               const RunOptions& opt, Sink&& sink) {
  detail::require(opt.iterations >= 1, "run: iteration budget K must be >= 1");
  detail::require(opt.cadence >= 1, "run: cadence must be >= 1");
  detail::require(opt.z0.size() == static_cast<Eigen::Index>(op.dim()), "run: z0 has the wrong length");
  detail::require(schedule.machines() == op.machines(), "run: schedule and problem disagree on M");
  steps.validate();

  const std::optional<Iterate> z_star = op.solution();
  const std::optional<AffineForm> affine = op.affine_form();
  SolverState state = initial_state(opt.z0, op.machines(), opt.seed);
  RoundBuffers buf;
  Eigen::VectorXd ergodic_sum = Eigen::VectorXd::Zero(opt.z0.size());
  double max_mean_norm = 0.0;
  std::size_t records = 0;

  auto mean_op_sq = [&](const Eigen::VectorXd& zbar) {
    if (affine) return (affine->jacobian * zbar + affine->offset).squaredNorm();
    return mean_operator(op, zbar).squaredNorm();
  };
  double opnorm_sum = 0.0;

  for (std::size_t k = 0;; ++k) {
    const Eigen::VectorXd zbar = state.mean();
    opnorm_sum += mean_op_sq(zbar);
    max_mean_norm = std::max(max_mean_norm, zbar.norm());

    if (k % opt.cadence == 0 || k == opt.iterations) {
      RunRecord rec;
      rec.k = k;
      rec.gamma = step_value(steps, k);
      if (z_star) {
        rec.dist2 = mean_sq_distance(state.Z, *z_star);
        rec.mean_dist2 = (zbar - *z_star).squaredNorm();
      }
      rec.consensus_err = consensus_error(state.Z);
      rec.avg_sq_opnorm = opnorm_sum / static_cast<double>(k + 1);
      rec.max_mean_norm = max_mean_norm;
      if (k > 0) {
        const Iterate ergodic = ergodic_sum / static_cast<double>(k);
        if (opt.gap_radius) {
          const Iterate center = opt.gap_center.value_or(opt.z0);
          rec.gap = restricted_gap(op, ergodic, center, *opt.gap_radius, opt.gap_options);
        }
        if (opt.keep_ergodic_point) rec.ergodic_point = ergodic;
      }
      sink(static_cast<const RunRecord&>(rec));
      ++records;
    }
    if (k == opt.iterations) break;

    const double gamma = step_value(steps, k);
    const auto W = schedule.at(k);
    extragradient_round(state, op, gamma, *W, buf, opt.threads);
    ergodic_sum += machine_average(buf.extrapolated);
  }

  RunSummary summary;
  summary.final_state = std::move(state);
  summary.records = records;
  summary.ergodic_point = ergodic_sum / static_cast<double>(opt.iterations);
  summary.max_mean_norm = max_mean_norm;
  return summary;
}

/// Collects every record of a run.
template <VariationalOperator Op>
std::vector<RunRecord> run_collect(const Op& op, const TopologySchedule& schedule, const StepSchedule& steps,
                                   const RunOptions& opt) {
  std::vector<RunRecord> out;
  run(op, schedule, steps, opt, [&](const RunRecord& r) { out.push_back(r); });
  return out;
}

/// Smallest recorded k with dist2 < eps.
inline std::optional<std::size_t> time_to_epsilon(std::span<const RunRecord> records, double eps) {
  for (const auto& r : records)
    if (r.dist2 && *r.dist2 < eps) return r.k;
  return std::nullopt;
}

/// First k <= cap with (1/M) sum_m |z_m^k - z*|^2 < eps, or nullopt when the
/// target is not reached within `cap` rounds or the run diverges.
template <VariationalOperator Op>
std::optional<std::size_t> hitting_time(const Op& op, const TopologySchedule& schedule, const StepSchedule& steps,
                                        const Iterate& z0, std::uint64_t seed, double eps, std::size_t cap) {
  const std::optional<Iterate> z_star = op.solution();
  if (!z_star) throw InvalidArgument("hitting_time: problem exposes no exact solution");
  SolverState state = initial_state(z0, op.machines(), seed);
  RoundBuffers buf;
  try {
    for (std::size_t k = 0;; ++k) {
      if (mean_sq_distance(state.Z, *z_star) < eps) return k;
      if (k >= cap) return std::nullopt;
      const auto W = schedule.at(k);
      extragradient_round(state, op, step_value(steps, k), *W, buf);
    }
  } catch (const DivergenceError&) {
    return std::nullopt;
  }
}

/// Geometric step grid from gamma_max down to gamma_max * 10^-decades.
struct GammaGrid {
  double gamma_max = 1.0;
  int decades = 4;
  int per_decade = 20;

  std::vector<double> points() const {
    detail::require(gamma_max > 0.0 && decades >= 0 && per_decade >= 1, "gamma grid: invalid specification");
    std::vector<double> out;
    const int n = decades * per_decade;
    for (int i = 0; i <= n; ++i)
      out.push_back(gamma_max * std::pow(10.0, -static_cast<double>(i) / static_cast<double>(per_decade)));
    return out;
  }
};

class TargetUnreachable : public Error {
 public:
  using Error::Error;
};

struct TuneResult {
  double gamma = 0.0;
  double mean_k = 0.0;                      // K* averaged over seeds
  std::vector<std::size_t> per_seed_k;
};

/// Picks the constant step of `grid` minimizing the mean (over seeds) first
/// iteration at which the error drops below eps; ties go to the larger step.
///
/// Steps are scanned from small to large and each later run is capped at the
/// best total found so far, which gives the same answer as running every
/// step to k_max. Noise-free problems are seed independent and run once.
template <VariationalOperator Op>
TuneResult tune_step(const Op& op, const TopologySchedule& schedule, double eps, std::span<const std::uint64_t> seeds,
                     const GammaGrid& grid, const Iterate& z0, std::size_t k_max = 1000000) {
  detail::require(eps > 0.0, "tune_step: eps must be > 0");
  detail::require(!seeds.empty(), "tune_step: need at least one seed");
  std::vector<double> gammas = grid.points();
  std::reverse(gammas.begin(), gammas.end());

  const bool deterministic = op.constants().sigma2 == 0.0;
  const std::size_t runs = deterministic ? 1 : seeds.size();

  std::optional<std::size_t> best_total;
  TuneResult best;
  for (double gamma : gammas) {
    const StepSchedule steps = StepSchedule::constant_step(gamma);
    std::size_t total = 0;
    std::vector<std::size_t> ks;
    bool ok = true;
    for (std::size_t s = 0; s < runs; ++s) {
      const std::size_t budget = best_total ? *best_total - total : k_max;
      const auto hit = hitting_time(op, schedule, steps, z0, seeds[s], eps, std::min(budget, k_max));
      if (!hit) {
        ok = false;
        break;
      }
      total += *hit;
      ks.push_back(*hit);
    }
    if (!ok) continue;
    if (!best_total || total <= *best_total) {
      best_total = total;
      best.gamma = gamma;
      if (deterministic) ks.assign(seeds.size(), ks.front());
      best.per_seed_k = ks;
      best.mean_k = static_cast<double>(total) / static_cast<double>(runs);
    }
  }
  if (!best_total) throw TargetUnreachable("target unreachable: no grid step reaches eps within k_max");
  return best;
}

}  // namespace gossipeg

#endif  // GOSSIPEG_SOLVER_HPP_
