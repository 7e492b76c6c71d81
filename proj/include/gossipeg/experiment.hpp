#ifndef GOSSIPEG_EXPERIMENT_HPP_
#define GOSSIPEG_EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gossipeg/config.hpp"
#include "gossipeg/csv.hpp"
#include "gossipeg/error.hpp"
#include "gossipeg/metrics.hpp"
#include "gossipeg/problem.hpp"
#include "gossipeg/regression.hpp"
#include "gossipeg/schedule.hpp"
#include "gossipeg/solver.hpp"
#include "gossipeg/step.hpp"
#include "gossipeg/topology.hpp"

namespace gossipeg {

struct ProblemSpec {
  double a = 1.0;
  double b = 1.0;
  long long n = 2;
  std::size_t M = 9;
  double D = 1.0;
  std::vector<double> c_bar;  // zeros when empty
  double sigma2 = 0.0;
};

struct TopologySpec {
  ScheduleKind kind = ScheduleKind::constant;
  std::string graph = "ring";  // ring, full, identity, laplacian, metropolis
  std::string edges;           // edge-list file for laplacian / metropolis
  std::size_t tau = 1;         // schedule period and block length for p
  std::size_t cluster_size = 4;
  std::vector<std::string> sequence;
  std::uint64_t seed = 0;
  PMethod p_method = PMethod::spectral;
  std::size_t trials = 200;
};

struct StepSpec {
  StepKind kind = StepKind::constant;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct RunSpec {
  std::size_t K = 1000;
  std::vector<std::uint64_t> seeds{1};
  std::size_t cadence = 1;
  std::optional<double> epsilon;
  std::vector<double> z0;  // one value fills every coordinate; empty means all ones
  bool gap = false;
  std::optional<double> gap_radius;
  std::size_t gap_restarts = 16;
  std::size_t k_max = 1000000;
  int decades = 4;
  int per_decade = 20;
  double window = 0.1;     // final fraction of records used for plateau levels
  std::size_t threads = 1;
};

enum class SweepAxis { epsilon, D, p_ring_size, sigma2, gamma };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::epsilon: return "epsilon";
    case SweepAxis::D: return "D";
    case SweepAxis::p_ring_size: return "p_ring_size";
    case SweepAxis::sigma2: return "sigma2";
    case SweepAxis::gamma: return "gamma";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::epsilon, SweepAxis::D, SweepAxis::p_ring_size, SweepAxis::sigma2, SweepAxis::gamma})
    if (to_string(a) == name) return a;
  throw InvalidArgument("unknown sweep axis '" + std::string(name) + "'");
}

struct SweepSpec {
  std::optional<SweepAxis> axis;
  std::vector<double> values;
};

struct OutputSpec {
  std::string directory = "out";
  bool emit_plots = false;
};

struct ExperimentConfig {
  ProblemSpec problem;
  TopologySpec topology;
  StepSpec step;
  RunSpec run;
  SweepSpec sweep;
  OutputSpec output;
  std::string source = "<config>";
};

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"problem", {"a", "b", "n", "M", "D", "sigma2", "c_bar"}},
      {"topology", {"kind", "graph", "edges", "tau", "cluster_size", "sequence", "seed", "p_method", "trials"}},
      {"step", {"kind", "gamma", "alpha", "beta"}},
      {"run", {"K", "seeds", "cadence", "epsilon", "z0", "gap", "gap_radius", "gap_restarts", "k_max", "decades",
               "per_decade", "window", "threads"}},
      {"sweep", {"axis", "values"}},
      {"output", {"directory", "emit_plots"}},
  };
  return schema;
}

namespace detail {

template <typename T>
void assign(std::optional<T> v, T& out) {
  if (v) out = *v;
}

inline std::size_t positive_count(const KeyValueDocument& doc, const std::string& s, const std::string& k,
                                  std::size_t fallback, std::size_t minimum = 1) {
  const auto v = doc.get_int(s, k);
  if (!v) return fallback;
  if (*v < static_cast<long long>(minimum))
    doc.fail(s, k, "'" + k + "' must be >= " + std::to_string(minimum));
  return static_cast<std::size_t>(*v);
}

}  // namespace detail

/// Reads and validates a config document. Every error names the offending line.
inline ExperimentConfig parse_config(const KeyValueDocument& doc) {
  doc.check_schema(config_schema());
  ExperimentConfig cfg;
  cfg.source = doc.source();

  auto& pr = cfg.problem;
  detail::assign(doc.get_double("problem", "a"), pr.a);
  detail::assign(doc.get_double("problem", "b"), pr.b);
  detail::assign(doc.get_int("problem", "n"), pr.n);
  pr.M = detail::positive_count(doc, "problem", "M", pr.M);
  detail::assign(doc.get_double("problem", "D"), pr.D);
  detail::assign(doc.get_double("problem", "sigma2"), pr.sigma2);
  detail::assign(doc.get_double_list("problem", "c_bar"), pr.c_bar);
  if (pr.n < 1) doc.fail("problem", "n", "'n' must be >= 1");
  if (!(pr.a >= 0.0)) doc.fail("problem", "a", "'a' must be >= 0");
  if (!(pr.D >= 0.0)) doc.fail("problem", "D", "'D' must be >= 0");
  if (!(pr.sigma2 >= 0.0)) doc.fail("problem", "sigma2", "'sigma2' must be >= 0");
  if (!pr.c_bar.empty() && static_cast<long long>(pr.c_bar.size()) != pr.n)
    doc.fail("problem", "c_bar", "'c_bar' must have n entries");

  auto& tp = cfg.topology;
  try {
    if (auto v = doc.get_string("topology", "kind")) tp.kind = parse_schedule_kind(*v);
  } catch (const InvalidArgument& e) {
    doc.fail("topology", "kind", e.what());
  }
  detail::assign(doc.get_string("topology", "graph"), tp.graph);
  static const std::set<std::string> graphs{"ring", "full", "identity", "laplacian", "metropolis"};
  if (!graphs.count(tp.graph))
    doc.fail("topology", "graph", "'graph' must be one of ring, full, identity, laplacian, metropolis");
  detail::assign(doc.get_string("topology", "edges"), tp.edges);
  tp.tau = detail::positive_count(doc, "topology", "tau", tp.tau);
  tp.cluster_size = detail::positive_count(doc, "topology", "cluster_size", tp.cluster_size);
  detail::assign(doc.get_list("topology", "sequence"), tp.sequence);
  for (const auto& g : tp.sequence)
    if (!graphs.count(g)) doc.fail("topology", "sequence", "unknown graph '" + g + "' in 'sequence'");
  if (auto v = doc.get_int("topology", "seed")) tp.seed = static_cast<std::uint64_t>(*v);
  try {
    if (auto v = doc.get_string("topology", "p_method")) tp.p_method = parse_p_method(*v);
  } catch (const InvalidArgument& e) {
    doc.fail("topology", "p_method", e.what());
  }
  tp.trials = detail::positive_count(doc, "topology", "trials", tp.trials);
  if ((tp.graph == "laplacian" || tp.graph == "metropolis") && tp.edges.empty())
    doc.fail("topology", "graph", "graph '" + tp.graph + "' needs an 'edges' file");
  if (tp.kind == ScheduleKind::explicit_sequence && tp.sequence.empty())
    doc.fail("topology", "kind", "explicit_sequence needs a 'sequence' list");

  auto& st = cfg.step;
  try {
    if (auto v = doc.get_string("step", "kind")) st.kind = parse_step_kind(*v);
  } catch (const InvalidArgument& e) {
    doc.fail("step", "kind", e.what());
  }
  detail::assign(doc.get_double("step", "gamma"), st.gamma);
  detail::assign(doc.get_double("step", "alpha"), st.alpha);
  detail::assign(doc.get_double("step", "beta"), st.beta);
  if (st.kind == StepKind::constant && doc.find("step", "gamma") && !(st.gamma > 0.0))
    doc.fail("step", "gamma", "'gamma' must be > 0");
  if (st.kind == StepKind::decreasing && !(st.alpha > 0.0 && st.beta > 0.0))
    doc.fail("step", doc.find("step", "alpha") ? "alpha" : "kind", "decreasing step needs alpha > 0 and beta > 0");

  auto& rn = cfg.run;
  if (auto v = doc.get_int("run", "K")) {
    if (*v < 1) doc.fail("run", "K", "'K' must be >= 1 (an empty run is not allowed)");
    rn.K = static_cast<std::size_t>(*v);
  }
  if (auto v = doc.get_int_list("run", "seeds")) {
    rn.seeds.clear();
    for (long long s : *v) {
      if (s < 0) doc.fail("run", "seeds", "seeds must be >= 0");
      rn.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  rn.cadence = detail::positive_count(doc, "run", "cadence", rn.cadence);
  if (auto v = doc.get_double("run", "epsilon")) {
    if (!(*v > 0.0)) doc.fail("run", "epsilon", "'epsilon' must be > 0");
    rn.epsilon = *v;
  }
  detail::assign(doc.get_double_list("run", "z0"), rn.z0);
  if (rn.z0.size() > 1 && static_cast<long long>(rn.z0.size()) != 2 * pr.n)
    doc.fail("run", "z0", "'z0' needs one value or 2n values");
  detail::assign(doc.get_bool("run", "gap"), rn.gap);
  if (auto v = doc.get_double("run", "gap_radius")) {
    if (!(*v > 0.0)) doc.fail("run", "gap_radius", "'gap_radius' must be > 0");
    rn.gap_radius = *v;
  }
  rn.gap_restarts = detail::positive_count(doc, "run", "gap_restarts", rn.gap_restarts, 0);
  rn.k_max = detail::positive_count(doc, "run", "k_max", rn.k_max);
  rn.decades = static_cast<int>(detail::positive_count(doc, "run", "decades", 4, 0));
  rn.per_decade = static_cast<int>(detail::positive_count(doc, "run", "per_decade", 20));
  if (auto v = doc.get_double("run", "window")) {
    if (!(*v > 0.0 && *v <= 1.0)) doc.fail("run", "window", "'window' must be in (0, 1]");
    rn.window = *v;
  }
  rn.threads = detail::positive_count(doc, "run", "threads", rn.threads);

  if (auto v = doc.get_string("sweep", "axis")) {
    try {
      cfg.sweep.axis = parse_sweep_axis(*v);
    } catch (const InvalidArgument& e) {
      doc.fail("sweep", "axis", e.what());
    }
  }
  detail::assign(doc.get_double_list("sweep", "values"), cfg.sweep.values);
  if (cfg.sweep.axis == SweepAxis::p_ring_size)
    for (double v : cfg.sweep.values)
      if (!(v >= 3.0 && v == std::floor(v))) doc.fail("sweep", "values", "ring sizes must be integers >= 3");
  if (cfg.sweep.axis && cfg.sweep.values.empty()) doc.fail("sweep", "axis", "sweep needs a 'values' list");

  detail::assign(doc.get_string("output", "directory"), cfg.output.directory);
  detail::assign(doc.get_bool("output", "emit_plots"), cfg.output.emit_plots);
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text, const std::string& source = "<config>") {
  return parse_config(KeyValueDocument::parse_string(text, source));
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(KeyValueDocument::load(path)); }

/// Replaces the seed list by seed, seed+1, ... keeping its length.
inline void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t count = std::max<std::size_t>(1, cfg.run.seeds.size());
  cfg.run.seeds.clear();
  for (std::size_t i = 0; i < count; ++i) cfg.run.seeds.push_back(seed + i);
}

inline BilinearProblem build_problem(const ProblemSpec& spec) {
  Eigen::VectorXd c_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.n));
  for (std::size_t i = 0; i < spec.c_bar.size(); ++i) c_bar[static_cast<Eigen::Index>(i)] = spec.c_bar[i];
  return make_bilinear(spec.a, spec.b, static_cast<Eigen::Index>(spec.n), spec.M, spec.D, c_bar, spec.sigma2);
}

inline MixingMatrix build_graph(const std::string& graph, const TopologySpec& spec, std::size_t M) {
  if (graph == "ring") return ring_matrix(M);
  if (graph == "full") return full_matrix(M);
  if (graph == "identity") return identity_matrix(M);
  const Adjacency adj = load_edge_list(spec.edges, M);
  if (static_cast<std::size_t>(adj.rows()) != M)
    throw InvalidArgument("edge list '" + spec.edges + "' has " + std::to_string(adj.rows()) +
                          " nodes but the problem has M = " + std::to_string(M));
  return graph == "laplacian" ? laplacian_matrix(adj) : metropolis_matrix(adj);
}

inline TopologySchedule build_schedule(const TopologySpec& spec, std::size_t M) {
  ScheduleParams params;
  params.period = spec.tau;
  params.cluster_size = spec.cluster_size;
  if (spec.kind == ScheduleKind::constant || spec.kind == ScheduleKind::periodic_local)
    params.base = build_graph(spec.graph, spec, M);
  if (spec.kind == ScheduleKind::explicit_sequence)
    for (const auto& g : spec.sequence) params.sequence.push_back(build_graph(g, spec, M));
  return make_schedule(spec.kind, std::move(params), M, spec.seed);
}

/// p for the configured topology: spectral when the schedule is constant and
/// spectral is requested, Monte-Carlo otherwise.
inline ConsensusEstimate consensus_estimate(const TopologySpec& spec, const TopologySchedule& schedule) {
  const PMethod method = schedule.is_constant() ? spec.p_method : PMethod::monte_carlo;
  return estimate_p(schedule, spec.tau, method, spec.trials, spec.seed);
}

inline StepSchedule build_steps(const StepSpec& spec, const BilinearProblem& problem, const TopologySpec& topo,
                                const TopologySchedule& schedule) {
  switch (spec.kind) {
    case StepKind::constant:
      if (!(spec.gamma > 0.0)) throw InvalidArgument("[step] constant kind needs gamma > 0");
      return StepSchedule::constant_step(spec.gamma);
    case StepKind::decreasing: return StepSchedule::decreasing_step(spec.alpha, spec.beta);
    case StepKind::theorem_sm: {
      const ConsensusEstimate p = consensus_estimate(topo, schedule);
      return StepSchedule::theorem(spec.kind, problem.lipschitz(), p.p_hat, topo.tau);
    }
    case StepKind::theorem_m:
    case StepKind::theorem_nm: return StepSchedule::theorem(spec.kind, problem.lipschitz());
  }
  throw InvalidArgument("unknown step kind");
}

inline Iterate build_z0(const RunSpec& spec, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (spec.z0.empty()) return Iterate::Ones(d);
  if (spec.z0.size() == 1) return Iterate::Constant(d, spec.z0.front());
  if (spec.z0.size() != dim) throw InvalidArgument("[run] z0 length differs from 2n");
  Iterate z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = spec.z0[static_cast<std::size_t>(i)];
  return z;
}

/// Run options shared by cmd_run and plateau sweeps.
inline RunOptions build_run_options(const ExperimentConfig& cfg, const BilinearProblem& problem,
                                    std::uint64_t seed) {
  RunOptions opt;
  opt.iterations = cfg.run.K;
  opt.seed = seed;
  opt.cadence = cfg.run.cadence;
  opt.z0 = build_z0(cfg.run, problem.dim());
  opt.threads = cfg.run.threads;
  if (cfg.run.gap) {
    const auto z_star = problem.solution();
    if (cfg.run.gap_radius) {
      opt.gap_radius = cfg.run.gap_radius;
    } else {
      if (!z_star) throw InvalidArgument("[run] gap needs gap_radius when the problem has no unique solution");
      opt.gap_radius = default_gap_radius(opt.z0, *z_star);
    }
    opt.gap_options.restarts = cfg.run.gap_restarts;
    opt.gap_options.seed = seed;
  }
  return opt;
}

inline std::string run_csv_name(std::uint64_t seed) { return "run_seed" + std::to_string(seed) + ".csv"; }

struct RunOutput {
  std::uint64_t seed = 0;
  std::filesystem::path path;
  std::vector<RunRecord> records;
  std::optional<std::string> diverged;  // divergence report when the run aborted
};

/// One CSV per seed in the output directory.
inline std::vector<RunOutput> cmd_run(const ExperimentConfig& cfg) {
  const BilinearProblem problem = build_problem(cfg.problem);
  const TopologySchedule schedule = build_schedule(cfg.topology, problem.machines());
  const StepSchedule steps = build_steps(cfg.step, problem, cfg.topology, schedule);
  const std::filesystem::path dir(cfg.output.directory);
  std::vector<RunOutput> outputs;
  for (std::uint64_t seed : cfg.run.seeds) {
    RunOutput out;
    out.seed = seed;
    out.path = dir / run_csv_name(seed);
    try {
      out.records = run_collect(problem, schedule, steps, build_run_options(cfg, problem, seed));
    } catch (const DivergenceError& e) {
      out.diverged = e.what();
    }
    write_file_atomic(out.path, run_csv(out.records));
    outputs.push_back(std::move(out));
  }
  return outputs;
}

inline GammaGrid tuning_grid(const ExperimentConfig& cfg, const BilinearProblem& problem) {
  return GammaGrid{.gamma_max = 1.0 / problem.lipschitz(), .decades = cfg.run.decades,
                   .per_decade = cfg.run.per_decade};
}

/// Tunes the constant step for the configured epsilon.
inline TuneResult cmd_tune(const ExperimentConfig& cfg) {
  if (!cfg.run.epsilon) throw InvalidArgument("tune needs [run] epsilon");
  const BilinearProblem problem = build_problem(cfg.problem);
  const TopologySchedule schedule = build_schedule(cfg.topology, problem.machines());
  return tune_step(problem, schedule, *cfg.run.epsilon, cfg.run.seeds, tuning_grid(cfg, problem),
                   build_z0(cfg.run, problem.dim()), cfg.run.k_max);
}

inline std::string tune_csv(const ExperimentConfig& cfg, const TuneResult& r) {
  std::string out = "epsilon,gamma,mean_k,seed,k_star\n";
  for (std::size_t i = 0; i < r.per_seed_k.size(); ++i)
    out += format_double(*cfg.run.epsilon) + ',' + format_double(r.gamma) + ',' + format_double(r.mean_k) + ',' +
           std::to_string(cfg.run.seeds[i]) + ',' + std::to_string(r.per_seed_k[i]) + '\n';
  return out;
}

inline ConsensusEstimate cmd_estimate_p(const ExperimentConfig& cfg) {
  const TopologySchedule schedule = build_schedule(cfg.topology, cfg.problem.M);
  return estimate_p(schedule, cfg.topology.tau, cfg.topology.p_method, cfg.topology.trials, cfg.topology.seed);
}

inline std::string estimate_p_csv(const ConsensusEstimate& e) {
  return std::string("p_hat,tau,method,trials,half_width\n") + format_double(e.p_hat) + ',' +
         std::to_string(e.tau) + ',' + std::string(to_string(e.method)) + ',' + std::to_string(e.trials) + ',' +
         format_double(e.half_width) + '\n';
}

struct SweepCell {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> metric;  // K* or plateau level
  std::string status = "ok";     // ok, unreachable, diverged
};

struct SweepPoint {
  double value = 0.0;
  double abscissa = 0.0;
  std::optional<double> p;       // spectral p (p_ring_size axis)
  std::optional<double> gamma;   // tuned or used step
  std::vector<SweepCell> cells;
  std::optional<double> median, min, max;
  std::size_t reached = 0;
  std::size_t unreachable = 0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::epsilon;
  std::vector<SweepPoint> points;
  std::optional<LineFit> fit;    // log median against log abscissa
  std::size_t unreachable = 0;   // axis values without a full set of seeds
  std::size_t excluded = 0;      // axis values left out of the fit
};

inline bool is_time_axis(SweepAxis a) {
  return a == SweepAxis::epsilon || a == SweepAxis::D || a == SweepAxis::p_ring_size;
}

inline std::string_view metric_name(SweepAxis a) { return is_time_axis(a) ? "k_star" : "plateau"; }

namespace detail {

inline void summarize(SweepPoint& pt) {
  std::vector<double> ok;
  for (const auto& c : pt.cells)
    if (c.metric) ok.push_back(*c.metric);
  pt.reached = ok.size();
  pt.unreachable = pt.cells.size() - ok.size();
  if (ok.empty()) return;
  pt.median = median(ok);
  pt.min = *std::min_element(ok.begin(), ok.end());
  pt.max = *std::max_element(ok.begin(), ok.end());
}

inline double plateau_level(const std::vector<RunRecord>& records, double window, std::size_t K) {
  const double start = (1.0 - window) * static_cast<double>(K);
  std::vector<double> tail;
  for (const auto& r : records)
    if (static_cast<double>(r.k) >= start && r.dist2) tail.push_back(*r.dist2);
  if (tail.empty()) throw InvalidArgument("plateau level needs recorded distances in the final window");
  return median(tail);
}

inline SweepPoint sweep_point(const ExperimentConfig& base, SweepAxis axis, double value) {
  ExperimentConfig cfg = base;
  SweepPoint pt;
  pt.value = value;
  switch (axis) {
    case SweepAxis::epsilon: cfg.run.epsilon = value; pt.abscissa = 1.0 / value; break;
    case SweepAxis::D: cfg.problem.D = value; pt.abscissa = value; break;
    case SweepAxis::p_ring_size:
      cfg.problem.M = static_cast<std::size_t>(value);
      cfg.topology.kind = ScheduleKind::constant;
      cfg.topology.graph = "ring";
      break;
    case SweepAxis::sigma2: cfg.problem.sigma2 = value; pt.abscissa = value; break;
    case SweepAxis::gamma:
      cfg.step.kind = StepKind::constant;
      cfg.step.gamma = value;
      pt.abscissa = value;
      break;
  }
  const BilinearProblem problem = build_problem(cfg.problem);
  const TopologySchedule schedule = build_schedule(cfg.topology, problem.machines());
  if (axis == SweepAxis::p_ring_size) {
    pt.p = estimate_p(schedule, 1, PMethod::spectral).p_hat;
    pt.abscissa = 1.0 / *pt.p;
  }

  if (is_time_axis(axis)) {
    if (!cfg.run.epsilon) throw InvalidArgument("sweep over " + std::string(to_string(axis)) + " needs [run] epsilon");
    if (!problem.solution()) throw InvalidArgument("time-to-epsilon sweeps need a problem with a unique solution");
    try {
      const TuneResult r = tune_step(problem, schedule, *cfg.run.epsilon, cfg.run.seeds, tuning_grid(cfg, problem),
                                     build_z0(cfg.run, problem.dim()), cfg.run.k_max);
      pt.gamma = r.gamma;
      for (std::size_t i = 0; i < cfg.run.seeds.size(); ++i)
        pt.cells.push_back({value, cfg.run.seeds[i], static_cast<double>(r.per_seed_k[i]), "ok"});
    } catch (const TargetUnreachable&) {
      for (std::uint64_t s : cfg.run.seeds) pt.cells.push_back({value, s, std::nullopt, "unreachable"});
    }
  } else {
    const StepSchedule steps = build_steps(cfg.step, problem, cfg.topology, schedule);
    pt.gamma = step_value(steps, 0);
    for (std::uint64_t s : cfg.run.seeds) {
      SweepCell cell{value, s, std::nullopt, "ok"};
      try {
        const auto records = run_collect(problem, schedule, steps, build_run_options(cfg, problem, s));
        cell.metric = plateau_level(records, cfg.run.window, cfg.run.K);
      } catch (const DivergenceError&) {
        cell.status = "diverged";
      }
      pt.cells.push_back(cell);
    }
  }
  summarize(pt);
  return pt;
}

}  // namespace detail

/// Fit over the axis values whose seeds all produced a metric.
inline std::optional<LineFit> fit_sweep(const std::vector<double>& abscissa, const std::vector<double>& medians) {
  return fit_loglog(abscissa, medians);
}

/// Runs every axis value of the sweep; values are independent and may run in
/// parallel, and the result does not depend on the thread count.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep.axis) throw InvalidArgument("sweep needs [sweep] axis");
  SweepResult result;
  result.axis = *cfg.sweep.axis;
  result.points.resize(cfg.sweep.values.size());
  ExperimentConfig cell_cfg = cfg;
  cell_cfg.run.threads = 1;
  std::vector<std::exception_ptr> errors(cfg.sweep.values.size());
  detail::parallel_for(cfg.sweep.values.size(), cfg.run.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        result.points[i] = detail::sweep_point(cell_cfg, result.axis, cfg.sweep.values[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> xs, ys;
  for (const auto& pt : result.points) {
    if (pt.unreachable > 0) ++result.unreachable;
    if (pt.unreachable == 0 && pt.median && *pt.median > 0.0 && pt.abscissa > 0.0) {
      xs.push_back(pt.abscissa);
      ys.push_back(*pt.median);
    } else {
      ++result.excluded;
    }
  }
  if (cfg.run.seeds.size() >= 3) result.fit = fit_sweep(xs, ys);
  return result;
}

inline std::string sweep_cells_csv(const SweepResult& r) {
  std::string out = "axis,value,abscissa,p,gamma,seed," + std::string(metric_name(r.axis)) + ",status\n";
  for (const auto& pt : r.points)
    for (const auto& c : pt.cells)
      out += std::string(to_string(r.axis)) + ',' + format_double(pt.value) + ',' + format_double(pt.abscissa) + ',' +
             format_optional(pt.p) + ',' + format_optional(pt.gamma) + ',' + std::to_string(c.seed) + ',' +
             format_optional(c.metric) + ',' + c.status + '\n';
  return out;
}

inline constexpr const char* kSweepSummaryHeader = "axis,value,abscissa,p,gamma,median,min,max,reached,unreachable";

inline std::string sweep_summary_csv(const SweepResult& r) {
  std::string out = std::string(kSweepSummaryHeader) + '\n';
  for (const auto& pt : r.points)
    out += std::string(to_string(r.axis)) + ',' + format_double(pt.value) + ',' + format_double(pt.abscissa) + ',' +
           format_optional(pt.p) + ',' + format_optional(pt.gamma) + ',' + format_optional(pt.median) + ',' +
           format_optional(pt.min) + ',' + format_optional(pt.max) + ',' + std::to_string(pt.reached) + ',' +
           std::to_string(pt.unreachable) + '\n';
  return out;
}

inline std::string sweep_fit_csv(const SweepResult& r) {
  std::string out = "axis,slope,stderr,intercept,points,unreachable,excluded\n";
  out += std::string(to_string(r.axis)) + ',';
  if (r.fit)
    out += format_double(r.fit->slope) + ',' + format_double(r.fit->stderr_slope) + ',' +
           format_double(r.fit->intercept) + ',' + std::to_string(r.fit->points);
  else
    out += ",,,0";
  out += ',' + std::to_string(r.unreachable) + ',' + std::to_string(r.excluded) + '\n';
  return out;
}

/// Recomputes the sweep fit from an emitted summary table.
inline std::optional<LineFit> fit_from_summary(const CsvTable& t) {
  const std::size_t ca = t.column("abscissa"), cm = t.column("median"), cu = t.column("unreachable");
  std::vector<double> xs, ys;
  for (const auto& row : t.rows) {
    const auto x = parse_cell(row[ca]);
    const auto y = parse_cell(row[cm]);
    const auto u = parse_cell(row[cu]);
    if (x && y && u && *u == 0.0 && *x > 0.0 && *y > 0.0) {
      xs.push_back(*x);
      ys.push_back(*y);
    }
  }
  return fit_sweep(xs, ys);
}

}  // namespace gossipeg

#endif  // GOSSIPEG_EXPERIMENT_HPP_
