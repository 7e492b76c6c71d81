#ifndef GOSSIPEG_FIGURES_HPP_
#define GOSSIPEG_FIGURES_HPP_

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gossipeg/csv.hpp"
#include "gossipeg/error.hpp"
#include "gossipeg/experiment.hpp"
#include "gossipeg/metrics.hpp"
#include "gossipeg/plot.hpp"

namespace gossipeg {

struct PlotRequest {
  std::vector<std::string> paths;
  std::string column = "dist2";          // y column for run tables
  std::optional<bool> log_x;             // defaults: run tables linear x, sweeps log
  std::optional<bool> log_y;             // defaults: log
  std::optional<Regime> overlay;         // rate_predict curve for run tables
  std::optional<ExperimentConfig> config;  // needed by the overlay
  std::string title;
};

struct Figure {
  PlotSpec spec;
  std::optional<LineFit> fit;  // sweep tables only
};

inline RateInputs rate_inputs(const ExperimentConfig& cfg) {
  const BilinearProblem problem = build_problem(cfg.problem);
  const TopologySchedule schedule = build_schedule(cfg.topology, problem.machines());
  const ConsensusEstimate p = consensus_estimate(cfg.topology, schedule);
  const Iterate z0 = build_z0(cfg.run, problem.dim());
  RateInputs in;
  in.L = problem.lipschitz();
  in.mu = problem.mu();
  in.sigma2 = problem.sigma2();
  in.D = problem.heterogeneity();
  in.M = static_cast<double>(problem.machines());
  in.p = p.p_hat;
  in.tau = static_cast<double>(cfg.topology.tau);
  in.K = static_cast<double>(cfg.run.K);
  if (const auto z_star = problem.solution()) {
    in.r0_sq = (z0 - *z_star).squaredNorm();
    in.omega_c = 2.0 * cfg.run.gap_radius.value_or(default_gap_radius(z0, *z_star));
  }
  return in;
}

/// Builds the figure for a set of CSV files sharing one schema.
inline Figure make_figure(const PlotRequest& req) {
  if (req.paths.empty()) throw Error("plot: no input files");
  std::vector<CsvTable> tables;
  for (const auto& p : req.paths) {
    tables.push_back(read_csv(p));
    if (tables.back().rows.empty()) throw Error("plot: '" + p + "' has no data rows");
    if (tables.back().header != tables.front().header)
      throw Error("plot: schema mismatch between '" + req.paths.front() + "' and '" + p + "'");
  }
  Figure fig;
  fig.spec.title = req.title;
  const CsvTable& first = tables.front();

  if (first.joined_header() == kRunCsvHeader) {
    const std::size_t ck = first.column("k");
    const std::size_t cy = first.column(req.column);
    fig.spec.x_label = "iteration k";
    fig.spec.y_label = req.column;
    fig.spec.log_x = req.log_x.value_or(false);
    fig.spec.log_y = req.log_y.value_or(true);
    double k_max = 0.0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      Series s;
      s.label = std::filesystem::path(req.paths[i]).stem().string();
      for (const auto& row : tables[i].rows) {
        const auto k = parse_cell(row[ck]);
        const auto y = parse_cell(row[cy]);
        if (!k || !y) continue;
        s.x.push_back(*k);
        s.y.push_back(*y);
        k_max = std::max(k_max, *k);
      }
      fig.spec.series.push_back(std::move(s));
    }
    if (req.overlay) {
      if (!req.config) throw Error("plot: the rate overlay needs --config");
      RateInputs in = rate_inputs(*req.config);
      Series s;
      s.label = "rate bound (" + std::string(to_string(*req.overlay)) + ")";
      s.dashed = true;
      const int points = 200;
      for (int i = 0; i <= points; ++i) {
        const double k = std::max(1.0, std::round(k_max * static_cast<double>(i) / points));
        if (!s.x.empty() && s.x.back() == k) continue;
        in.K = k;
        s.x.push_back(k);
        s.y.push_back(rate_predict(*req.overlay, in).total());
      }
      fig.spec.series.push_back(std::move(s));
    }
    return fig;
  }

  if (first.joined_header() == kSweepSummaryHeader) {
    if (tables.size() != 1) throw Error("plot: sweep figures take a single summary table");
    const std::size_t ca = first.column("abscissa"), cm = first.column("median");
    const std::string axis = first.rows.front()[first.column("axis")];
    fig.spec.x_label = axis == "epsilon" ? "1/epsilon" : axis == "p_ring_size" ? "1/p" : axis;
    fig.spec.y_label = (axis == "sigma2" || axis == "gamma") ? "plateau dist2" : "K*";
    fig.spec.log_x = req.log_x.value_or(true);
    fig.spec.log_y = req.log_y.value_or(true);
    Series s;
    s.label = "median over seeds";
    s.markers = true;
    for (const auto& row : first.rows) {
      const auto x = parse_cell(row[ca]);
      const auto y = parse_cell(row[cm]);
      if (!x || !y) continue;
      s.x.push_back(*x);
      s.y.push_back(*y);
    }
    fig.spec.series.push_back(std::move(s));
    fig.fit = fit_from_summary(first);
    if (fig.spec.log_x && fig.spec.log_y) fig.spec.fit = fig.fit;
    return fig;
  }
  throw Error("plot: unrecognized csv schema '" + first.joined_header() + "'");
}

}  // namespace gossipeg

#endif  // GOSSIPEG_FIGURES_HPP_
