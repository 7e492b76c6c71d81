#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gossipeg/gossipeg.hpp"

namespace fs = std::filesystem;
using namespace gossipeg;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "first master seed; overrides [run] seeds keeping their count");
  cmd->add_option("--out", c.out, "output directory; overrides [output] directory");
  cmd->add_flag("--quiet", c.quiet, "only print errors");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) override_seed(cfg, *c.seed);
  if (c.out) cfg.output.directory = *c.out;
  return cfg;
}

void write_svg(const fs::path& path, const PlotSpec& spec) { write_file_atomic(path, render_svg(spec)); }

int cmd_run_main(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const auto outputs = cmd_run(cfg);
  int status = 0;
  std::vector<std::string> paths;
  for (const auto& o : outputs) {
    paths.push_back(o.path.string());
    if (o.diverged) {
      std::cerr << "seed " << o.seed << ": " << *o.diverged << "\n";
      status = 3;
    }
    if (!c.quiet && !o.records.empty()) {
      const RunRecord& last = o.records.back();
      std::cout << "seed " << o.seed << ": k=" << last.k << " dist2=" << format_optional(last.dist2)
                << " consensus_err=" << format_double(last.consensus_err) << " -> " << o.path.string() << "\n";
    }
  }
  if (cfg.output.emit_plots) {
    PlotRequest req;
    req.paths = paths;
    req.title = "distance to solution";
    write_svg(fs::path(cfg.output.directory) / "run.svg", make_figure(req).spec);
  }
  return status;
}

int cmd_sweep_main(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const SweepResult r = run_sweep(cfg);
  const fs::path dir(cfg.output.directory);
  write_file_atomic(dir / "sweep.csv", sweep_cells_csv(r));
  write_file_atomic(dir / "sweep_summary.csv", sweep_summary_csv(r));
  write_file_atomic(dir / "sweep_fit.csv", sweep_fit_csv(r));
  if (!c.quiet) {
    for (const auto& pt : r.points)
      std::cout << to_string(r.axis) << "=" << format_double(pt.value) << " abscissa=" << format_double(pt.abscissa)
                << " gamma=" << format_optional(pt.gamma) << " median=" << format_optional(pt.median)
                << (pt.unreachable ? " (" + std::to_string(pt.unreachable) + " unreachable)" : "") << "\n";
    if (r.fit)
      std::cout << "slope " << format_double(r.fit->slope) << " +- " << format_double(r.fit->stderr_slope) << " over "
                << r.fit->points << " points\n";
    else
      std::cout << "no slope fit (needs >= 3 seeds and >= 2 usable axis values)\n";
    if (r.unreachable) std::cout << r.unreachable << " axis values had unreachable targets\n";
  }
  if (cfg.output.emit_plots) {
    PlotRequest req;
    req.paths = {(dir / "sweep_summary.csv").string()};
    req.title = "sweep over " + std::string(to_string(r.axis));
    write_svg(dir / "sweep.svg", make_figure(req).spec);
  }
  return 0;
}

int cmd_estimate_p_main(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ConsensusEstimate e = cmd_estimate_p(cfg);
  write_file_atomic(fs::path(cfg.output.directory) / "estimate_p.csv", estimate_p_csv(e));
  if (!c.quiet)
    std::cout << "p_hat=" << format_double(e.p_hat) << " tau=" << e.tau << " method=" << to_string(e.method)
              << " trials=" << e.trials << " half_width=" << format_double(e.half_width) << "\n";
  return 0;
}

int cmd_tune_main(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const TuneResult r = cmd_tune(cfg);
  write_file_atomic(fs::path(cfg.output.directory) / "tune.csv", tune_csv(cfg, r));
  if (!c.quiet) {
    std::cout << "gamma=" << format_double(r.gamma) << " mean_k=" << format_double(r.mean_k) << "\n";
    for (std::size_t i = 0; i < r.per_seed_k.size(); ++i)
      std::cout << "  seed " << cfg.run.seeds[i] << ": k*=" << r.per_seed_k[i] << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized extragradient with time-varying gossip: experiment harness"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, p_opts, tune_opts, plot_opts;
  auto* run = app.add_subcommand("run", "run the solver, one CSV per seed");
  add_common(run, run_opts, true);
  auto* sweep = app.add_subcommand("sweep", "sweep one parameter and fit a log-log slope");
  add_common(sweep, sweep_opts, true);
  auto* estp = app.add_subcommand("estimate-p", "estimate the expected consensus rate p");
  add_common(estp, p_opts, true);
  auto* tune = app.add_subcommand("tune", "tune the constant step for [run] epsilon");
  add_common(tune, tune_opts, true);

  auto* plot = app.add_subcommand("plot", "render CSV outputs as SVG");
  add_common(plot, plot_opts, false);
  std::vector<std::string> plot_paths;
  std::string plot_column = "dist2";
  std::string plot_overlay;
  std::string plot_name = "figure.svg";
  std::string plot_title;
  bool logx = false, linx = false, logy = false, liny = false;
  plot->add_option("csv", plot_paths, "run CSVs or one sweep_summary.csv")->required()->check(CLI::ExistingFile);
  plot->add_option("--column", plot_column, "y column of run CSVs");
  plot->add_option("--overlay", plot_overlay, "rate bound overlay: SM, M or NM (needs --config)")
      ->check(CLI::IsMember({"SM", "M", "NM"}));
  plot->add_option("--name", plot_name, "file name inside the output directory");
  plot->add_option("--title", plot_title, "figure title");
  plot->add_flag("--logx", logx, "logarithmic x axis");
  plot->add_flag("--linx", linx, "linear x axis");
  plot->add_flag("--logy", logy, "logarithmic y axis");
  plot->add_flag("--liny", liny, "linear y axis");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run_main(run_opts);
    if (*sweep) return cmd_sweep_main(sweep_opts);
    if (*estp) return cmd_estimate_p_main(p_opts);
    if (*tune) return cmd_tune_main(tune_opts);
    if (*plot) {
      PlotRequest req;
      req.paths = plot_paths;
      req.column = plot_column;
      req.title = plot_title;
      if (logx || linx) req.log_x = logx;
      if (logy || liny) req.log_y = logy;
      if (!plot_overlay.empty()) {
        req.overlay = plot_overlay == "SM" ? Regime::SM : plot_overlay == "M" ? Regime::M : Regime::NM;
        if (plot_opts.config.empty()) throw Error("plot: --overlay needs --config");
      }
      std::string dir = ".";
      if (!plot_opts.config.empty()) {
        req.config = load(plot_opts);
        dir = req.config->output.directory;
      }
      if (plot_opts.out) dir = *plot_opts.out;
      const Figure fig = make_figure(req);
      const fs::path path = fs::path(dir) / plot_name;
      write_svg(path, fig.spec);
      if (!plot_opts.quiet) {
        std::cout << "wrote " << path.string() << "\n";
        if (fig.fit)
          std::cout << "slope " << format_double(fig.fit->slope) << " +- " << format_double(fig.fit->stderr_slope)
                    << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TargetUnreachable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
