#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gossipeg/gossipeg.hpp"

using namespace gossipeg;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_string(text, "exp.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

const char* kSmallSweep = R"([problem]
a = 1
b = 1
n = 2
M = 9
D = 1
[topology]
graph = ring
[run]
seeds = 1, 2, 3
z0 = 10
epsilon = 0.01
[sweep]
axis = D
values = 0.5, 1, 2
)";

}  // namespace

TEST(Config, Defaults) {
  const auto cfg = parse_config_string("");
  EXPECT_EQ(cfg.problem.M, 9u);
  EXPECT_EQ(cfg.topology.graph, "ring");
  EXPECT_EQ(cfg.run.seeds, std::vector<std::uint64_t>{1});
  EXPECT_EQ(build_z0(cfg.run, 4), Eigen::VectorXd::Ones(4));
  EXPECT_FALSE(cfg.sweep.axis.has_value());
}

TEST(Config, ParsesEveryShippedConfig) {
  for (const auto& entry : std::filesystem::recursive_directory_iterator(GOSSIPEG_SOURCE_DIR "/configs"))
    if (entry.path().extension() == ".ini") EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
}

TEST(Config, UnknownKeyNamesItsLine) {
  const auto msg = error_of("[problem]\na = 1\nalpha = 2\n");
  EXPECT_TRUE(contains(msg, "exp.ini:3:")) << msg;
  EXPECT_TRUE(contains(msg, "alpha")) << msg;
}

TEST(Config, UnknownSectionNamesItsLine) {
  const auto msg = error_of("[problem]\na = 1\n\n[extras]\nx = 1\n");
  EXPECT_TRUE(contains(msg, "exp.ini:4:")) << msg;
}

TEST(Config, EmptyRunRejected) {
  const auto msg = error_of("[run]\nK = 0\n");
  EXPECT_TRUE(contains(msg, "exp.ini:2:")) << msg;
  EXPECT_TRUE(contains(msg, "empty run")) << msg;
}

TEST(Config, BadValuesRejectedWithLine) {
  EXPECT_TRUE(contains(error_of("[problem]\na = one\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[problem]\nsigma2 = -1\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[topology]\ngraph = torus\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[step]\nkind = adaptive\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[run]\nz0 = 1, 2, 3\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[sweep]\naxis = M\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[sweep]\naxis = p_ring_size\nvalues = 4.5\n"), "exp.ini:3:"));
  EXPECT_TRUE(contains(error_of("[run]\nseeds = 1, x\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("[topology]\ngraph = metropolis\n"), "exp.ini:2:"));
}

TEST(Config, DuplicatesAndSyntax) {
  EXPECT_TRUE(contains(error_of("[run]\nK = 5\nK = 6\n"), "exp.ini:3:"));
  EXPECT_TRUE(contains(error_of("[run]\n[run]\n"), "exp.ini:2:"));
  EXPECT_TRUE(contains(error_of("K = 5\n"), "exp.ini:1:"));
  EXPECT_TRUE(contains(error_of("[run\n"), "exp.ini:1:"));
  EXPECT_TRUE(contains(error_of("[run]\njust words\n"), "exp.ini:2:"));
}

TEST(Config, ListsAndComments) {
  const auto cfg = parse_config_string(
      "# header\n[run]\nseeds = [4, 5, 6]   ; trailing\nz0 = 1, 2, 3, 4\n[sweep]\naxis = epsilon\nvalues = 0.1,0.01\n");
  EXPECT_EQ(cfg.run.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_EQ(build_z0(cfg.run, 4), Eigen::Vector4d(1, 2, 3, 4));
  EXPECT_EQ(cfg.sweep.values, (std::vector<double>{0.1, 0.01}));
  EXPECT_EQ(*cfg.sweep.axis, SweepAxis::epsilon);
}

TEST(Config, SeedOverrideKeepsCount) {
  auto cfg = parse_config_string("[run]\nseeds = 1, 2, 3, 4, 5\n");
  override_seed(cfg, 40);
  EXPECT_EQ(cfg.run.seeds, (std::vector<std::uint64_t>{40, 41, 42, 43, 44}));
}

TEST(Csv, DoublesRoundTripExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (int t = 0; t < 10000; ++t) {
    const double v = std::pow(10.0, u(rng) / 10.0) * (t % 2 ? 1 : -1);
    EXPECT_EQ(*parse_cell(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_FALSE(parse_cell("").has_value());
}

TEST(Csv, RunTableRoundTrip) {
  const auto p = make_bilinear(1, 1, 2, 4, 1.0, Eigen::VectorXd::Zero(2), 9.0);
  RunOptions opt;
  opt.iterations = 30;
  opt.cadence = 3;
  opt.seed = 5;
  opt.z0 = Eigen::VectorXd::Ones(4);
  const auto recs = run_collect(p, constant_schedule(ring_matrix(4)), StepSchedule::constant_step(0.1), opt);
  std::istringstream in(run_csv(recs));
  const CsvTable t = parse_csv(in);
  EXPECT_EQ(t.joined_header(), kRunCsvHeader);
  ASSERT_EQ(t.rows.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(*parse_cell(t.rows[i][t.column("k")]), static_cast<double>(recs[i].k));
    EXPECT_EQ(*parse_cell(t.rows[i][t.column("gamma")]), recs[i].gamma);
    EXPECT_EQ(parse_cell(t.rows[i][t.column("dist2")]), recs[i].dist2);
    EXPECT_EQ(*parse_cell(t.rows[i][t.column("consensus_err")]), recs[i].consensus_err);
    EXPECT_EQ(*parse_cell(t.rows[i][t.column("avg_sq_opnorm")]), recs[i].avg_sq_opnorm);
    EXPECT_FALSE(parse_cell(t.rows[i][t.column("gap")]).has_value());
  }
}

TEST(Csv, RejectsRaggedAndEmptyInput) {
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(parse_csv(ragged), Error);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty), Error);
}

TEST(Regression, RecoversExactLine) {
  const auto fit = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_DOUBLE_EQ(fit.slope, 2.0);
  EXPECT_DOUBLE_EQ(fit.intercept, 1.0);
  EXPECT_NEAR(fit.stderr_slope, 0.0, 1e-15);
  const auto ll = fit_loglog({1, 10, 100}, {3, 30, 300});
  ASSERT_TRUE(ll.has_value());
  EXPECT_NEAR(ll->slope, 1.0, 1e-12);
  EXPECT_FALSE(fit_loglog({1, -1}, {1, 1}).has_value());
}

TEST(Regression, StandardErrorMatchesTextbookFormula) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{1.1, 1.9, 3.2, 3.9, 5.3};
  const auto fit = fit_line(x, y);
  double rss = 0;
  for (std::size_t i = 0; i < 5; ++i) rss += std::pow(y[i] - fit.intercept - fit.slope * x[i], 2);
  EXPECT_NEAR(fit.slope, 1.04, 1e-12);
  EXPECT_NEAR(fit.stderr_slope, std::sqrt(rss / 3 / 10), 1e-12);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Sweep, FitIsRecomputableFromSummary) {
  const auto cfg = parse_config_string(kSmallSweep);
  const SweepResult r = run_sweep(cfg);
  ASSERT_TRUE(r.fit.has_value());
  std::istringstream in(sweep_summary_csv(r));
  const auto table = parse_csv(in);
  EXPECT_EQ(table.joined_header(), kSweepSummaryHeader);
  const auto refit = fit_from_summary(table);
  ASSERT_TRUE(refit.has_value());
  EXPECT_NEAR(refit->slope, r.fit->slope, 1e-9);
  EXPECT_NEAR(refit->stderr_slope, r.fit->stderr_slope, 1e-9);
  EXPECT_EQ(refit->points, 3u);
  for (const auto& pt : r.points) {
    EXPECT_EQ(pt.reached, 3u);
    ASSERT_TRUE(pt.gamma.has_value());
    EXPECT_GT(*pt.gamma, 0.0);
  }
}

TEST(Sweep, ParallelEqualsSerial) {
  auto cfg = parse_config_string(kSmallSweep);
  const auto serial = run_sweep(cfg);
  cfg.run.threads = 3;
  const auto parallel = run_sweep(cfg);
  EXPECT_EQ(sweep_cells_csv(serial), sweep_cells_csv(parallel));
  EXPECT_EQ(sweep_summary_csv(serial), sweep_summary_csv(parallel));
}

TEST(Sweep, UnreachableValuesAreCountedAndExcluded) {
  auto cfg = parse_config_string(kSmallSweep);
  cfg.sweep.axis = SweepAxis::epsilon;
  cfg.sweep.values = {0.1, 0.01, 1e-30};
  cfg.run.k_max = 20000;
  const auto r = run_sweep(cfg);
  EXPECT_EQ(r.unreachable, 1u);
  EXPECT_EQ(r.excluded, 1u);
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_EQ(r.fit->points, 2u);
  EXPECT_EQ(r.points[2].unreachable, 3u);
}

TEST(Sweep, FewerThanThreeSeedsGivesNoFit) {
  auto cfg = parse_config_string(kSmallSweep);
  cfg.run.seeds = {1, 2};
  EXPECT_FALSE(run_sweep(cfg).fit.has_value());
}

TEST(Plot, SvgIsDeterministicAndWellFormed) {
  PlotSpec spec;
  spec.title = "a <b> & c";
  spec.log_y = true;
  spec.series.push_back({"one", {0, 1, 2, 3}, {1, 0.1, 0.01, 0.001}});
  spec.series.push_back({"two", {0, 1, 2, 3}, {2, 0.2, 0.02, 0.002}, false, true});
  const std::string a = render_svg(spec), b = render_svg(spec);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_TRUE(contains(a, "</svg>"));
  EXPECT_TRUE(contains(a, "a &lt;b&gt; &amp; c"));
  std::size_t count = 0;
  for (auto pos = a.find("<polyline"); pos != std::string::npos; pos = a.find("<polyline", pos + 1)) ++count;
  EXPECT_EQ(count, 2u);
}

TEST(Plot, FitAnnotationShowsSlope) {
  PlotSpec spec;
  spec.log_x = spec.log_y = true;
  spec.series.push_back({"K*", {1, 10, 100}, {5, 50, 500}, true});
  spec.fit = fit_loglog(spec.series[0].x, spec.series[0].y);
  EXPECT_TRUE(contains(render_svg(spec), "slope = 1"));
}

TEST(Output, AtomicWriteCreatesDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "gossipeg_test_config" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_file_atomic(dir / "x.csv", "a\n1\n");
  const CsvTable t = read_csv((dir / "x.csv").string());
  EXPECT_EQ(t.rows.size(), 1u);
  std::size_t leftovers = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) leftovers += e.path().filename() != "x.csv";
  EXPECT_EQ(leftovers, 0u);
  std::filesystem::remove_all(dir.parent_path());
}
