#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gossipeg/gossipeg.hpp"

using namespace gossipeg;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gossipeg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) const {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  Result invoke(const std::string& args) const {
    const fs::path log = dir_ / "cli.log";
    const std::string cmd = std::string("\"") + GOSSIPEG_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
  }

  fs::path dir_;
};

const char* kRunConfig = R"([problem]
a = 1
b = 1
M = 9
D = 1
sigma2 = 100
[step]
kind = constant
gamma = 0.05
[run]
K = 400
cadence = 20
seeds = 1, 2, 3
z0 = 10
)";

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_F(Cli, RunIsByteReproducible) {
  const auto cfg = write("run.ini", kRunConfig);
  ASSERT_EQ(invoke("run --quiet --config " + cfg.string() + " --out " + (dir_ / "a").string()).status, 0);
  ASSERT_EQ(invoke("run --quiet --config " + cfg.string() + " --out " + (dir_ / "b").string()).status, 0);
  for (int s = 1; s <= 3; ++s) {
    const std::string name = "run_seed" + std::to_string(s) + ".csv";
    const std::string a = slurp(dir_ / "a" / name);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b" / name));
    EXPECT_EQ(a.substr(0, a.find('\n')), kRunCsvHeader);
  }
}

TEST_F(Cli, SeedOverrideRenamesAndChangesOutput) {
  const auto cfg = write("run.ini", kRunConfig);
  ASSERT_EQ(invoke("run --quiet --config " + cfg.string() + " --seed 7 --out " + dir_.string()).status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "run_seed7.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "run_seed9.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "run_seed1.csv"));
}

TEST_F(Cli, InvalidConfigExitsWithLocation) {
  const auto cfg = write("bad.ini", "[problem]\na = 1\n[run]\nK = 0\n");
  const auto r = invoke("run --config " + cfg.string() + " --out " + dir_.string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("bad.ini:4:"), std::string::npos) << r.output;
  const auto unknown = write("unknown.ini", "[problem]\nflavour = 3\n");
  const auto u = invoke("run --config " + unknown.string());
  EXPECT_EQ(u.status, 2);
  EXPECT_NE(u.output.find("unknown.ini:2:"), std::string::npos) << u.output;
}

TEST_F(Cli, MissingConfigFileIsAConfigError) {
  EXPECT_EQ(invoke("run --config " + (dir_ / "nope.ini").string()).status, 2);
}

TEST_F(Cli, EstimatePOnRing) {
  const auto cfg = write("p.ini", "[topology]\ngraph = ring\n");
  ASSERT_EQ(invoke("estimate-p --quiet --config " + cfg.string() + " --out " + dir_.string()).status, 0);
  const auto t = read_csv((dir_ / "estimate_p.csv").string());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(*parse_cell(t.rows[0][t.column("p_hat")]), 0.2876, 5e-5);
  EXPECT_EQ(t.rows[0][t.column("method")], "spectral");
}

TEST_F(Cli, EstimatePRejectsSpectralForTimeVarying) {
  const auto cfg = write("p.ini", "[topology]\nkind = periodic_local\ngraph = full\ntau = 5\n");
  const auto r = invoke("estimate-p --config " + cfg.string() + " --out " + dir_.string());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("monte_carlo"), std::string::npos) << r.output;
}

TEST_F(Cli, TuneUnreachableExitCode) {
  const auto cfg = write("t.ini", "[run]\nepsilon = 1e-30\nk_max = 1000\ndecades = 1\nper_decade = 2\n");
  EXPECT_EQ(invoke("tune --config " + cfg.string() + " --out " + dir_.string()).status, 4);
}

TEST_F(Cli, PlotThreeRunsGivesThreeCurves) {
  const auto cfg = write("run.ini", kRunConfig);
  ASSERT_EQ(invoke("run --quiet --config " + cfg.string() + " --out " + dir_.string()).status, 0);
  const std::string files = (dir_ / "run_seed1.csv").string() + " " + (dir_ / "run_seed2.csv").string() + " " +
                            (dir_ / "run_seed3.csv").string();
  ASSERT_EQ(invoke("plot --quiet " + files + " --out " + dir_.string() + " --name fig.svg").status, 0);
  const std::string svg = slurp(dir_ / "fig.svg");
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_NE(svg.find("run_seed2"), std::string::npos);
  ASSERT_EQ(invoke("plot --quiet " + files + " --out " + dir_.string() + " --name again.svg").status, 0);
  EXPECT_EQ(svg, slurp(dir_ / "again.svg"));
}

TEST_F(Cli, PlotRejectsEmptyAndMismatchedInput) {
  const auto empty = write("empty.csv", "");
  EXPECT_EQ(invoke("plot " + empty.string() + " --out " + dir_.string()).status, 1);
  const auto run = write("run.csv", std::string(kRunCsvHeader) + "\n0,0.1,1,1,0,,1\n1,0.1,0.5,0.5,0,,1\n");
  const auto other = write("other.csv", "x,y\n1,2\n");
  const auto r = invoke("plot " + run.string() + " " + other.string() + " --out " + dir_.string());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("schema"), std::string::npos) << r.output;
}

TEST_F(Cli, SweepPlotSlopeMatchesFit) {
  const auto cfg = write("s.ini", R"([problem]
D = 1
[run]
seeds = 1, 2, 3
z0 = 10
epsilon = 0.01
[sweep]
axis = D
values = 0.5, 1, 2
)");
  ASSERT_EQ(invoke("sweep --quiet --config " + cfg.string() + " --out " + dir_.string()).status, 0);
  const auto fit = read_csv((dir_ / "sweep_fit.csv").string());
  const double slope = *parse_cell(fit.rows[0][fit.column("slope")]);
  const auto r = invoke("plot " + (dir_ / "sweep_summary.csv").string() + " --out " + dir_.string());
  ASSERT_EQ(r.status, 0) << r.output;
  const auto pos = r.output.find("slope ");
  ASSERT_NE(pos, std::string::npos) << r.output;
  const double plotted = std::stod(r.output.substr(pos + 6));
  EXPECT_NEAR(plotted, slope, 1e-9);
  EXPECT_NE(slurp(dir_ / "figure.svg").find("slope = "), std::string::npos);
}
