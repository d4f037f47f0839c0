#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"

namespace {

using namespace rwdesat;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rwdesat_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "rwdesat");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Cli, OverridePrecedenceIsFileThenSeedThenSet) {
  const fs::path dir = scratch("precedence");
  write_file(dir / "c.json", R"({"seed": 5, "duration_orbits": 2, "rg": {"stride": 10}})");
  app::CommonOptions opt;
  opt.config = dir / "c.json";
  EXPECT_EQ(app::merged_config(opt)["seed"], 5);
  opt.seed = 7;
  EXPECT_EQ(app::merged_config(opt)["seed"], 7);
  opt.overrides = {"seed=9", "rg.stride=25", "controller=tdmpc"};
  const app::Json j = app::merged_config(opt);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["rg"]["stride"], 25);
  EXPECT_EQ(j["duration_orbits"], 2);
  const ScenarioConfig sc = app::scenario_from_json(j);
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(sc.rg.stride, 25);
  EXPECT_EQ(sc.controller, ControllerKind::kTdmpc);
}

TEST(Cli, MissingConfigNamesThePath) {
  const CliResult r = run({"simulate", "--config", "/nonexistent/cfg.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/cfg.json"), std::string::npos);
}

TEST(Cli, SyntaxErrorReportsLineAndColumn) {
  const fs::path dir = scratch("syntax");
  write_file(dir / "bad.json", "{\n  \"seed\": 1,\n  \"r\": [1 2]\n}\n");
  try {
    app::load_json_file(dir / "bad.json");
    FAIL() << "expected ConfigError";
  } catch (const app::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Cli, UnknownKeysAreRejectedWithTheirPath) {
  try {
    app::scenario_from_json(app::Json::parse(R"({"rg": {"strid": 3}})"));
    FAIL() << "expected ConfigError";
  } catch (const app::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rg.strid"), std::string::npos) << e.what();
  }
}

TEST(Cli, ValidateSucceedsAndDetectsInjectedJacobianError) {
  const fs::path dir = scratch("validate");
  app::CommonOptions opt;
  opt.out = dir;
  std::ostringstream log;
  EXPECT_EQ(app::cmd_validate(opt, log), 0) << log.str();
  EXPECT_TRUE(fs::exists(dir / "validation.txt"));
  EXPECT_TRUE(fs::exists(dir / "validation.json"));
  ValidationOptions bad;
  bad.linearizer = linearize_a46_flipped;
  std::ostringstream log2;
  EXPECT_EQ(app::cmd_validate(opt, log2, bad), 1);
  EXPECT_NE(log2.str().find("NO"), std::string::npos) << log2.str();
}

TEST(Cli, EmptySweepGridIsAnError) {
  const fs::path dir = scratch("empty_grid");
  write_file(dir / "s.json", R"({"alpha_deg": [], "deltaT_hr": [1]})");
  const CliResult r = run({"doc-sweep", "--config", (dir / "s.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, SynthAtUncontrollableGeometryExplainsFailure) {
  const fs::path dir = scratch("synth90");
  const CliResult r = run({"synth", "--set", "params.alpha_deg=90", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("alpha = 90"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("rank"), std::string::npos) << r.err;
}

TEST(Cli, SynthWritesReport) {
  const fs::path dir = scratch("synth");
  const CliResult r = run({"synth", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "synth.json"));
}

TEST(Cli, SimulateExitCodesReflectViolations) {
  const fs::path dir = scratch("fig4");
  const std::string cfg = RWDESAT_CONFIG_DIR;
  const CliResult rg = run({"simulate", "--config", cfg + "/fig4_rgtdmpc.json", "--out", (dir / "rg").string()});
  EXPECT_EQ(rg.code, 0) << rg.out;
  const CliResult td = run({"simulate", "--config", cfg + "/fig4_tdmpc.json", "--out", (dir / "td").string()});
  EXPECT_EQ(td.code, 2) << td.out;
  for (const char* f : {"trace.csv", "report.txt", "report.json", "scenario.json"}) {
    EXPECT_TRUE(fs::exists(dir / "td" / f)) << f;
  }
}

TEST(Cli, RankScanWritesTable) {
  const fs::path dir = scratch("rank");
  const CliResult r = run({"rank-scan", "--set", "alpha_deg=[0,45,90]", "--set", "beta_deg=[0]", "--out",
                           dir.string(), "--jobs", "1"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "rank.csv"));
}

}  // namespace
