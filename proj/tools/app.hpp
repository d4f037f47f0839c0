#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwdesat/analysis.hpp"
#include "rwdesat/sim.hpp"
#include "rwdesat/validation.hpp"

namespace rwdesat::app {

using Json = nlohmann::json;

enum ExitCode : int { kOk = 0, kError = 1, kViolation = 2 };

/// Configuration problem with the offending key or file position in the message.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Reads a JSON config file. Syntax errors report line and column.
Json load_json_file(const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides in order. The value is parsed as JSON when
/// possible and kept as a string otherwise.
void apply_overrides(Json& cfg, const std::vector<std::string>& overrides);

/// Typed views of a merged config. Missing keys keep the library defaults;
/// unknown keys are rejected with their dotted path.
ScenarioConfig scenario_from_json(const Json& j);
SweepSpec sweep_from_json(const Json& j);

struct RankScanConfig {
  SpacecraftParams params;
  std::vector<double> alpha_deg;
  std::vector<double> beta_deg;
  RankScanOptions options;
};
RankScanConfig rank_scan_from_json(const Json& j);

struct SynthConfig {
  SpacecraftParams params;
  Reference r = Reference(-1.0, 1.0);
  MpcConfig mpc;
  RgConfig rg;
  ConstraintSet constraints;
  int samples = 1000;
  int rollout = 3000;
  unsigned seed = 7;
  double wheel_band = 1.0;
};
SynthConfig synth_from_json(const Json& j);

/// Scenario as JSON (geometry in degrees, states in rad and rad/s).
Json scenario_to_json(const ScenarioConfig& sc);

struct CommonOptions {
  std::filesystem::path config;
  std::filesystem::path out = "out";
  int jobs = 0;  // 0: hardware concurrency
  std::optional<unsigned> seed;
  std::vector<std::string> overrides;
};

/// Loads the config file (if any) and layers --seed and --set on top.
Json merged_config(const CommonOptions& opt);

int cmd_simulate(const CommonOptions& opt, std::ostream& log);
int cmd_doc_sweep(const CommonOptions& opt, std::ostream& log);
int cmd_rank_scan(const CommonOptions& opt, std::ostream& log);
int cmd_synth(const CommonOptions& opt, std::ostream& log);
int cmd_validate(const CommonOptions& opt, std::ostream& log, const ValidationOptions& vopt = {});

/// Parses argv and dispatches; every error becomes exit code 1 with a message on `err`.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rwdesat::app
