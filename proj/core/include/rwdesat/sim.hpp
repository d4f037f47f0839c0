#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rwdesat/governor.hpp"

namespace rwdesat {

enum class ControllerKind { kTdmpc, kRgTdmpc };

std::string_view controller_name(ControllerKind k);
ControllerKind parse_controller(std::string_view s);

/// Projected-gradient iterations per sample: fixed (MpcConfig::iterations)
/// or drawn uniformly from [l_min, l_max] with a seeded generator.
struct IterationSchedule {
  bool random = false;
  int l_min = 1;
  int l_max = 10;
};

/// One closed-loop desaturation run on the nonlinear plant.
struct ScenarioConfig {
  SpacecraftParams params;
  State x0 = State::Zero();
  Reference r = Reference::Zero();
  ControllerKind controller = ControllerKind::kRgTdmpc;
  MpcConfig mpc;
  RgConfig rg;
  ConstraintSet constraints;
  std::optional<Reference> v0;
  double duration_orbits = 10.0;
  unsigned seed = 1;
  IterationSchedule iterations;
  /// RK4 substeps per control period.
  int substeps = 10;

  /// Throws PreconditionError on an invalid scenario.
  void validate() const;
};

/// Default pointing-constrained scenario: x0 = [-0.006 0.009 -0.023 0 -n 0 -5 23.5 -4.4 24.3], r = (-1, 1).
ScenarioConfig default_scenario();

struct SimRecord {
  double t = 0.0;
  State x = State::Zero();
  Input u = Input::Zero();
  Reference v = Reference::Zero();
  Branch branch = Branch::kMpc;
  /// 1 accepted, 0 rejected, -1 when no admissibility check ran.
  int admissible = -1;
  double margin_pointing = 0.0;
  double margin_input = 0.0;
  double margin_zerocross = 0.0;
  double t_ctrl = 0.0;
  int iterations = 0;
  int visited = 0;
  int n_rg = 0;
  bool early_exit = false;
  /// Worst margins over the substep grid in (t, t + Ts]; NaN for the final row.
  double substep_pointing = 0.0;
  double substep_zerocross = 0.0;
};

struct SimTrace {
  std::vector<SimRecord> rows;
  double Ts = 0.0;
  int mpc_horizon = 0;
};

/// Runs floor(duration / Ts) control periods and records rows k = 0..K.
/// Errors from the plant carry the offending step index in the message.
SimTrace run_closed_loop(const ScenarioConfig& sc);

struct ConstraintStat {
  std::string name;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::optional<double> first_violation;
  int violations = 0;
};

/// Sample-grid and substep-grid constraint summary.
struct ConstraintReport {
  std::vector<ConstraintStat> samples;
  std::vector<ConstraintStat> substeps;

  bool sample_violation() const;
  const ConstraintStat* find(std::string_view name, bool substep = false) const;
};

ConstraintReport check_trace(const SimTrace& tr, const ConstraintSet& cs);

void write_report(std::ostream& os, const ConstraintReport& rep);

/// Sum over k of |u_{k+1} - u_k|_1.
double total_variation(const SimTrace& tr);

/// Earliest sample time from which every wheel stays within tol of
/// (r1, r2, r1, r2) until the end of the trace; nullopt if never.
std::optional<double> completion_time(const SimTrace& tr, const Reference& r, double tol);

struct GovernorStats {
  int checked = 0;
  int accepted = 0;
  int accepted_early = 0;
  /// Accepted steps whose check ran with the long prediction (v+ != r),
  /// and how many of those exited early.
  int accepted_long = 0;
  int accepted_long_early = 0;
  int replay = 0;
  int lqr = 0;
};
GovernorStats governor_stats(const SimTrace& tr);

const std::vector<std::string>& trace_columns();
void export_csv(const SimTrace& tr, std::ostream& os);
/// Writes to a file; throws Error naming the path on I/O failure.
void export_csv(const SimTrace& tr, const std::string& path);
/// Re-imports the exported columns (diagnostic fields are not stored).
SimTrace import_csv(std::istream& is);

}  // namespace rwdesat
