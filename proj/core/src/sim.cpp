#include "rwdesat/sim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "rwdesat/csv.hpp"

namespace rwdesat {

std::string_view controller_name(ControllerKind k) {
  return k == ControllerKind::kTdmpc ? "tdmpc" : "rg-tdmpc";
}

ControllerKind parse_controller(std::string_view s) {
  if (s == "tdmpc") return ControllerKind::kTdmpc;
  if (s == "rg-tdmpc") return ControllerKind::kRgTdmpc;
  throw Error("unknown controller kind '" + std::string(s) + "' (expected tdmpc or rg-tdmpc)");
}

namespace {

Branch parse_branch(std::string_view s) {
  for (Branch b : {Branch::kMpc, Branch::kAccepted, Branch::kReplay, Branch::kLqr}) {
    if (branch_name(b) == s) return b;
  }
  throw Error("unknown branch '" + std::string(s) + "'");
}

}  // namespace

void ScenarioConfig::validate() const {
  params.validate();
  mpc.validate();
  constraints.validate();
  if (!(duration_orbits > 0.0)) throw PreconditionError("scenario: duration must be positive");
  if (!x0.allFinite()) throw PreconditionError("scenario: x0 must be finite");
  if (!r.allFinite()) throw PreconditionError("scenario: reference must be finite");
  if (substeps < 1) throw PreconditionError("scenario: substeps must be >= 1");
  if (iterations.random && (iterations.l_min < 1 || iterations.l_max < iterations.l_min)) {
    throw PreconditionError("scenario: need 1 <= l_min <= l_max");
  }
  if (constraints.zero_crossing) {
    for (int i = 0; i < kInputDim; ++i) {
      if (x0(idx::kWheel0 + i) == 0.0) throw PreconditionError("scenario: zero-crossing needs nonzero initial wheel speeds");
    }
  }
  if (controller == ControllerKind::kRgTdmpc) rg.validate(mpc.horizon);
}

ScenarioConfig default_scenario() {
  ScenarioConfig sc;
  sc.x0 << -0.006, 0.009, -0.023, 0.0, -sc.params.n, 0.0, -5.0, 23.5, -4.4, 24.3;
  sc.r = Reference(-1.0, 1.0);
  return sc;
}

SimTrace run_closed_loop(const ScenarioConfig& sc) {
  sc.validate();
  const SpacecraftParams& p = sc.params;
  const Synthesis syn = synthesize(p, sc.r, sc.mpc);
  const double Ts = sc.mpc.Ts;
  const long steps = static_cast<long>(std::floor(sc.duration_orbits * p.orbit_period() / Ts));

  std::optional<TdmpcController> mpc;
  std::optional<RgTdmpcController> rg;
  if (sc.controller == ControllerKind::kTdmpc) {
    mpc.emplace(syn, sc.mpc);
  } else {
    rg.emplace(p, syn, sc.mpc, sc.rg, sc.constraints, sc.x0, sc.r, sc.v0);
  }
  const State xeq_r = equilibrium(sc.r, p);

  std::mt19937 rng(sc.seed);
  std::uniform_int_distribution<int> draw(sc.iterations.l_min, sc.iterations.l_max);

  SimTrace tr;
  tr.Ts = Ts;
  tr.mpc_horizon = sc.mpc.horizon;
  tr.rows.reserve(static_cast<std::size_t>(steps) + 1);
  State x = sc.x0;
  const double dt = Ts / sc.substeps;
  for (long k = 0; k <= steps; ++k) {
    SimRecord rec;
    rec.t = static_cast<double>(k) * Ts;
    rec.x = x;
    rec.iterations = sc.iterations.random ? draw(rng) : sc.mpc.iterations;

    const auto t0 = std::chrono::steady_clock::now();
    if (mpc) {
      const Vector U = mpc->solve(Vec10(x - xeq_r), rec.iterations);
      rec.u = U.head<kInputDim>();
      rec.v = sc.r;
      rec.branch = Branch::kMpc;
    } else {
      const GovernorDecision d = rg->step(x, rec.iterations);
      rec.u = d.u;
      rec.v = d.v;
      rec.branch = d.branch;
      rec.admissible = d.admissible ? 1 : 0;
      rec.visited = d.visited;
      rec.n_rg = d.n_rg;
      rec.early_exit = d.early_exit;
    }
    rec.t_ctrl = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rec.margin_pointing = sc.constraints.pointing_margin(x);
    rec.margin_input = sc.constraints.input_margin(rec.u);
    rec.margin_zerocross = sc.constraints.zero_cross_margin(x);

    if (k == steps) {
      rec.substep_pointing = std::numeric_limits<double>::quiet_NaN();
      rec.substep_zerocross = std::numeric_limits<double>::quiet_NaN();
    } else {
      rec.substep_pointing = std::numeric_limits<double>::infinity();
      rec.substep_zerocross = std::numeric_limits<double>::infinity();
      try {
        for (int s = 0; s < sc.substeps; ++s) {
          x = rk4_step(x, rec.u, dt, p);
          rec.substep_pointing = std::min(rec.substep_pointing, sc.constraints.pointing_margin(x));
          rec.substep_zerocross = std::min(rec.substep_zerocross, sc.constraints.zero_cross_margin(x));
        }
      } catch (const SingularityError& e) {
        throw SingularityError("closed loop step " + std::to_string(k) + ": " + e.what());
      }
      if (!x.allFinite()) throw NumericalError("closed loop step " + std::to_string(k) + ": non-finite state");
    }
    tr.rows.push_back(rec);
  }
  return tr;
}

bool ConstraintReport::sample_violation() const {
  for (const auto& s : samples) {
    if (s.violations > 0) return true;
  }
  return false;
}

const ConstraintStat* ConstraintReport::find(std::string_view name, bool substep) const {
  for (const auto& s : substep ? substeps : samples) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ConstraintReport check_trace(const SimTrace& tr, const ConstraintSet& cs) {
  ConstraintReport rep;
  auto update = [](ConstraintStat& st, double margin, double t) {
    if (std::isnan(margin)) return;
    st.worst_margin = std::min(st.worst_margin, margin);
    if (margin < 0.0) {
      ++st.violations;
      if (!st.first_violation) st.first_violation = t;
    }
  };
  auto named = [](const char* name) {
    ConstraintStat st;
    st.name = name;
    return st;
  };
  ConstraintStat pointing = named("pointing"), input = named("input"), zc = named("zero_crossing");
  ConstraintStat sub_pointing = named("pointing"), sub_zc = named("zero_crossing");
  for (const auto& row : tr.rows) {
    update(pointing, cs.pointing_margin(row.x), row.t);
    update(input, cs.input_margin(row.u), row.t);
    update(sub_pointing, row.substep_pointing, row.t);
    if (cs.zero_crossing) {
      update(zc, cs.zero_cross_margin(row.x), row.t);
      update(sub_zc, row.substep_zerocross, row.t);
    }
  }
  rep.samples = {pointing, input};
  rep.substeps = {sub_pointing};
  if (cs.zero_crossing) {
    rep.samples.push_back(zc);
    rep.substeps.push_back(sub_zc);
  }
  return rep;
}

void write_report(std::ostream& os, const ConstraintReport& rep) {
  auto block = [&](const char* title, const std::vector<ConstraintStat>& stats) {
    os << title << '\n';
    for (const auto& s : stats) {
      os << "  " << std::left << std::setw(14) << s.name << " worst margin " << std::setw(12) << s.worst_margin
         << " violations " << s.violations;
      if (s.first_violation) os << " first at t = " << *s.first_violation << " s";
      os << '\n';
    }
  };
  block("control samples:", rep.samples);
  block("1 s substeps:", rep.substeps);
}

double total_variation(const SimTrace& tr) {
  double tv = 0.0;
  for (std::size_t k = 1; k < tr.rows.size(); ++k) tv += (tr.rows[k].u - tr.rows[k - 1].u).lpNorm<1>();
  return tv;
}

std::optional<double> completion_time(const SimTrace& tr, const Reference& r, double tol) {
  const Vec4 target(r(0), r(1), r(0), r(1));
  std::optional<double> since;
  for (const auto& row : tr.rows) {
    const bool inside = (row.x.tail<4>() - target).cwiseAbs().maxCoeff() <= tol;
    if (!inside) {
      since.reset();
    } else if (!since) {
      since = row.t;
    }
  }
  return since;
}

GovernorStats governor_stats(const SimTrace& tr) {
  GovernorStats st;
  for (const auto& row : tr.rows) {
    if (row.admissible >= 0) ++st.checked;
    switch (row.branch) {
      case Branch::kAccepted:
        ++st.accepted;
        if (row.early_exit) ++st.accepted_early;
        if (row.n_rg > tr.mpc_horizon) {
          ++st.accepted_long;
          if (row.early_exit) ++st.accepted_long_early;
        }
        break;
      case Branch::kReplay:
        ++st.replay;
        break;
      case Branch::kLqr:
        ++st.lqr;
        break;
      case Branch::kMpc:
        break;
    }
  }
  return st;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "t_s", "phi", "theta", "psi", "w1", "w2", "w3", "Om1", "Om2", "Om3", "Om4", "u1", "u2", "u3", "u4", "v1", "v2",
      "branch", "admissible", "margin_pointing", "margin_input", "margin_zerocross", "t_ctrl_s"};
  return cols;
}

void export_csv(const SimTrace& tr, std::ostream& os) {
  CsvWriter w(os);
  w.header(trace_columns());
  for (const auto& row : tr.rows) {
    w.field(row.t);
    for (int i = 0; i < kStateDim; ++i) w.field(row.x(i));
    for (int i = 0; i < kInputDim; ++i) w.field(row.u(i));
    w.field(row.v(0)).field(row.v(1));
    w.field(branch_name(row.branch)).field(row.admissible);
    w.field(row.margin_pointing).field(row.margin_input).field(row.margin_zerocross).field(row.t_ctrl);
    w.end_row();
  }
}

void export_csv(const SimTrace& tr, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  export_csv(tr, os);
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
}

SimTrace import_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  if (table.header != trace_columns()) throw Error("trace CSV: unexpected header");
  SimTrace tr;
  for (const auto& cells : table.rows) {
    if (cells.size() != table.header.size()) throw Error("trace CSV: wrong number of fields");
    SimRecord rec;
    std::size_t c = 0;
    rec.t = parse_double(cells[c++]);
    for (int i = 0; i < kStateDim; ++i) rec.x(i) = parse_double(cells[c++]);
    for (int i = 0; i < kInputDim; ++i) rec.u(i) = parse_double(cells[c++]);
    rec.v(0) = parse_double(cells[c++]);
    rec.v(1) = parse_double(cells[c++]);
    rec.branch = parse_branch(cells[c++]);
    rec.admissible = static_cast<int>(parse_double(cells[c++]));
    rec.margin_pointing = parse_double(cells[c++]);
    rec.margin_input = parse_double(cells[c++]);
    rec.margin_zerocross = parse_double(cells[c++]);
    rec.t_ctrl = parse_double(cells[c++]);
    rec.substep_pointing = std::numeric_limits<double>::quiet_NaN();
    rec.substep_zerocross = std::numeric_limits<double>::quiet_NaN();
    tr.rows.push_back(rec);
  }
  if (tr.rows.size() >= 2) tr.Ts = tr.rows[1].t - tr.rows[0].t;
  return tr;
}

}  // namespace rwdesat
