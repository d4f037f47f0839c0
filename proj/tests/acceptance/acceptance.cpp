// End-to-end acceptance run. Prints one PASS/FAIL line per criterion (with
// indented detail lines) and exits nonzero if any criterion fails. INFO lines
// report diagnostic runs that do not count toward the verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "app.hpp"

namespace {

using namespace rwdesat;

const std::string kConfigDir = RWDESAT_CONFIG_DIR;

int g_failures = 0;

struct Verdict {
  bool pass = true;
  std::vector<std::string> details;

  template <typename... Args>
  void check(bool ok, Args&&... parts) {
    std::ostringstream os;
    os << (ok ? "ok   " : "FAIL ");
    (os << ... << parts);
    details.push_back(os.str());
    pass = pass && ok;
  }
  template <typename... Args>
  void note(Args&&... parts) {
    std::ostringstream os;
    os << "     ";
    (os << ... << parts);
    details.push_back(os.str());
  }
};

void report(const std::string& name, const Verdict& v, double seconds) {
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << "  (" << std::fixed << std::setprecision(1) << seconds
            << " s)\n";
  std::cout.unsetf(std::ios::floatfield);
  std::cout << std::setprecision(6);
  for (const auto& d : v.details) std::cout << "    " << d << '\n';
  std::cout.flush();
  if (!v.pass) ++g_failures;
}

void criterion(const std::string& name, const std::function<void(Verdict&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.check(false, "exception: ", e.what());
  }
  report(name, v, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

void info(const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.note("exception: ", e.what());
  }
  std::cout << "INFO " << name << '\n';
  for (const auto& d : v.details) std::cout << "    " << d << '\n';
  std::cout.flush();
}

int jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

app::Json config(const std::string& name) { return app::load_json_file(kConfigDir + "/" + name); }

ScenarioConfig scenario(const std::string& name) { return app::scenario_from_json(config(name)); }

double orbits(double seconds, const SpacecraftParams& p) { return seconds / p.orbit_period(); }

// Every closed-loop trace produced here, for the input-box check.
std::vector<std::pair<std::string, double>> g_input_margins;

SimTrace run(const std::string& label, const ScenarioConfig& sc) {
  SimTrace tr = run_closed_loop(sc);
  g_input_margins.emplace_back(label, check_trace(tr, sc.constraints).find("input")->worst_margin);
  return tr;
}

// Curve values indexed by alpha for one sweep slice.
using Curve = std::map<double, double>;

Curve curve(const SweepTable& t, double deltaT_s, double inertia = 0.0) {
  Curve c;
  for (const auto& row : t.rows) {
    if (row.ok && row.deltaT_s == deltaT_s && row.inertia == inertia) c[row.alpha_deg] = row.doc.J_ind;
  }
  return c;
}

const CurveMinimum* minimum(const SweepTable& t, double deltaT_s, double inertia = 0.0) {
  for (const auto& m : t.minima) {
    if (m.deltaT_s == deltaT_s && m.inertia == inertia) return &m;
  }
  return nullptr;
}

void equilibrium_family(Verdict& v) {
  const SuiteResult r = equilibrium_suite(ValidationOptions{});
  v.check(r.pass && r.cases == 100, r.cases, " random (v, alpha, beta): max |f(x_eq, 0)|_inf = ", r.max_residual,
          " (< ", r.tolerance, ")");
}

void linearization_fidelity(Verdict& v) {
  const SuiteResult r = linearization_suite(ValidationOptions{});
  v.check(r.pass, r.cases, " grid cases, worst excess over max(1e-6 scale, 1e-9) = ", r.max_residual, " ",
          r.detail);
  const SpacecraftParams p;
  const Synthesis syn = synthesize(p, Reference(-1, 1), MpcConfig{});
  v.check(!syn.used_numeric_jacobian, "synthesis uses the closed-form Jacobian (max |diff| ",
          syn.jacobian_check.max_abs_diff, ")");
}

int rank_with_inertia(double J1, double J2, double J3) {
  SpacecraftParams p;
  p.J1 = J1;
  p.J2 = J2;
  p.J3 = J3;
  const ContinuousLinearModel m = linearize_analytic(p, Reference(-1, 1));
  return matrix_rank(ctrb_matrix(m.A, m.B));
}

void rank_pattern(Verdict& v) {
  const app::RankScanConfig cfg = app::rank_scan_from_json(config("rank_scan.json"));
  const auto rows = rank_scan(cfg.params, cfg.alpha_deg, cfg.beta_deg, cfg.options, jobs());
  int bad_full = 0, bad_zero = 0, bad_ninety = 0, full = 0;
  for (const auto& r : rows) {
    if (r.alpha_deg == 0.0) {
      bad_zero += r.rank != 8;
    } else if (std::abs(r.alpha_deg) == 90.0) {
      bad_ninety += r.rank != 6;
    } else {
      ++full;
      bad_full += r.rank != 10;
    }
  }
  v.note(rows.size(), " grid points, ", cfg.options.draws, " draws each, tol ", cfg.options.tol);
  v.check(bad_full == 0, "rank 10 at ", full - bad_full, "/", full, " points with alpha not in {-90, 0, 90}");
  v.check(bad_zero == 0, "rank 8 at alpha = 0 (", bad_zero, " mismatches)");
  v.check(bad_ninety == 0, "rank 6 at alpha = +-90 (", bad_ninety, " mismatches)");
  const int r23 = rank_with_inertia(1050, 1150, 1150), r13 = rank_with_inertia(1150, 2200, 1150),
            r12 = rank_with_inertia(1150, 1150, 1400);
  v.check(r23 < 10, "J2 = J3 = 1150 deficient (rank ", r23, ")");
  v.check(r13 < 10, "J1 = J3 = 1150 deficient (rank ", r13, ")");
  v.check(r12 == 10, "J1 = J2 = 1150 not deficient (rank ", r12, ")");
}

void doc_study(Verdict& v) {
  const SweepSpec spec = app::sweep_from_json(config("fig2.json"));
  const SweepTable t = doc_sweep(spec, jobs());
  const double hr = 3600.0;

  double sym = 0.0;
  for (double T : spec.deltaT_s) {
    const Curve c = curve(t, T);
    for (const auto& [a, j] : c) {
      if (a > 0.0 && c.count(-a)) sym = std::max(sym, std::abs(j - c.at(-a)) / j);
    }
  }
  v.check(sym < 1e-6, "(a) max |J(alpha) - J(-alpha)| / J = ", sym);

  std::vector<double> at45;
  for (double T : {1 * hr, 2 * hr, 3 * hr, 4 * hr}) at45.push_back(curve(t, T).at(45.0));
  const bool decreasing = at45[0] > at45[1] && at45[1] > at45[2] && at45[2] > at45[3];
  v.check(decreasing, "(b) J_ind at alpha = 45 for dT = 1..4 hr: ", at45[0], ", ", at45[1], ", ", at45[2], ", ",
          at45[3]);

  const Curve c3 = curve(t, 3 * hr), c4 = curve(t, 4 * hr);
  double diff = 0.0, diff_log = 0.0, worst_alpha = 0.0;
  for (const auto& [a, j4] : c4) {
    const double j3 = c3.at(a);
    const double d = std::abs(j3 - j4) / j4;
    if (d > diff) {
      diff = d;
      worst_alpha = a;
    }
    diff_log = std::max(diff_log, std::abs(std::log10(j3) - std::log10(j4)) / std::abs(std::log10(j4)));
  }
  v.check(diff < 0.02, "(c) max relative difference of J_ind between dT = 3 hr and 4 hr = ", 100 * diff,
          "% at alpha = ", worst_alpha, " (limit 2%)");
  v.note("    same comparison on log10 J_ind: ", 100 * diff_log, "%");

  const CurveMinimum* m1 = minimum(t, 1 * hr);
  const CurveMinimum* m4 = minimum(t, 4 * hr);
  v.check(m1 && m4 && m1->alpha_min_deg >= 74 && m1->alpha_min_deg <= 78 && m4->alpha_min_deg >= 78 &&
              m4->alpha_min_deg <= 82,
          "(d) alpha_min = ", m1 ? m1->alpha_min_deg : NAN, " deg at 1 hr (74..78), ", m4 ? m4->alpha_min_deg : NAN,
          " deg at 4 hr (78..82)");
}

void worst_ic(Verdict& v) {
  const double T = 3600.0;
  auto model = [](double alpha) {
    SpacecraftParams p;
    p.alpha = deg2rad(alpha);
    return linearize_analytic(p, Reference::Zero());
  };
  const ContinuousLinearModel m45 = model(45.0), m85 = model(85.0);
  const DocResult d45 = doc_index(m45.A, m45.B, T);
  const DocResult d85 = doc_index(m85.A, m85.B, T);
  v.check(std::abs(d45.x_ind(4)) > 0.99, "alpha = 45: |x_ind(w2)| = ", std::abs(d45.x_ind(4)), " (> 0.99)");
  const double w1 = std::abs(d85.x_ind(3)), w3 = std::abs(d85.x_ind(5));
  v.check(std::abs(w1 - 0.66) <= 0.1 && std::abs(w3 - 0.75) <= 0.1, "alpha = 85: |x_ind(w1)|, |x_ind(w3)| = ", w1,
          ", ", w3, " (within 0.1 of 0.66, 0.75)");
  const DocResult wheels = doc_index_restricted(m45.A, m45.B, T, {6, 7, 8, 9});
  const Vec4 dir = wheels.x_ind.tail<4>();
  const double cosang = std::abs(dir.dot(Vec4::Constant(0.5))) / dir.norm();
  const double angle = rad2deg(std::acos(std::min(1.0, cosang)));
  v.check(angle <= 5.0, "wheel-restricted worst direction at alpha = 45 is ", angle,
          " deg from equal speeds (limit 5 deg); direction ", dir.transpose());
}

void inertia_study(Verdict& v) {
  const SweepSpec spec = app::sweep_from_json(config("fig3_J2.json"));
  const SweepTable t = doc_sweep(spec, jobs());
  bool low_ok = true, high_ok = true;
  double worst_low = 0.0, worst_high = 180.0;
  double log_1100 = NAN, log_1200 = NAN, log_2200 = NAN;
  int missing = 0;
  for (double J2 : spec.inertia_values) {
    const CurveMinimum* m = minimum(t, spec.deltaT_s.front(), J2);
    if (!m) {
      ++missing;
      continue;
    }
    if (J2 < 1050.0 && std::abs(m->alpha_min_deg) > 10.0) {
      low_ok = false;
      worst_low = std::max(worst_low, std::abs(m->alpha_min_deg));
    }
    if (J2 >= 1400.0 && m->alpha_min_deg <= 45.0) {
      high_ok = false;
      worst_high = std::min(worst_high, m->alpha_min_deg);
    }
    if (J2 == 1100.0) log_1100 = std::log10(m->J_ind_min);
    if (J2 == 1200.0) log_1200 = std::log10(m->J_ind_min);
    if (J2 == 2200.0) log_2200 = std::log10(m->J_ind_min);
  }
  if (missing) v.note(missing, " J2 values without a minimum (J2 = J3 makes the pair uncontrollable)");
  v.check(low_ok, "alpha_min within 10 deg of 0 for J2 < 1050",
          low_ok ? std::string() : " (worst |alpha_min| " + std::to_string(worst_low) + " deg)");
  v.check(high_ok, "alpha_min > 45 deg for J2 >= 1400",
          high_ok ? std::string() : " (lowest " + std::to_string(worst_high) + " deg)");
  const double rise = std::max(log_1100, log_1200) - log_2200;
  v.check(rise >= 2.0, "log10 J_ind,min next to J2 = J3: ", log_1100, " (1100), ", log_1200, " (1200) vs ", log_2200,
          " (2200); rise ", rise, " decades (>= 2)");
  for (double J2 : {300.0, 600.0, 900.0, 1000.0, 1100.0, 1200.0, 1400.0, 1800.0, 2200.0}) {
    if (const CurveMinimum* m = minimum(t, spec.deltaT_s.front(), J2)) {
      v.note("    J2 = ", J2, ": alpha_min = ", m->alpha_min_deg, " deg, log10 J_min = ", std::log10(m->J_ind_min));
    }
  }
}

void synthesis(Verdict& v) {
  const SpacecraftParams p;
  const MpcConfig cfg;
  const Synthesis syn = synthesize(p, Reference(-1, 1), cfg);
  const double pn = inf_norm(syn.P);
  v.check(syn.dare_residual < 1e-9 * pn, "DARE residual ", syn.dare_residual, " < 1e-9 |P|_inf = ", 1e-9 * pn);
  v.check(syn.spectral_radius < 1.0, "closed-loop spectral radius ", syn.spectral_radius);

  const CondensedQp qp = condense(syn.model, cfg, syn.P);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(-0.1, 0.1), rate(-1e-3, 1e-3), om(-40, 40), u(-0.5, 0.5);
  int increases = 0;
  for (int t = 0; t < 1000; ++t) {
    Vec10 x0;
    for (int i = 0; i < 3; ++i) x0(i) = ang(rng);
    for (int i = 3; i < 6; ++i) x0(i) = rate(rng);
    for (int i = 6; i < 10; ++i) x0(i) = om(rng);
    Vector U(4 * cfg.horizon);
    for (int i = 0; i < U.size(); ++i) U(i) = u(rng);
    double J = condensed_cost(qp, U, x0);
    for (int it = 0; it < 10; ++it) {
      U = pg_solve(qp, x0, U, 1, cfg.u_max);
      const double Jn = condensed_cost(qp, U, x0);
      if (Jn > J * (1 + 1e-12)) ++increases;
      J = Jn;
    }
  }
  v.check(increases == 0, "projected gradient: ", increases, " cost increases over 1000 random starts x 10 iterations");
}

struct Fig4Result {
  std::optional<double> td_done, rg_done;
};

void fig4(Verdict& v) {
  const ScenarioConfig td = scenario("fig4_tdmpc.json"), rg = scenario("fig4_rgtdmpc.json");
  const SimTrace ttd = run("fig4 tdmpc", td), trg = run("fig4 rg-tdmpc", rg);
  const ConstraintReport rtd = check_trace(ttd, td.constraints), rrg = check_trace(trg, rg.constraints);
  const ConstraintStat* ptd = rtd.find("pointing");
  const ConstraintStat* prg = rrg.find("pointing");
  v.check(ptd->violations > 0, "TDMPC violates pointing: ", ptd->violations, " samples, worst margin ",
          ptd->worst_margin, " rad");
  v.check(prg->violations == 0, "RG-TDMPC pointing violations at samples: ", prg->violations, " (worst margin ",
          prg->worst_margin, " rad)");
  v.note("RG-TDMPC substep worst pointing margin ", rrg.find("pointing", true)->worst_margin, " rad");
  const auto dtd = completion_time(ttd, td.r, 0.5), drg = completion_time(trg, rg.r, 0.5);
  const double otd = dtd ? orbits(*dtd, td.params) : INFINITY, org = drg ? orbits(*drg, rg.params) : INFINITY;
  v.check(otd <= 6.0 && org <= 6.0, "completion within 6 orbits: TDMPC ", otd, ", RG-TDMPC ", org);
  const double rel = std::abs(otd - org) / std::min(otd, org);
  v.check(rel < 0.5, "completion times differ by ", 100 * rel, "% (< 50%)");
}

void fig5(Verdict& v) {
  ScenarioConfig rg = scenario("fig5_random_l.json");
  ScenarioConfig td = rg;
  td.controller = ControllerKind::kTdmpc;
  const SimTrace trg = run("fig5 rg-tdmpc", rg), ttd = run("fig5 tdmpc", td);
  const double tv_td = total_variation(ttd), tv_rg = total_variation(trg);
  v.check(tv_td >= 2.0 * tv_rg, "input total variation: TDMPC ", tv_td, ", RG-TDMPC ", tv_rg, " (ratio ",
          tv_td / tv_rg, ", need >= 2)");
  const auto done = completion_time(trg, rg.r, 0.5);
  v.check(done.has_value(), "RG-TDMPC completes desaturation",
          done ? " after " + std::to_string(orbits(*done, rg.params)) + " orbits" : std::string());
  v.note("terminal level at v = r: ", std::min(rg.rg.c_F_tight,
                                                RgTdmpcController(rg.params, synthesize(rg.params, rg.r, rg.mpc), rg.mpc,
                                                                  rg.rg, rg.constraints, equilibrium(rg.r, rg.params),
                                                                  rg.r)
                                                    .level_for(rg.r, true)),
         " (c_F_tight ", rg.rg.c_F_tight, ")");
}

struct ZeroCrossRun {
  ScenarioConfig sc;
  SimTrace tr;
};

void zero_cross_checks(Verdict& v, const ZeroCrossRun& z) {
  const ConstraintReport rep = check_trace(z.tr, z.sc.constraints);
  const ConstraintStat* zc = rep.find("zero_crossing");
  v.check(zc && zc->violations == 0, "sign(x0_i) x_i >= 0.3 at every sample: worst margin ",
          zc ? zc->worst_margin : NAN, ", violations ", zc ? zc->violations : -1);
  v.check(rep.find("pointing")->violations == 0, "pointing violations: ", rep.find("pointing")->violations);
  const auto done = completion_time(z.tr, z.sc.r, 0.5);
  const double o = done ? orbits(*done, z.sc.params) : INFINITY;
  v.check(o >= 3.0 && o <= 6.0, "completion after ", o, " orbits (3..6)");
}

void early_exit_checks(Verdict& v, const ZeroCrossRun& z) {
  const GovernorStats gs = governor_stats(z.tr);
  bool timed = true;
  for (const auto& row : z.tr.rows) timed = timed && row.t_ctrl > 0.0;
  v.check(timed, "per-step controller wall time recorded for all ", z.tr.rows.size(), " steps");
  const double share = gs.accepted_long ? double(gs.accepted_long_early) / gs.accepted_long : 0.0;
  v.check(share > 0.5, "early exit in ", gs.accepted_long_early, "/", gs.accepted_long,
          " accepted steps with the long prediction (", 100 * share, "%, need > 50%)");
  int below = 0;
  for (const auto& row : z.tr.rows) below += row.branch == Branch::kAccepted && row.visited < z.sc.rg.n_rg;
  v.note("accepted steps visiting fewer than N_RG = ", z.sc.rg.n_rg, " predicted steps: ", below, "/", gs.accepted);
}

}  // namespace

int main() {
  std::cout << std::setprecision(6);
  criterion("Equilibrium family", equilibrium_family);
  criterion("Linearization fidelity", linearization_fidelity);
  criterion("Rank pattern", rank_pattern);
  criterion("DoC study (cant angle and horizon)", doc_study);
  criterion("Worst initial condition structure", worst_ic);
  criterion("Inertia study", inertia_study);
  criterion("Pointing-constrained desaturation (fig4 configs)", fig4);
  criterion("Random iteration budget (fig5 config)", fig5);

  std::optional<ZeroCrossRun> literal;
  criterion("Zero-crossing avoidance (fig6 config)", [&](Verdict& v) {
    ZeroCrossRun z{scenario("fig6_zerocross.json"), {}};
    v.note("initial wheels ", z.sc.x0.tail<4>().transpose(), ", target (", z.sc.r(0), ", ", z.sc.r(1), ")");
    z.tr = run("fig6 rg-tdmpc", z.sc);
    literal = z;
    zero_cross_checks(v, z);
  });
  criterion("Controller timing and early admissibility exit (fig6 config)", [&](Verdict& v) {
    if (!literal) {
      v.check(false, "no trace: the zero-crossing scenario could not start");
      return;
    }
    early_exit_checks(v, *literal);
  });

  info("Zero-crossing avoidance with wheel signs mirrored to match the target (fig6 mirrored config)", [&](Verdict& v) {
    ZeroCrossRun z{scenario("fig6_zerocross_mirrored.json"), {}};
    v.note("initial wheels ", z.sc.x0.tail<4>().transpose());
    z.tr = run("fig6 mirrored rg-tdmpc", z.sc);
    Verdict a, b;
    zero_cross_checks(a, z);
    early_exit_checks(b, z);
    for (auto* part : {&a, &b}) v.details.insert(v.details.end(), part->details.begin(), part->details.end());
  });

  criterion("Controller synthesis and input box", [](Verdict& v) {
    synthesis(v);
    bool ok = true;
    std::ostringstream list;
    for (const auto& [label, margin] : g_input_margins) {
      ok = ok && margin >= 0.0;
      list << ' ' << label << " (" << margin << ")";
    }
    v.check(ok && !g_input_margins.empty(), "|u_i| <= 0.5 in every simulated trace; input margins:", list.str());
  });

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASS" : std::to_string(g_failures) + " CRITERIA FAIL") << '\n';
  return g_failures == 0 ? 0 : 1;
}
