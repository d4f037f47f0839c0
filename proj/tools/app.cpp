#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rwdesat/csv.hpp"

namespace rwdesat::app {

namespace fs = std::filesystem;

Json load_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    const auto line_start = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    const std::size_t col = line_start == std::string::npos ? pos + 1 : pos - line_start;
    std::ostringstream msg;
    msg << path.string() << ":" << line << ":" << col << ": JSON syntax error";
    throw ConfigError(msg.str());
  }
}

void apply_overrides(Json& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "' is not KEY=VALUE");
    const std::string key = ov.substr(0, eq), text = ov.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(text);
    } catch (const Json::parse_error&) {
      value = text;
    }
    Json* node = &cfg;
    std::string_view rest = key;
    while (true) {
      const auto dot = rest.find('.');
      const std::string part(rest.substr(0, dot));
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      if (!node->is_object()) throw ConfigError("override key '" + key + "': '" + part + "' is not inside an object");
      if (dot == std::string_view::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) *node = Json::object();
      rest = rest.substr(dot + 1);
    }
  }
}

namespace {

/// Walks one JSON object, tracking the dotted path and which keys were used.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void ignore(const std::string& key) { used_.insert(key); }

  template <typename T>
  void get(const std::string& key, T& dst) {
    used_.insert(key);
    if (!has(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("key '" + full(key) + "': wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  double number(const std::string& key, double fallback) {
    double v = fallback;
    get(key, v);
    return v;
  }

  /// Fixed-length numeric vector. Entries may be the strings "n" or "-n"
  /// (orbital rate) when `n` is provided.
  template <int N>
  void vec(const std::string& key, Eigen::Matrix<double, N, 1>& dst, const double* n = nullptr) {
    used_.insert(key);
    if (!has(key)) return;
    const Json& a = j_.at(key);
    if (!a.is_array() || a.size() != static_cast<std::size_t>(N)) {
      throw ConfigError("key '" + full(key) + "': expected an array of " + std::to_string(N) + " numbers");
    }
    for (int i = 0; i < N; ++i) {
      const Json& e = a[static_cast<std::size_t>(i)];
      if (e.is_number()) {
        dst(i) = e.get<double>();
      } else if (n && e.is_string() && (e == "n" || e == "-n")) {
        dst(i) = e == "n" ? *n : -*n;
      } else {
        throw ConfigError("key '" + full(key) + "[" + std::to_string(i) + "]': expected a number");
      }
    }
  }

  /// Either an explicit list or {"from": a, "to": b, "step": s}, inclusive.
  std::optional<std::vector<double>> grid(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    const Json& g = j_.at(key);
    std::vector<double> out;
    if (g.is_array()) {
      for (const Json& e : g) {
        if (!e.is_number()) throw ConfigError("key '" + full(key) + "': expected numbers");
        out.push_back(e.get<double>());
      }
      return out;
    }
    Reader r(g, full(key));
    double from = 0.0, to = 0.0, step = 1.0;
    if (!r.has("from") || !r.has("to")) throw ConfigError("key '" + full(key) + "': range needs 'from' and 'to'");
    r.get("from", from);
    r.get("to", to);
    r.get("step", step);
    r.finish();
    if (!(step > 0.0)) throw ConfigError("key '" + full(key) + ".step' must be positive");
    const long count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(from + static_cast<double>(i) * step);
    return out;
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    static const Json empty = Json::object();
    return Reader(has(key) ? j_.at(key) : empty, full(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError("unknown key '" + full(item.key()) + "'");
    }
  }

  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : "key '" + path_ + "'"; }
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

SpacecraftParams read_params(Reader r) {
  SpacecraftParams p;
  r.get("J1", p.J1);
  r.get("J2", p.J2);
  r.get("J3", p.J3);
  r.get("Js", p.Js);
  r.get("n", p.n);
  p.alpha = deg2rad(r.number("alpha_deg", rad2deg(p.alpha)));
  p.beta = deg2rad(r.number("beta_deg", rad2deg(p.beta)));
  r.get("tau_max", p.tau_max);
  r.finish();
  return p;
}

MpcConfig read_mpc(Reader r, const MpcConfig& base) {
  MpcConfig m = base;
  r.get("horizon", m.horizon);
  r.get("Ts", m.Ts);
  r.vec("q_diag", m.q_diag);
  r.vec("r_diag", m.r_diag);
  r.get("iterations", m.iterations);
  r.get("warm_start", m.warm_start);
  r.finish();
  return m;
}

PredictionModel parse_prediction(const std::string& s, const std::string& key) {
  if (s == "linear") return PredictionModel::kLinear;
  if (s == "nonlinear") return PredictionModel::kNonlinear;
  throw ConfigError("key '" + key + "': expected 'linear' or 'nonlinear'");
}

RgConfig read_rg(Reader r) {
  RgConfig g;
  r.get("n_rg", g.n_rg);
  r.get("stride", g.stride);
  r.get("increment_factor", g.increment_factor);
  r.get("c_F", g.c_F);
  r.get("c_F_tight", g.c_F_tight);
  r.get("oscillation_rejection", g.oscillation_rejection);
  r.get("cap_terminal_level", g.cap_terminal_level);
  r.get("cap_zero_crossing", g.cap_rows.zero_crossing);
  r.get("cap_wheel_band", g.cap_rows.wheel_band);
  r.get("cap_input", g.cap_rows.input);
  std::string pred = "linear";
  r.get("prediction", pred);
  g.prediction = parse_prediction(pred, r.full("prediction"));
  r.finish();
  return g;
}

ConstraintSet read_constraints(Reader r, const State& x0, double u_max_default) {
  ConstraintSet c;
  c.u_max = u_max_default;
  r.get("pointing", c.pointing);
  r.get("u_max", c.u_max);
  r.get("zero_crossing", c.zero_crossing);
  r.get("margin", c.margin);
  if (r.has("signs")) {
    r.vec("signs", c.signs);
  } else {
    r.ignore("signs");
    // Default: keep each wheel on the side it starts on.
    for (int i = 0; i < kInputDim; ++i) c.signs(i) = x0(idx::kWheel0 + i) < 0.0 ? -1.0 : 1.0;
  }
  r.finish();
  return c;
}

void check_kind(Reader& r, std::initializer_list<const char*> accepted) {
  std::string kind;
  r.get("kind", kind);
  if (kind.empty()) return;
  for (const char* a : accepted) {
    if (kind == a) return;
  }
  throw ConfigError("config kind '" + kind + "' does not fit this subcommand");
}

/// Scenario fields shared by simulate and synth.
ScenarioConfig read_scenario(Reader& r) {
  ScenarioConfig sc = default_scenario();
  sc.params = read_params(r.child("params"));
  const double n = sc.params.n;
  sc.x0(idx::kW2) = -n;
  r.vec("x0", sc.x0, &n);
  r.vec("r", sc.r);
  if (r.has("v0")) {
    Reference v0;
    r.vec("v0", v0);
    sc.v0 = v0;
  } else {
    r.ignore("v0");
  }
  std::string controller(controller_name(sc.controller));
  r.get("controller", controller);
  try {
    sc.controller = parse_controller(controller);
  } catch (const Error& e) {
    throw ConfigError("key '" + r.full("controller") + "': " + e.what());
  }
  sc.mpc = read_mpc(r.child("mpc"), sc.mpc);
  sc.rg = read_rg(r.child("rg"));
  sc.constraints = read_constraints(r.child("constraints"), sc.x0, sc.params.u_max());
  sc.mpc.u_max = sc.constraints.u_max;
  r.get("duration_orbits", sc.duration_orbits);
  r.get("seed", sc.seed);
  r.get("substeps", sc.substeps);
  Reader it = r.child("iterations");
  it.get("random", sc.iterations.random);
  it.get("l_min", sc.iterations.l_min);
  it.get("l_max", sc.iterations.l_max);
  it.finish();
  return sc;
}

std::vector<double> require_grid(Reader& r, const std::string& key, std::vector<double> fallback) {
  auto g = r.grid(key);
  return g ? *g : fallback;
}

std::vector<double> range(double from, double to, double step) {
  std::vector<double> out;
  for (double v = from; v <= to + 1e-9; v += step) out.push_back(v);
  return out;
}

}  // namespace

ScenarioConfig scenario_from_json(const Json& j) {
  Reader r(j, "");
  check_kind(r, {"simulate", "scenario"});
  ScenarioConfig sc = read_scenario(r);
  r.finish();
  try {
    sc.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

SweepSpec sweep_from_json(const Json& j) {
  Reader r(j, "");
  check_kind(r, {"doc-sweep"});
  r.ignore("seed");
  SweepSpec s;
  s.params = read_params(r.child("params"));
  r.vec("r", s.r);
  s.alpha_deg = require_grid(r, "alpha_deg", range(-90.0, 90.0, 1.0));
  s.beta_deg = require_grid(r, "beta_deg", {0.0});
  if (r.has("deltaT_hr") && r.has("deltaT_s")) throw ConfigError("give either deltaT_hr or deltaT_s, not both");
  if (auto hr = r.grid("deltaT_hr")) {
    for (double h : *hr) s.deltaT_s.push_back(3600.0 * h);
  }
  if (auto sec = r.grid("deltaT_s")) s.deltaT_s = *sec;
  if (!r.has("deltaT_hr") && !r.has("deltaT_s")) s.deltaT_s = {3600.0};
  r.get("inertia_axis", s.inertia_axis);
  if (auto iv = r.grid("inertia_values")) s.inertia_values = *iv;
  if (auto ex = r.grid("excluded_alpha_deg")) s.excluded_alpha_deg = *ex;
  r.finish();
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

RankScanConfig rank_scan_from_json(const Json& j) {
  Reader r(j, "");
  check_kind(r, {"rank-scan"});
  RankScanConfig c;
  c.params = read_params(r.child("params"));
  c.alpha_deg = require_grid(r, "alpha_deg", range(-90.0, 90.0, 1.0));
  c.beta_deg = require_grid(r, "beta_deg", range(0.0, 90.0, 1.0));
  r.get("draws", c.options.draws);
  r.get("seed", c.options.seed);
  r.get("tol", c.options.tol);
  r.get("randomize_inertia", c.options.randomize_inertia);
  r.get("r_span", c.options.r_span);
  r.finish();
  if (c.alpha_deg.empty() || c.beta_deg.empty()) throw ConfigError("rank scan grid is empty");
  if (c.options.draws < 1) throw ConfigError("key 'draws' must be >= 1");
  return c;
}

SynthConfig synth_from_json(const Json& j) {
  Reader r(j, "");
  check_kind(r, {"synth", "simulate", "scenario"});
  const ScenarioConfig sc = read_scenario(r);
  SynthConfig c;
  c.params = sc.params;
  c.r = sc.r;
  c.mpc = sc.mpc;
  c.rg = sc.rg;
  c.constraints = sc.constraints;
  Reader cal = r.child("calibration");
  cal.get("samples", c.samples);
  cal.get("rollout", c.rollout);
  cal.get("seed", c.seed);
  cal.get("wheel_band", c.wheel_band);
  cal.finish();
  r.finish();
  try {
    c.params.validate();
    c.mpc.validate();
    c.constraints.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  if (c.samples < 1 || c.rollout < 1) throw ConfigError("calibration samples and rollout must be >= 1");
  return c;
}

Json scenario_to_json(const ScenarioConfig& sc) {
  auto arr = [](const auto& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  Json j;
  j["kind"] = "simulate";
  j["params"] = {{"J1", sc.params.J1},
                 {"J2", sc.params.J2},
                 {"J3", sc.params.J3},
                 {"Js", sc.params.Js},
                 {"n", sc.params.n},
                 {"alpha_deg", rad2deg(sc.params.alpha)},
                 {"beta_deg", rad2deg(sc.params.beta)},
                 {"tau_max", sc.params.tau_max}};
  j["x0"] = arr(sc.x0);
  j["r"] = arr(sc.r);
  if (sc.v0) j["v0"] = arr(*sc.v0);
  j["controller"] = std::string(controller_name(sc.controller));
  j["mpc"] = {{"horizon", sc.mpc.horizon},       {"Ts", sc.mpc.Ts},
              {"q_diag", arr(sc.mpc.q_diag)},     {"r_diag", arr(sc.mpc.r_diag)},
              {"iterations", sc.mpc.iterations}, {"warm_start", sc.mpc.warm_start}};
  j["rg"] = {{"n_rg", sc.rg.n_rg},
             {"stride", sc.rg.stride},
             {"increment_factor", sc.rg.increment_factor},
             {"c_F", sc.rg.c_F},
             {"c_F_tight", sc.rg.c_F_tight},
             {"oscillation_rejection", sc.rg.oscillation_rejection},
             {"cap_terminal_level", sc.rg.cap_terminal_level},
             {"cap_zero_crossing", sc.rg.cap_rows.zero_crossing},
             {"cap_input", sc.rg.cap_rows.input},
             {"prediction", sc.rg.prediction == PredictionModel::kLinear ? "linear" : "nonlinear"}};
  if (std::isfinite(sc.rg.cap_rows.wheel_band)) j["rg"]["cap_wheel_band"] = sc.rg.cap_rows.wheel_band;
  j["constraints"] = {{"pointing", sc.constraints.pointing},
                      {"u_max", sc.constraints.u_max},
                      {"zero_crossing", sc.constraints.zero_crossing},
                      {"signs", arr(sc.constraints.signs)},
                      {"margin", sc.constraints.margin}};
  j["duration_orbits"] = sc.duration_orbits;
  j["seed"] = sc.seed;
  j["substeps"] = sc.substeps;
  j["iterations"] = {{"random", sc.iterations.random},
                     {"l_min", sc.iterations.l_min},
                     {"l_max", sc.iterations.l_max}};
  return j;
}

Json merged_config(const CommonOptions& opt) {
  Json cfg = opt.config.empty() ? Json::object() : load_json_file(opt.config);
  if (!cfg.is_object()) throw ConfigError(opt.config.string() + ": top level must be an object");
  if (opt.seed) cfg["seed"] = *opt.seed;
  apply_overrides(cfg, opt.overrides);
  return cfg;
}

namespace {

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

fs::path prepare_out(const fs::path& out) {
  fs::create_directories(out);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << std::setprecision(10);
  return os;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json stats_json(const std::vector<ConstraintStat>& stats) {
  Json a = Json::array();
  for (const auto& s : stats) {
    a.push_back({{"name", s.name},
                 {"worst_margin", finite_or_null(s.worst_margin)},
                 {"violations", s.violations},
                 {"first_violation_s", s.first_violation ? Json(*s.first_violation) : Json(nullptr)}});
  }
  return a;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kError;
  }
}

}  // namespace

int cmd_simulate(const CommonOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    if (opt.config.empty()) throw ConfigError("simulate needs --config");
    const ScenarioConfig sc = scenario_from_json(merged_config(opt));
    const fs::path out = prepare_out(opt.out);
    const SimTrace tr = run_closed_loop(sc);
    export_csv(tr, (out / "trace.csv").string());
    const ConstraintReport rep = check_trace(tr, sc.constraints);
    const auto done = completion_time(tr, sc.r, 0.5);
    const GovernorStats gs = governor_stats(tr);
    double t_max = 0.0, t_sum = 0.0;
    for (const auto& row : tr.rows) {
      t_max = std::max(t_max, row.t_ctrl);
      t_sum += row.t_ctrl;
    }
    const double orbit = sc.params.orbit_period();

    std::ostringstream text;
    text << "controller " << controller_name(sc.controller) << ", " << tr.rows.size() << " samples, Ts " << tr.Ts
         << " s\n";
    if (done) {
      text << "wheels within 0.5 rad/s of target from t = " << *done << " s (" << *done / orbit << " orbits)\n";
    } else {
      text << "wheels did not settle within 0.5 rad/s of the target\n";
    }
    text << "input total variation " << total_variation(tr) << '\n';
    if (sc.controller == ControllerKind::kRgTdmpc) {
      text << "governor: accepted " << gs.accepted << " (early exit " << gs.accepted_early << "), replay " << gs.replay
           << ", lqr " << gs.lqr << "; long checks accepted " << gs.accepted_long << ", early " << gs.accepted_long_early
           << '\n';
    }
    text << "controller wall time: mean " << t_sum / std::max<std::size_t>(1, tr.rows.size()) << " s, max " << t_max
         << " s\n";
    write_report(text, rep);
    open_out(out / "report.txt") << text.str();
    log << text.str();

    Json j;
    j["controller"] = std::string(controller_name(sc.controller));
    j["samples"] = tr.rows.size();
    j["Ts"] = tr.Ts;
    j["completion_time_s"] = done ? Json(*done) : Json(nullptr);
    j["completion_orbits"] = done ? Json(*done / orbit) : Json(nullptr);
    j["total_variation"] = total_variation(tr);
    j["constraints"] = {{"samples", stats_json(rep.samples)}, {"substeps", stats_json(rep.substeps)}};
    j["governor"] = {{"accepted", gs.accepted},
                     {"accepted_early", gs.accepted_early},
                     {"accepted_long", gs.accepted_long},
                     {"accepted_long_early", gs.accepted_long_early},
                     {"replay", gs.replay},
                     {"lqr", gs.lqr}};
    j["t_ctrl_mean_s"] = t_sum / std::max<std::size_t>(1, tr.rows.size());
    j["t_ctrl_max_s"] = t_max;
    j["violation"] = rep.sample_violation();
    open_out(out / "report.json") << j.dump(2) << '\n';
    open_out(out / "scenario.json") << scenario_to_json(sc).dump(2) << '\n';
    return rep.sample_violation() ? kViolation : kOk;
  });
}

int cmd_doc_sweep(const CommonOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    if (opt.config.empty()) throw ConfigError("doc-sweep needs --config");
    const SweepSpec spec = sweep_from_json(merged_config(opt));
    const fs::path out = prepare_out(opt.out);
    const SweepTable table = doc_sweep(spec, resolve_jobs(opt.jobs));
    {
      auto os = open_out(out / "sweep.csv");
      write_sweep_csv(os, table, spec.inertia_axis != 0);
    }
    {
      auto os = open_out(out / "minima.csv");
      write_minima_csv(os, table);
    }
    std::ostringstream text;
    text << std::left;
    if (spec.inertia_axis != 0) text << std::setw(12) << ("J" + std::to_string(spec.inertia_axis));
    text << std::setw(12) << "deltaT_s" << std::setw(10) << "beta_deg" << std::setw(14) << "alpha_min_deg"
         << "log10_J_ind_min\n";
    for (const auto& m : table.minima) {
      if (spec.inertia_axis != 0) text << std::setw(12) << m.inertia;
      text << std::setw(12) << m.deltaT_s << std::setw(10) << m.beta_deg << std::setw(14) << m.alpha_min_deg
           << std::log10(m.J_ind_min) << '\n';
    }
    int failed = 0;
    for (const auto& row : table.rows) failed += row.ok ? 0 : 1;
    if (failed > 0) text << failed << " grid points could not be evaluated (gramian singular)\n";
    open_out(out / "summary.txt") << text.str();
    log << text.str();
    return kOk;
  });
}

int cmd_rank_scan(const CommonOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const RankScanConfig cfg = rank_scan_from_json(merged_config(opt));
    const fs::path out = prepare_out(opt.out);
    const auto rows = rank_scan(cfg.params, cfg.alpha_deg, cfg.beta_deg, cfg.options, resolve_jobs(opt.jobs));
    {
      auto os = open_out(out / "rank.csv");
      write_rank_csv(os, rows);
    }
    std::map<int, int> histogram;
    std::map<double, std::set<int>> deficient;
    for (const auto& row : rows) {
      ++histogram[row.rank];
      if (row.rank < kStateDim) deficient[row.alpha_deg].insert(row.rank);
    }
    std::ostringstream text;
    text << rows.size() << " grid points, " << cfg.options.draws << " draws each\n";
    for (const auto& [rank, count] : histogram) text << "  rank " << rank << ": " << count << " points\n";
    for (const auto& [alpha, ranks] : deficient) {
      text << "  rank-deficient at alpha = " << alpha << " deg (ranks";
      for (int r : ranks) text << ' ' << r;
      text << ")\n";
    }
    open_out(out / "summary.txt") << text.str();
    log << text.str();
    return kOk;
  });
}

int cmd_synth(const CommonOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const SynthConfig cfg = synth_from_json(merged_config(opt));
    const fs::path out = prepare_out(opt.out);
    Synthesis syn;
    try {
      syn = synthesize(cfg.params, cfg.r, cfg.mpc);
    } catch (const Error& e) {
      const ContinuousLinearModel lin = linearize_analytic(cfg.params, cfg.r);
      std::ostringstream msg;
      msg << "synthesis failed at alpha = " << rad2deg(cfg.params.alpha) << " deg, beta = " << rad2deg(cfg.params.beta)
          << " deg: " << e.what() << " (controllability rank " << matrix_rank(ctrb_matrix(lin.A, lin.B)) << " of "
          << kStateDim << ")";
      throw Error(msg.str());
    }
    const Mat10 P_F = solve_dlyap(syn.Acl, Matrix::Identity(kStateDim, kStateDim));
    const CondensedQp qp = condense(syn.model, cfg.mpc, syn.P);
    const double h_min = sym_eig_min(qp.H);
    const TerminalLevelCap cap(P_F, syn.K, cfg.constraints, cfg.rg.cap_rows);
    const double level_used = cfg.rg.cap_terminal_level ? std::min(cfg.rg.c_F, cap.at(cfg.r)) : cfg.rg.c_F;
    const TerminalCalibration cal = calibrate_terminal_level(syn, P_F, cfg.constraints, cfg.r, cfg.rg.c_F,
                                                             cfg.wheel_band, cfg.params, cfg.samples, cfg.rollout,
                                                             cfg.seed);
    const double p_norm = inf_norm(syn.P);

    std::ostringstream text;
    text << "geometry alpha = " << rad2deg(cfg.params.alpha) << " deg, beta = " << rad2deg(cfg.params.beta)
         << " deg, r = (" << cfg.r(0) << ", " << cfg.r(1) << ")\n";
    text << "jacobian: " << (syn.used_numeric_jacobian ? "finite-difference model used" : "closed form agrees")
         << " (max |diff| " << syn.jacobian_check.max_abs_diff << ")\n";
    text << "DARE: " << syn.dare_iterations << " iterations, residual " << syn.dare_residual << " (relative "
         << syn.dare_residual / p_norm << ")\n";
    text << "closed-loop spectral radius " << syn.spectral_radius << '\n';
    text << "condensed Hessian: lambda_max " << qp.L << ", cond " << qp.L / h_min << '\n';
    text << "terminal level: c_F = " << cfg.rg.c_F << ", pointing-admissible cap " << cap.at(cfg.r)
         << ", level used " << level_used << '\n';
    text << "calibration of c_F (" << cfg.samples << " boundary samples, " << cfg.rollout << " steps): "
         << (cal.level_ok ? "PASS" : "FAIL") << "; max wheel deviation " << cal.max_wheel_deviation
         << " rad/s, max pointing " << cal.max_pointing << " rad, max LQR input " << cal.max_input << '\n';
    text << "largest level meeting pointing, input and " << cfg.wheel_band
         << " rad/s wheel band: " << cal.largest_admissible_level
         << (cal.largest_confirmed ? " (confirmed)" : " (not confirmed)") << '\n';
    open_out(out / "synth.txt") << text.str();
    log << text.str();

    Eigen::VectorXcd eig = Eigen::EigenSolver<Matrix>(syn.Acl).eigenvalues();
    Json mags = Json::array();
    for (Eigen::Index i = 0; i < eig.size(); ++i) mags.push_back(std::abs(eig(i)));
    Json j;
    j["alpha_deg"] = rad2deg(cfg.params.alpha);
    j["beta_deg"] = rad2deg(cfg.params.beta);
    j["r"] = {cfg.r(0), cfg.r(1)};
    j["used_numeric_jacobian"] = syn.used_numeric_jacobian;
    j["dare_iterations"] = syn.dare_iterations;
    j["dare_residual"] = syn.dare_residual;
    j["dare_residual_relative"] = syn.dare_residual / p_norm;
    j["spectral_radius"] = syn.spectral_radius;
    j["closed_loop_eigenvalue_magnitudes"] = mags;
    j["hessian_lambda_max"] = qp.L;
    j["hessian_cond"] = qp.L / h_min;
    j["K"] = matrix_json(syn.K);
    j["P"] = matrix_json(syn.P);
    j["P_F"] = matrix_json(P_F);
    j["terminal"] = {{"c_F", cfg.rg.c_F},
                     {"cap", finite_or_null(cap.at(cfg.r))},
                     {"level_used", finite_or_null(level_used)},
                     {"calibration_pass", cal.level_ok},
                     {"max_wheel_deviation", cal.max_wheel_deviation},
                     {"max_pointing", cal.max_pointing},
                     {"max_input", cal.max_input},
                     {"largest_admissible_level", cal.largest_admissible_level},
                     {"largest_confirmed", cal.largest_confirmed}};
    open_out(out / "synth.json") << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_validate(const CommonOptions& opt, std::ostream& log, const ValidationOptions& vopt) {
  return guarded(log, [&] {
    const fs::path out = prepare_out(opt.out);
    ValidationOptions v = vopt;
    if (opt.seed) v.seed = *opt.seed;
    const auto results = run_validation(v);
    std::ostringstream text;
    write_validation_table(text, results);
    open_out(out / "validation.txt") << text.str();
    log << text.str();
    Json j = Json::array();
    bool all = true;
    for (const auto& r : results) {
      all = all && r.pass;
      j.push_back({{"suite", r.name},
                   {"pass", r.pass},
                   {"cases", r.cases},
                   {"max_residual", r.max_residual},
                   {"tolerance", r.tolerance},
                   {"detail", r.detail}});
    }
    open_out(out / "validation.json") << j.dump(2) << '\n';
    return all ? kOk : kError;
  });
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App cli{"Reaction-wheel desaturation toolkit"};
  cli.require_subcommand(1);
  CommonOptions opt;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config, "JSON config file");
    if (needs_config) c->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", opt.jobs, "worker threads (default: all cores)");
    sub->add_option("--seed", opt.seed, "random seed override");
    sub->add_option("--set", opt.overrides, "override KEY=VALUE (dotted keys, repeatable)");
  };
  auto* simulate = cli.add_subcommand("simulate", "closed-loop desaturation run");
  auto* sweep = cli.add_subcommand("doc-sweep", "degree-of-controllability sweep");
  auto* rank = cli.add_subcommand("rank-scan", "controllability rank over (alpha, beta)");
  auto* synth = cli.add_subcommand("synth", "controller synthesis report");
  auto* validate = cli.add_subcommand("validate", "model and numerics self-checks");
  add_common(simulate, true);
  add_common(sweep, true);
  add_common(rank, false);
  add_common(synth, false);
  add_common(validate, false);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << cli.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << cli.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }

  if (!opt.config.empty() && !fs::exists(opt.config)) {
    err << "error: config file '" << opt.config.string() << "' does not exist\n";
    return kError;
  }
  std::ostream& log = out;
  int code = kError;
  std::ostringstream errors;
  if (*simulate) code = cmd_simulate(opt, errors);
  if (*sweep) code = cmd_doc_sweep(opt, errors);
  if (*rank) code = cmd_rank_scan(opt, errors);
  if (*synth) code = cmd_synth(opt, errors);
  if (*validate) code = cmd_validate(opt, errors);
  // Normal output goes to `out`; lines starting with "error:" go to `err`.
  std::istringstream lines(errors.str());
  for (std::string line; std::getline(lines, line);) {
    (line.rfind("error:", 0) == 0 ? err : log) << line << '\n';
  }
  return code;
}

}  // namespace rwdesat::app
