#include "rwdesat/governor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace rwdesat {

void ConstraintSet::validate() const {
  if (!(pointing > 0.0)) throw PreconditionError("ConstraintSet: pointing bound must be positive");
  if (!(u_max > 0.0)) throw PreconditionError("ConstraintSet: input bound must be positive");
  if (!(margin >= 0.0)) throw PreconditionError("ConstraintSet: zero-crossing margin must be non-negative");
  if (zero_crossing && (signs.array().abs() != 1.0).any()) {
    throw PreconditionError("ConstraintSet: zero-crossing signs must be +-1");
  }
}

double ConstraintSet::pointing_margin(const State& x) const {
  return pointing - x.head<3>().cwiseAbs().maxCoeff();
}

double ConstraintSet::zero_cross_margin(const State& x) const {
  if (!zero_crossing) return std::numeric_limits<double>::infinity();
  return (signs.cwiseProduct(x.tail<4>())).minCoeff() - margin;
}

double ConstraintSet::input_margin(const Input& u) const { return u_max - u.cwiseAbs().maxCoeff(); }

bool ConstraintSet::state_admissible(const State& x) const {
  return pointing_margin(x) >= 0.0 && zero_cross_margin(x) >= 0.0;
}

bool terminal_membership_dev(const Vec10& x_bar, const Mat10& P_F, double level) {
  return x_bar.dot(P_F * x_bar) <= level;
}

bool terminal_membership(const State& x, const TerminalSet& set, const SpacecraftParams& p) {
  return terminal_membership_dev(x - equilibrium(set.center, p), set.P_F, set.level);
}

TerminalLevelCap::TerminalLevelCap(const Mat10& P_F, const Mat4x10& K, const ConstraintSet& cs, const CapRows& rows)
    : cs_(cs), zero_crossing_(rows.zero_crossing && cs.zero_crossing) {
  const Mat10 pinv = P_F.ldlt().solve(Mat10::Identity());
  pinv_diag_ = pinv.diagonal();
  // Largest c with sqrt(c g' P^-1 g) <= bound for each constraint row g.
  double cap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) cap = std::min(cap, cs.pointing * cs.pointing / pinv_diag_(i));
  if (std::isfinite(rows.wheel_band)) {
    for (int i = 6; i < 10; ++i) cap = std::min(cap, rows.wheel_band * rows.wheel_band / pinv_diag_(i));
  }
  for (int i = 0; rows.input && i < kInputDim; ++i) {
    const Vec10 g = K.row(i).transpose();
    cap = std::min(cap, cs.u_max * cs.u_max / g.dot(pinv * g));
  }
  static_cap_ = cap;
}

double TerminalLevelCap::at(const Reference& v) const {
  double cap = static_cap_;
  if (zero_crossing_) {
    const Vec4 wheels(v(0), v(1), v(0), v(1));
    for (int i = 0; i < kInputDim; ++i) {
      const double room = cs_.signs(i) * wheels(i) - cs_.margin;
      if (room <= 0.0) return 0.0;
      cap = std::min(cap, room * room / pinv_diag_(6 + i));
    }
  }
  return cap;
}

TerminalCalibration calibrate_terminal_level(const Synthesis& syn, const Mat10& P_F, const ConstraintSet& cs,
                                             const Reference& v, double level, double wheel_band,
                                             const SpacecraftParams& p, int samples, int rollout, unsigned seed) {
  const TerminalLevelCap cap(P_F, syn.K, cs, CapRows{true, wheel_band, true});
  const State xeq = equilibrium(v, p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec10> dirs(static_cast<std::size_t>(samples));
  for (auto& d : dirs) {
    for (int i = 0; i < kStateDim; ++i) d(i) = normal(rng);
  }

  struct Outcome {
    bool ok = true;
    double wheel = 0.0, pointing = 0.0, input = 0.0;
    double zc = std::numeric_limits<double>::infinity();
  };
  auto run = [&](double c) {
    Outcome o;
    for (const Vec10& d : dirs) {
      Vec10 x = std::sqrt(c / d.dot(P_F * d)) * d;
      for (int k = 0; k <= rollout; ++k) {
        const Vec4 u_lin = -syn.K * x;
        const State xa = x + xeq;
        o.wheel = std::max(o.wheel, x.tail<4>().cwiseAbs().maxCoeff());
        o.pointing = std::max(o.pointing, x.head<3>().cwiseAbs().maxCoeff());
        o.input = std::max(o.input, u_lin.cwiseAbs().maxCoeff());
        o.zc = std::min(o.zc, cs.zero_cross_margin(xa));
        if (k == rollout) break;
        x = syn.model.Ad * x + syn.model.Bd * clamp_box(u_lin, cs.u_max);
      }
    }
    // Small relative slack absorbs rounding for samples placed exactly on the boundary.
    constexpr double slack = 1e-9;
    o.ok = o.wheel <= wheel_band * (1 + slack) && o.pointing <= cs.pointing * (1 + slack) &&
           o.input <= cs.u_max * (1 + slack) && o.zc >= -slack;
    return o;
  };

  TerminalCalibration out;
  out.level_checked = level;
  const Outcome at_level = run(level);
  out.level_ok = at_level.ok;
  out.max_wheel_deviation = at_level.wheel;
  out.max_pointing = at_level.pointing;
  out.max_input = at_level.input;
  out.min_zero_cross_margin = at_level.zc;
  out.largest_admissible_level = cap.at(v);
  out.largest_confirmed = out.largest_admissible_level > 0.0 && run(out.largest_admissible_level).ok;
  return out;
}

void RgConfig::validate(int mpc_horizon) const {
  if (n_rg < mpc_horizon) throw PreconditionError("RgConfig: N_RG must be >= N_MPC");
  if (stride < 1) throw PreconditionError("RgConfig: stride must be >= 1");
  if (!(increment_factor > 0.0)) throw PreconditionError("RgConfig: increment factor must be positive");
  if (!(c_F > 0.0) || !(c_F_tight > 0.0)) throw PreconditionError("RgConfig: terminal levels must be positive");
}

Reference reference_increment(const Reference& v0, const Reference& r, double factor) {
  const Reference diff = r - v0;
  const double scale = diff.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw PreconditionError("reference_increment: v0 equals r");
  return factor * diff.cwiseProduct(diff.cwiseAbs()) / (scale * scale);
}

Reference increment_and_project(const Reference& v_prev, const Reference& delta, const Reference& v0,
                                const Reference& r) {
  const Reference lo = v0.cwiseMin(r), hi = v0.cwiseMax(r);
  return (v_prev + delta).cwiseMax(lo).cwiseMin(hi);
}

Reference initial_reference(const State& x0) {
  return Reference(0.5 * (x0(6) + x0(8)), 0.5 * (x0(7) + x0(9)));
}

Admissibility admissible(const AdmissibilityQuery& q, const Synthesis& syn, const Mat10& P_F, const ConstraintSet& cs,
                         const RgConfig& cfg, int mpc_horizon, const SpacecraftParams& p) {
  const State xeq = equilibrium(q.v_plus, p);
  Admissibility out;
  ExtendedSequence& seq = out.sequence;
  seq.base_state = q.x_k;
  seq.base_ref = q.v_plus;
  seq.states.reserve(static_cast<std::size_t>(q.n_rg) + 1);
  seq.inputs.reserve(static_cast<std::size_t>(q.n_rg));

  State x_abs = q.x_k;
  Vec10 x = q.x_k - xeq;
  const int substeps = 10;
  const double dt = syn.model.Ts / substeps;
  for (int j = 0;; ++j) {
    seq.states.push_back(x);
    if (j == q.n_rg) {
      out.ok = terminal_membership_dev(x, P_F, q.level);
      out.visited = j;
      return out;
    }
    if (j >= mpc_horizon && (j - mpc_horizon) % cfg.stride == 0 && terminal_membership_dev(x, P_F, q.level)) {
      out.ok = true;
      out.early_exit = true;
      out.visited = j;
      return out;
    }
    if (!cs.state_admissible(State(x + xeq))) {
      out.violation_index = j;
      out.visited = j;
      return out;
    }
    const Vec4 u = j < mpc_horizon ? clamp_box(Vec4(q.U.segment<kInputDim>(kInputDim * j)), cs.u_max)
                                   : clamp_box(Vec4(-syn.K * x), cs.u_max);
    seq.inputs.push_back(u);
    if (cfg.prediction == PredictionModel::kLinear) {
      x = syn.model.Ad * x + syn.model.Bd * u;
    } else {
      for (int s = 0; s < substeps; ++s) x_abs = rk4_step(x_abs, u, dt, p);
      x = x_abs - xeq;
    }
  }
}

std::string_view branch_name(Branch b) {
  switch (b) {
    case Branch::kMpc:
      return "mpc";
    case Branch::kAccepted:
      return "accepted";
    case Branch::kReplay:
      return "replay";
    case Branch::kLqr:
      return "lqr";
  }
  return "unknown";
}

RgTdmpcController::RgTdmpcController(const SpacecraftParams& p, const Synthesis& syn, const MpcConfig& mpc,
                                     const RgConfig& rg, const ConstraintSet& cs, const State& x0,
                                     const Reference& r, std::optional<Reference> v0)
    : p_(p), syn_(syn), mpc_cfg_(mpc), rg_(rg), cs_(cs), mpc_(syn, mpc) {
  rg_.validate(mpc.horizon);
  cs_.validate();
  SolverTolerances tol;
  P_F_ = solve_dlyap(syn.Acl, Matrix::Identity(kStateDim, kStateDim), tol);
  if (rg_.cap_terminal_level) cap_.emplace(P_F_, syn.K, cs_, rg_.cap_rows);

  gs_.r = r;
  gs_.v0 = v0.value_or(initial_reference(x0));
  gs_.v_current = gs_.v0;
  gs_.delta = (gs_.v0 == r) ? Reference::Zero() : reference_increment(gs_.v0, r, rg_.increment_factor);

  // The starting reference must itself be admissible.
  TdmpcController probe(syn, mpc);
  const Vec10 x_bar = x0 - equilibrium(gs_.v0, p_);
  const Vector U = probe.solve(x_bar, mpc.iterations);
  const bool at_target = gs_.v0 == r;
  const int n_rg = at_target ? mpc.horizon : rg_.n_rg;
  Admissibility adm =
      admissible({x0, gs_.v0, U, n_rg, level_for(gs_.v0, at_target)}, syn_, P_F_, cs_, rg_, mpc.horizon, p_);
  if (!adm.ok) {
    std::ostringstream msg;
    msg << "initial reference (" << gs_.v0(0) << ", " << gs_.v0(1) << ") is not admissible at x0";
    if (adm.violation_index >= 0) msg << " (predicted constraint violation at step " << adm.violation_index << ")";
    throw InfeasibleStartError(msg.str());
  }
  gs_.stored = std::move(adm.sequence);
  gs_.has_stored = true;
  gs_.k = 0;
  gs_.k_prime = 0;
}

double RgTdmpcController::level_for(const Reference& v, bool at_target) const {
  double level = (at_target && rg_.oscillation_rejection) ? rg_.c_F_tight : rg_.c_F;
  if (cap_) level = std::min(level, cap_->at(v));
  return level;
}

GovernorDecision RgTdmpcController::step(const State& x_k, int iterations) {
  GovernorDecision d;
  const bool at_target = gs_.v_current == gs_.r;
  const Reference v_plus = at_target ? gs_.r : increment_and_project(gs_.v_current, gs_.delta, gs_.v0, gs_.r);
  const int n_rg = at_target ? mpc_cfg_.horizon : rg_.n_rg;

  const Vec10 x_bar = x_k - equilibrium(v_plus, p_);
  const Vector U = mpc_.solve(x_bar, iterations);
  Admissibility adm =
      admissible({x_k, v_plus, U, n_rg, level_for(v_plus, at_target)}, syn_, P_F_, cs_, rg_, mpc_cfg_.horizon, p_);
  d.checked = true;
  d.n_rg = n_rg;
  d.visited = adm.visited;
  d.early_exit = adm.early_exit;
  d.admissible = adm.ok;

  const long k = gs_.k;
  if (adm.ok) {
    gs_.v_current = v_plus;
    gs_.stored = std::move(adm.sequence);
    gs_.has_stored = true;
    gs_.k_prime = k;
    d.u = gs_.stored.inputs.front();
    d.branch = Branch::kAccepted;
  } else if (gs_.has_stored && k - gs_.k_prime < mpc_cfg_.horizon &&
             k - gs_.k_prime < static_cast<long>(gs_.stored.inputs.size())) {
    d.u = gs_.stored.inputs[static_cast<std::size_t>(k - gs_.k_prime)];
    d.branch = Branch::kReplay;
  } else {
    d.u = clamp_box(Vec4(-syn_.K * (x_k - equilibrium(gs_.v_current, p_))), cs_.u_max);
    d.branch = Branch::kLqr;
  }
  d.v = gs_.v_current;
  ++gs_.k;
  return d;
}

}  // namespace rwdesat
