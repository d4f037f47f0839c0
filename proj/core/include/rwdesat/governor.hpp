#pragma once

#include <limits>
#include <optional>
#include <string_view>

#include "rwdesat/tdmpc.hpp"

namespace rwdesat {

/// State and input constraints. Pointing applies to |phi|, |theta|, |psi|;
/// the zero-crossing constraint requires sign_i * Om_i >= margin.
struct ConstraintSet {
  double pointing = 0.1;
  double u_max = 0.5;
  bool zero_crossing = false;
  Vec4 signs = Vec4::Ones();
  double margin = 0.3;

  void validate() const;
  bool state_admissible(const State& x) const;
  double pointing_margin(const State& x) const;
  /// +inf when zero-crossing avoidance is inactive.
  double zero_cross_margin(const State& x) const;
  double input_margin(const Input& u) const;
};

/// Ellipsoid {x : (x - x_eq(v))' P_F (x - x_eq(v)) <= level}.
struct TerminalSet {
  Mat10 P_F = Mat10::Identity();
  double level = 1e10;
  Reference center = Reference::Zero();
};

bool terminal_membership(const State& x, const TerminalSet& set, const SpacecraftParams& p);
/// Same test on a deviation state x_bar = x - x_eq(v).
bool terminal_membership_dev(const Vec10& x_bar, const Mat10& P_F, double level);

/// Rows that bound the terminal level besides the pointing constraint.
struct CapRows {
  /// One-sided rows s_i (x_i - x_eq,i) >= m - s_i x_eq,i when zero-crossing is active.
  bool zero_crossing = false;
  /// Wheel-deviation band |x_i - x_eq,i| <= wheel_band (rad/s); infinity disables it.
  double wheel_band = std::numeric_limits<double>::infinity();
  /// Unsaturated-LQR input box |K_i x_bar| <= u_max.
  bool input = false;
};

/// Largest level c such that the ellipsoid around equilibrium(v) satisfies
/// the pointing bound and the selected extra rows. The ellipsoid is invariant
/// under Ad - Bd K, so every unsaturated LQR trajectory from inside it keeps
/// satisfying the same rows.
class TerminalLevelCap {
 public:
  TerminalLevelCap(const Mat10& P_F, const Mat4x10& K, const ConstraintSet& cs, const CapRows& rows = {});
  /// Cap for a terminal set centered at equilibrium(v).
  double at(const Reference& v) const;
  /// Cap without the reference-dependent zero-crossing rows.
  double static_cap() const { return static_cap_; }

 private:
  Vec10 pinv_diag_;
  double static_cap_ = 0.0;
  ConstraintSet cs_;
  bool zero_crossing_ = false;
};

/// Monte-Carlo check of a terminal level: boundary samples rolled out under
/// saturated LQR on the discrete model, tested against X, the unsaturated
/// input box and the wheel band.
struct TerminalCalibration {
  double level_checked = 0.0;
  bool level_ok = false;
  double max_wheel_deviation = 0.0;
  double max_pointing = 0.0;
  double max_input = 0.0;
  double min_zero_cross_margin = std::numeric_limits<double>::infinity();
  /// Largest level meeting every tested row (closed form with all CapRows
  /// enabled, confirmed by the same Monte-Carlo run).
  double largest_admissible_level = 0.0;
  bool largest_confirmed = false;
};

TerminalCalibration calibrate_terminal_level(const Synthesis& syn, const Mat10& P_F, const ConstraintSet& cs,
                                             const Reference& v, double level, double wheel_band,
                                             const SpacecraftParams& p, int samples = 1000, int rollout = 3000,
                                             unsigned seed = 7);

enum class PredictionModel { kLinear, kNonlinear };

/// Reference-governor tuning. Defaults: N_RG = 3000, stride 50, increment
/// factor 0.3, c_F = 1e10 (1e5 for the oscillation-rejection check at v = r).
struct RgConfig {
  int n_rg = 3000;
  int stride = 50;
  double increment_factor = 0.3;
  double c_F = 1e10;
  double c_F_tight = 1e5;
  bool oscillation_rejection = false;
  /// Cap the terminal level at the largest level whose ellipsoid meets the
  /// pointing bound (and any rows enabled in cap_rows).
  bool cap_terminal_level = true;
  CapRows cap_rows;
  PredictionModel prediction = PredictionModel::kLinear;

  void validate(int mpc_horizon) const;
};

/// Delta_j = f (r_j - v0_j)|r_j - v0_j| / max_i |r_i - v0_i|^2, pointing from v0 toward r.
/// Throws PreconditionError if v0 == r.
Reference reference_increment(const Reference& v0, const Reference& r, double factor = 0.3);

/// Per-coordinate clamp of v_prev + delta to the segment between v0 and r.
Reference increment_and_project(const Reference& v_prev, const Reference& delta, const Reference& v0,
                                const Reference& r);

/// v0 as the mean wheel speed of each wheel pair (1,3) and (2,4).
Reference initial_reference(const State& x0);

struct Admissibility {
  bool ok = false;
  ExtendedSequence sequence;
  int visited = 0;         // number of predicted steps propagated
  bool early_exit = false;  // entered the terminal set before n_rg
  int violation_index = -1;
};

/// Inputs for an admissibility check at (x_k, v_plus).
struct AdmissibilityQuery {
  const State& x_k;
  const Reference& v_plus;
  const Vector& U;  // MPC input sequence computed at (x_k, v_plus)
  int n_rg;
  double level;
};

Admissibility admissible(const AdmissibilityQuery& q, const Synthesis& syn, const Mat10& P_F, const ConstraintSet& cs,
                         const RgConfig& cfg, int mpc_horizon, const SpacecraftParams& p);

enum class Branch { kMpc, kAccepted, kReplay, kLqr };
std::string_view branch_name(Branch b);

struct GovernorState {
  Reference v_current = Reference::Zero();
  Reference v0 = Reference::Zero();
  Reference r = Reference::Zero();
  Reference delta = Reference::Zero();
  long k = 0;
  long k_prime = 0;
  ExtendedSequence stored;
  bool has_stored = false;
};

struct GovernorDecision {
  Input u = Input::Zero();
  Reference v = Reference::Zero();
  Branch branch = Branch::kLqr;
  bool admissible = false;
  int visited = 0;
  bool early_exit = false;
  bool checked = false;
  int n_rg = 0;  // prediction length used for the check
};

/// Thrown when the starting reference fails the admissibility check.
class InfeasibleStartError : public Error {
 public:
  using Error::Error;
};

/// Reference governor wrapped around TDMPC.
class RgTdmpcController {
 public:
  /// Checks that v0 is admissible at x0; throws InfeasibleStartError otherwise.
  RgTdmpcController(const SpacecraftParams& p, const Synthesis& syn, const MpcConfig& mpc, const RgConfig& rg,
                    const ConstraintSet& cs, const State& x0, const Reference& r,
                    std::optional<Reference> v0 = std::nullopt);

  /// One sample: choose v_k and u_k given the measured state.
  GovernorDecision step(const State& x_k, int iterations);

  const GovernorState& state() const { return gs_; }
  const Mat10& terminal_weight() const { return P_F_; }
  double level_for(const Reference& v, bool at_target) const;
  const TdmpcController& tdmpc() const { return mpc_; }

 private:
  SpacecraftParams p_;
  Synthesis syn_;
  MpcConfig mpc_cfg_;
  RgConfig rg_;
  ConstraintSet cs_;
  Mat10 P_F_;
  std::optional<TerminalLevelCap> cap_;
  TdmpcController mpc_;
  GovernorState gs_;
};

}  // namespace rwdesat
