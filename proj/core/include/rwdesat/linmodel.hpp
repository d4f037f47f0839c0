#pragma once

#include "rwdesat/dynamics.hpp"

namespace rwdesat {

/// x_tilde' = A x_tilde + B u about equilibrium(r).
struct ContinuousLinearModel {
  Mat10 A = Mat10::Zero();
  Mat10x4 B = Mat10x4::Zero();
  Reference r = Reference::Zero();
};

/// x_bar[k+1] = Ad x_bar[k] + Bd u[k] with zero-order hold over Ts.
struct DiscreteLinearModel {
  Mat10 Ad = Mat10::Identity();
  Mat10x4 Bd = Mat10x4::Zero();
  double Ts = 0.0;
  Reference r = Reference::Zero();
};

/// Closed-form Jacobians of the nonlinear model at equilibrium(r), u = 0.
ContinuousLinearModel linearize_analytic(const SpacecraftParams& p, const Reference& r);

/// Central finite differences of eom_rhs at equilibrium(r), u = 0.
/// Each state column uses step h * max(1, |x_i|).
/// Throws PreconditionError if the linearization point is not an equilibrium.
ContinuousLinearModel linearize_numeric(const SpacecraftParams& p, const Reference& r, double h = 1e-5);

/// Same as linearize_numeric but about an arbitrary point; no equilibrium check.
ContinuousLinearModel jacobian_at(const SpacecraftParams& p, const State& x0, const Input& u0, double h = 1e-5);

/// Exact ZOH discretization through exp([[A, B], [0, 0]] Ts).
DiscreteLinearModel discretize_zoh(const ContinuousLinearModel& m, double Ts);

/// Worst entrywise excess of |analytic - numeric| over max(rel * scale, abs_floor),
/// where scale is the largest magnitude in the corresponding row. <= 0 means agreement.
struct JacobianComparison {
  double max_abs_diff = 0.0;
  double worst_excess = 0.0;
  int worst_row = -1;
  int worst_col = -1;
  bool agree = true;
};

JacobianComparison compare_jacobians(const ContinuousLinearModel& analytic, const ContinuousLinearModel& numeric,
                                     double rel = 1e-6, double abs_floor = 1e-9);

}  // namespace rwdesat
