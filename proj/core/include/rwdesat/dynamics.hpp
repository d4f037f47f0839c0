#pragma once

#include <array>

#include "rwdesat/types.hpp"

namespace rwdesat {

/// Rigid spacecraft with a four-wheel pyramidal array in a circular orbit.
///
/// Defaults: 500 km circular Earth orbit, principal inertias
/// (1000, 2200, 1400) kg m^2, 0.1 kg m^2 wheels, 0.05 N m motor torque.
/// Geometry angles are in radians.
struct SpacecraftParams {
  double J1 = 1000.0;
  double J2 = 2200.0;
  double J3 = 1400.0;
  double Js = 0.1;
  double n = 1.1086e-3;
  double alpha = 0.7853981633974483;  // 45 deg
  double beta = 0.0;
  double tau_max = 0.05;

  /// Wheel acceleration bound tau_max / Js.
  double u_max() const { return tau_max / Js; }
  double orbit_period() const;

  /// Throws PreconditionError if an invariant does not hold.
  void validate() const;
};

double deg2rad(double deg);
double rad2deg(double rad);

/// Returns 0 for |v| < 1e-15, so that cos and sin of quarter-turn geometry
/// angles given in radians are exactly zero.
double snap_unit(double v);

/// cos(theta) at or below this value is treated as the kinematic singularity.
inline constexpr double kSingularityEps = 1e-6;

/// Direction-cosine matrix S -> W_i of wheel i (0-based).
Mat3 wheel_frame(const SpacecraftParams& p, int wheel);

/// Js times the map from wheel speeds to body-frame wheel momentum.
Mat3x4 wheel_momentum_map(const SpacecraftParams& p);

/// Wheel-array angular momentum in the body frame (N m s).
Vec3 rw_momentum(const State& x, const SpacecraftParams& p);

/// Time derivative of the full nonlinear model.
/// Throws SingularityError if cos(theta) <= kSingularityEps.
State eom_rhs(const State& x, const Input& u, const SpacecraftParams& p);

/// Unforced equilibrium [0 0 0 0 -n 0 a b a b].
State equilibrium(const Reference& v, const SpacecraftParams& p);

/// One classical RK4 step with u held constant.
State rk4_step(const State& x, const Input& u, double dt, const SpacecraftParams& p);

/// Generic RK4 step for any right-hand side f(x).
template <typename Vec, typename Rhs>
Vec rk4_generic(const Vec& x, double dt, Rhs&& f) {
  const Vec k1 = f(x);
  const Vec k2 = f(Vec(x + 0.5 * dt * k1));
  const Vec k3 = f(Vec(x + 0.5 * dt * k2));
  const Vec k4 = f(Vec(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Orientation of the body frame in LVLH, as a DCM built from the 3-2-1 angles.
Mat3 body_from_lvlh(double phi, double theta, double psi);

/// Total (body + wheels) angular momentum expressed in an inertial frame
/// co-aligned with LVLH at t = 0, for a spacecraft at orbit time t.
Vec3 inertial_momentum(const State& x, double t, const SpacecraftParams& p);

}  // namespace rwdesat
