#include "rwdesat/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rwdesat {

double SpacecraftParams::orbit_period() const { return 2.0 * std::numbers::pi / n; }

void SpacecraftParams::validate() const {
  auto fail = [](const std::string& what) { throw PreconditionError("SpacecraftParams: " + what); };
  if (!(J1 > 0.0 && J2 > 0.0 && J3 > 0.0)) fail("principal inertias must be positive");
  if (J1 > J2 + J3 || J2 > J1 + J3 || J3 > J1 + J2) fail("principal inertias violate the triangle inequality");
  if (!(Js > 0.0)) fail("wheel inertia must be positive");
  if (!(n > 0.0)) fail("orbit rate must be positive");
  if (!(tau_max > 0.0)) fail("tau_max must be positive");
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (!(alpha >= -half_pi - 1e-12 && alpha <= half_pi + 1e-12)) fail("alpha outside [-pi/2, pi/2]");
  if (!(beta >= 0.0 && beta < half_pi)) fail("beta outside [0, pi/2)");
}

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double snap_unit(double v) { return std::abs(v) < 1e-15 ? 0.0 : v; }

namespace {

// Passive direction-cosine matrices about the body axes.
Mat3 dcm1(double a) {
  const double c = snap_unit(std::cos(a)), s = snap_unit(std::sin(a));
  Mat3 m;
  m << 1, 0, 0, 0, c, s, 0, -s, c;
  return m;
}

Mat3 dcm2(double a) {
  const double c = snap_unit(std::cos(a)), s = snap_unit(std::sin(a));
  Mat3 m;
  m << c, 0, -s, 0, 1, 0, s, 0, c;
  return m;
}

Mat3 dcm3(double a) {
  const double c = snap_unit(std::cos(a)), s = snap_unit(std::sin(a));
  Mat3 m;
  m << c, s, 0, -s, c, 0, 0, 0, 1;
  return m;
}

}  // namespace

Mat3 wheel_frame(const SpacecraftParams& p, int wheel) {
  const double beta_i = p.beta + 0.5 * std::numbers::pi * wheel;
  return dcm1(p.alpha) * dcm2(beta_i);
}

Mat3x4 wheel_momentum_map(const SpacecraftParams& p) {
  const double ca = snap_unit(std::cos(p.alpha)), sa = snap_unit(std::sin(p.alpha));
  const double cb = snap_unit(std::cos(p.beta)), sb = snap_unit(std::sin(p.beta));
  Mat3x4 m;
  m << ca * sb, ca * cb, -ca * sb, -ca * cb,  //
      -sa, -sa, -sa, -sa,                     //
      ca * cb, -ca * sb, -ca * cb, ca * sb;
  return p.Js * m;
}

Vec3 rw_momentum(const State& x, const SpacecraftParams& p) {
  const double ca = snap_unit(std::cos(p.alpha)), sa = snap_unit(std::sin(p.alpha));
  const double cb = snap_unit(std::cos(p.beta)), sb = snap_unit(std::sin(p.beta));
  const double o1 = x(6), o2 = x(7), o3 = x(8), o4 = x(9);
  return p.Js * Vec3(ca * ((o2 - o4) * cb + (o1 - o3) * sb),  //
                     -sa * (o1 + o2 + o3 + o4),               //
                     ca * ((o1 - o3) * cb - (o2 - o4) * sb));
}

State eom_rhs(const State& x, const Input& u, const SpacecraftParams& p) {
  const double phi = x(idx::kPhi), theta = x(idx::kTheta), psi = x(idx::kPsi);
  const double cph = std::cos(phi), sph = std::sin(phi);
  const double cth = std::cos(theta), sth = std::sin(theta);
  const double cps = std::cos(psi), sps = std::sin(psi);
  if (cth <= kSingularityEps) {
    std::ostringstream msg;
    msg << "Euler kinematics singular: theta = " << theta << " rad";
    throw SingularityError(msg.str());
  }
  const Vec3 w = x.segment<3>(idx::kW1);
  const double n = p.n;

  // Rates relative to LVLH: body rate plus orbital rate mapped into the body frame.
  const Vec3 w_rel = w + n * Vec3(cth * sps, sph * sth * sps + cph * cps, cph * sth * sps - sph * cps);
  Mat3 kin;
  kin << cth, sph * sth, cph * sth,  //
      0.0, cph * cth, -sph * cth,    //
      0.0, sph, cph;
  const Vec3 euler_rates = (kin * w_rel) / cth;

  // Gravity-gradient direction cosines.
  const double c1 = -sth, c2 = sph * cth, c3 = cph * cth;
  const double n2 = n * n;
  const Vec3 gyro_gg((p.J2 - p.J3) * (w(1) * w(2) - 3.0 * n2 * c2 * c3),
                     (p.J3 - p.J1) * (w(0) * w(2) - 3.0 * n2 * c1 * c3),
                     (p.J1 - p.J2) * (w(0) * w(1) - 3.0 * n2 * c1 * c2));
  const Vec3 h = rw_momentum(x, p);
  const Vec3 hdot = wheel_momentum_map(p) * u;
  const Vec3 torque = gyro_gg - w.cross(h) - hdot;

  State dx;
  dx.segment<3>(idx::kPhi) = euler_rates;
  dx.segment<3>(idx::kW1) = Vec3(torque(0) / p.J1, torque(1) / p.J2, torque(2) / p.J3);
  dx.segment<4>(idx::kWheel0) = u;
  return dx;
}

State equilibrium(const Reference& v, const SpacecraftParams& p) {
  State x = State::Zero();
  x(idx::kW2) = -p.n;
  x(6) = v(0);
  x(7) = v(1);
  x(8) = v(0);
  x(9) = v(1);
  return x;
}

State rk4_step(const State& x, const Input& u, double dt, const SpacecraftParams& p) {
  if (!(dt > 0.0)) throw PreconditionError("rk4_step: dt must be positive");
  return rk4_generic(x, dt, [&](const State& s) { return eom_rhs(s, u, p); });
}

Mat3 body_from_lvlh(double phi, double theta, double psi) { return dcm1(phi) * dcm2(theta) * dcm3(psi); }

Vec3 inertial_momentum(const State& x, double t, const SpacecraftParams& p) {
  const Vec3 w = x.segment<3>(idx::kW1);
  const Vec3 h_body = Vec3(p.J1 * w(0), p.J2 * w(1), p.J3 * w(2)) + rw_momentum(x, p);
  const Mat3 c_sg = body_from_lvlh(x(idx::kPhi), x(idx::kTheta), x(idx::kPsi));
  // LVLH rotates at -n about its y axis relative to the inertial frame.
  const Mat3 c_ig = Eigen::AngleAxisd(-p.n * t, Vec3::UnitY()).toRotationMatrix();
  return c_ig * c_sg.transpose() * h_body;
}

}  // namespace rwdesat
