#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rwdesat/dynamics.hpp"

namespace {

using namespace rwdesat;

// Passive rotation about a body axis.
Mat3 passive(int axis, double angle) {
  return Eigen::AngleAxisd(-angle, Vec3::Unit(axis)).toRotationMatrix();
}

Vec3 wheel_axis(const SpacecraftParams& p, int i) {
  const double bi = p.beta + 0.5 * std::numbers::pi * i;
  return Vec3(std::cos(p.alpha) * std::sin(bi), -std::sin(p.alpha), std::cos(p.alpha) * std::cos(bi));
}

// Independent transcription of the model: vector form of Euler's equation with
// the gravity-gradient torque 3 n^2 c x (J c), and Euler-angle rates obtained
// by solving the 3-2-1 rate composition as a linear system.
State oracle_rhs(const State& x, const Input& u, const SpacecraftParams& p) {
  const double phi = x(0), theta = x(1), psi = x(2);
  const Vec3 w = x.segment<3>(3);
  const Mat3 J = Vec3(p.J1, p.J2, p.J3).asDiagonal();
  Vec3 h = Vec3::Zero(), hdot = Vec3::Zero();
  for (int i = 0; i < 4; ++i) {
    h += p.Js * x(6 + i) * wheel_axis(p, i);
    hdot += p.Js * u(i) * wheel_axis(p, i);
  }
  const Mat3 c_sg = passive(0, phi) * passive(1, theta) * passive(2, psi);
  const Vec3 c = c_sg.col(2);  // local vertical in body axes
  const Vec3 torque = -w.cross(J * w + h) + 3.0 * p.n * p.n * c.cross(J * c) - hdot;
  const Vec3 w_rel = w - c_sg * Vec3(0.0, -p.n, 0.0);
  Mat3 m;
  m.col(0) = Vec3::UnitX();
  m.col(1) = passive(0, phi) * Vec3::UnitY();
  m.col(2) = passive(0, phi) * passive(1, theta) * Vec3::UnitZ();
  State dx;
  dx.head<3>() = m.colPivHouseholderQr().solve(w_rel);
  dx.segment<3>(3) = J.inverse() * torque;
  dx.tail<4>() = u;
  return dx;
}

SpacecraftParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-85.0, 85.0), b(0.0, 89.0);
  SpacecraftParams p;
  p.alpha = deg2rad(a(rng));
  p.beta = deg2rad(b(rng));
  return p;
}

TEST(Dynamics, RhsMatchesIndependentTranscription) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-0.5, 0.5), rate(-0.01, 0.01), speed(-50.0, 50.0), acc(-0.5, 0.5);
  for (int k = 0; k < 200; ++k) {
    const SpacecraftParams p = random_params(rng);
    State x;
    for (int i = 0; i < 3; ++i) x(i) = ang(rng);
    for (int i = 3; i < 6; ++i) x(i) = rate(rng);
    for (int i = 6; i < 10; ++i) x(i) = speed(rng);
    Input u;
    for (int i = 0; i < 4; ++i) u(i) = acc(rng);
    const State f = eom_rhs(x, u, p), g = oracle_rhs(x, u, p);
    EXPECT_LT((f - g).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + g.cwiseAbs().maxCoeff()));
  }
}

TEST(Dynamics, EquilibriumIsStationary) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> speed(-100.0, 100.0);
  for (int k = 0; k < 100; ++k) {
    const SpacecraftParams p = random_params(rng);
    const Reference v(speed(rng), speed(rng));
    EXPECT_LT(eom_rhs(equilibrium(v, p), Input::Zero(), p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Dynamics, EquilibriumLayout) {
  SpacecraftParams p;
  const State x = equilibrium(Reference(-1.0, 2.0), p);
  State expected;
  expected << 0, 0, 0, 0, -p.n, 0, -1, 2, -1, 2;
  EXPECT_EQ(x, expected);
}

TEST(Dynamics, WheelFrameIsRotationWithSpinAxisInThirdRow) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const SpacecraftParams p = random_params(rng);
    for (int i = 0; i < 4; ++i) {
      const Mat3 w = wheel_frame(p, i);
      EXPECT_LT((w * w.transpose() - Mat3::Identity()).norm(), 1e-14);
      EXPECT_NEAR(w.determinant(), 1.0, 1e-14);
      EXPECT_LT((w.row(2).transpose() - wheel_axis(p, i)).norm(), 1e-14);
    }
  }
}

TEST(Dynamics, MomentumMapMatchesClosedForm) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> speed(-50.0, 50.0);
  for (int k = 0; k < 50; ++k) {
    const SpacecraftParams p = random_params(rng);
    State x = State::Zero();
    for (int i = 6; i < 10; ++i) x(i) = speed(rng);
    const Vec3 a = wheel_momentum_map(p) * x.tail<4>();
    EXPECT_LT((a - rw_momentum(x, p)).norm(), 1e-12 * (1.0 + a.norm()));
  }
}

TEST(Dynamics, EqualPairSpeedsCancelTransverseMomentum) {
  SpacecraftParams p;
  p.beta = deg2rad(20.0);
  const Vec3 h = rw_momentum(equilibrium(Reference(3.0, -7.0), p), p);
  EXPECT_NEAR(h(0), 0.0, 1e-15);
  EXPECT_NEAR(h(2), 0.0, 1e-15);
  EXPECT_NEAR(h(1), -p.Js * std::sin(p.alpha) * 2.0 * (3.0 - 7.0), 1e-14);
}

TEST(Dynamics, SingularPitchThrows) {
  SpacecraftParams p;
  State x = equilibrium(Reference::Zero(), p);
  x(idx::kTheta) = std::numbers::pi / 2;
  EXPECT_THROW(eom_rhs(x, Input::Zero(), p), SingularityError);
}

TEST(Dynamics, ParamsValidation) {
  SpacecraftParams p;
  EXPECT_NO_THROW(p.validate());
  p.J1 = 5000.0;  // violates the triangle inequality
  EXPECT_THROW(p.validate(), PreconditionError);
  p = SpacecraftParams{};
  p.Js = 0.0;
  EXPECT_THROW(p.validate(), PreconditionError);
  EXPECT_DOUBLE_EQ(SpacecraftParams{}.u_max(), 0.5);
}

TEST(Dynamics, QuarterTurnTrigIsExact) {
  EXPECT_EQ(snap_unit(std::cos(deg2rad(90.0))), 0.0);
  EXPECT_EQ(snap_unit(0.25), 0.25);
  SpacecraftParams p;
  p.alpha = deg2rad(90.0);
  const Mat3x4 m = wheel_momentum_map(p);
  EXPECT_EQ(m.row(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(m.row(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dynamics, Rk4IsFourthOrder) {
  SpacecraftParams p;
  State x0 = equilibrium(Reference(2.0, -3.0), p);
  x0(0) = 0.05;
  x0(1) = -0.03;
  x0(3) = 0.05;  // fast roll so truncation error dominates rounding
  const Input u(0.01, -0.02, 0.015, 0.0);
  auto run = [&](double dt) {
    State x = x0;
    const int steps = static_cast<int>(std::lround(100.0 / dt));
    for (int i = 0; i < steps; ++i) x = rk4_step(x, u, dt, p);
    return x;
  };
  const State ref = run(1.0 / 64.0);
  const double e1 = (run(2.0) - ref).norm(), e2 = (run(1.0) - ref).norm();
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3) << e1 << ' ' << e2;
}

TEST(Dynamics, InertialMomentumConservedWithoutGravityGradientTorque) {
  // Equal principal inertias make the gravity-gradient torque vanish, so the
  // total momentum is constant in inertial axes even with wheel accelerations.
  SpacecraftParams p;
  p.J1 = p.J2 = p.J3 = 1500.0;
  State x = equilibrium(Reference(10.0, -20.0), p);
  x(0) = 0.05;
  x(1) = -0.04;
  x(2) = 0.03;
  x(3) = 2e-3;
  x(5) = -1e-3;
  const Vec3 h0 = inertial_momentum(x, 0.0, p);
  double worst = 0.0;
  const Input u(0.3, -0.2, 0.1, 0.4);
  for (int k = 1; k <= 600; ++k) {
    x = rk4_step(x, u, 1.0, p);
    worst = std::max(worst, (inertial_momentum(x, k * 1.0, p) - h0).norm());
  }
  EXPECT_LT(worst, 1e-8 * h0.norm());
}

TEST(Dynamics, AngleConversions) {
  EXPECT_DOUBLE_EQ(deg2rad(180.0), std::numbers::pi);
  EXPECT_DOUBLE_EQ(rad2deg(std::numbers::pi / 4), 45.0);
}

}  // namespace
