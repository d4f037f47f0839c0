#include "rwdesat/linmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rwdesat/numerics.hpp"

namespace rwdesat {

ContinuousLinearModel linearize_analytic(const SpacecraftParams& p, const Reference& r) {
  const double n = p.n;
  const double ca = snap_unit(std::cos(p.alpha)), sa = snap_unit(std::sin(p.alpha));
  const double cb = snap_unit(std::cos(p.beta)), sb = snap_unit(std::sin(p.beta));
  const double rsum = r(0) + r(1);

  const double a41 = -3.0 * n * (p.J2 - p.J3) / p.Js;
  const double a52 = -3.0 * n * (p.J1 - p.J3) / p.Js;
  const double a46 = (p.J3 - p.J2) / p.Js - 2.0 * sa * rsum / n;
  const double a64 = (p.J2 - p.J1) / p.Js + 2.0 * sa * rsum / n;

  Mat10 a = Mat10::Zero();
  a(0, 2) = n;
  a(0, 3) = 1.0;
  a(1, 4) = 1.0;
  a(2, 0) = -n;
  a(2, 5) = 1.0;
  a(3, 0) = a41;
  a(3, 5) = a46;
  a.block<1, 4>(3, 6) << ca * cb, -ca * sb, -ca * cb, ca * sb;
  a(4, 1) = a52;
  a(5, 3) = a64;
  a.block<1, 4>(5, 6) << -ca * sb, -ca * cb, ca * sb, ca * cb;

  Mat10x4 b = Mat10x4::Zero();
  b.row(3) << -ca * sb / n, -ca * cb / n, ca * sb / n, ca * cb / n;
  b.row(4).setConstant(sa / n);
  b.row(5) << -ca * cb / n, ca * sb / n, ca * cb / n, -ca * sb / n;
  b.block<4, 4>(6, 0).setIdentity();

  // Row scaling E = diag(1, 1, 1, n Js / J1, n Js / J2, n Js / J3, 1, 1, 1, 1).
  const double e[3] = {n * p.Js / p.J1, n * p.Js / p.J2, n * p.Js / p.J3};
  for (int i = 0; i < 3; ++i) {
    a.row(3 + i) *= e[i];
    b.row(3 + i) *= e[i];
  }
  return {a, b, r};
}

ContinuousLinearModel jacobian_at(const SpacecraftParams& p, const State& x0, const Input& u0, double h) {
  if (!(h > 0.0)) throw PreconditionError("finite-difference step must be positive");
  ContinuousLinearModel out;
  for (int j = 0; j < kStateDim; ++j) {
    const double step = h * std::max(1.0, std::abs(x0(j)));
    State xp = x0, xm = x0;
    xp(j) += step;
    xm(j) -= step;
    out.A.col(j) = (eom_rhs(xp, u0, p) - eom_rhs(xm, u0, p)) / (2.0 * step);
  }
  for (int j = 0; j < kInputDim; ++j) {
    const double step = h * std::max(1.0, std::abs(u0(j)));
    Input up = u0, um = u0;
    up(j) += step;
    um(j) -= step;
    out.B.col(j) = (eom_rhs(x0, up, p) - eom_rhs(x0, um, p)) / (2.0 * step);
  }
  return out;
}

ContinuousLinearModel linearize_numeric(const SpacecraftParams& p, const Reference& r, double h) {
  const State xeq = equilibrium(r, p);
  const double residual = eom_rhs(xeq, Input::Zero(), p).cwiseAbs().maxCoeff();
  if (residual >= 1e-10) {
    std::ostringstream msg;
    msg << "linearize_numeric: point is not an equilibrium (|f| = " << residual << ")";
    throw PreconditionError(msg.str());
  }
  ContinuousLinearModel out = jacobian_at(p, xeq, Input::Zero(), h);
  out.r = r;
  return out;
}

DiscreteLinearModel discretize_zoh(const ContinuousLinearModel& m, double Ts) {
  if (!(Ts > 0.0)) throw PreconditionError("discretize_zoh: Ts must be positive");
  Matrix aug = Matrix::Zero(kStateDim + kInputDim, kStateDim + kInputDim);
  aug.topLeftCorner(kStateDim, kStateDim) = m.A;
  aug.topRightCorner(kStateDim, kInputDim) = m.B;
  const Matrix e = expm(aug * Ts);
  DiscreteLinearModel out;
  out.Ad = e.topLeftCorner(kStateDim, kStateDim);
  out.Bd = e.topRightCorner(kStateDim, kInputDim);
  out.Ts = Ts;
  out.r = m.r;
  return out;
}

JacobianComparison compare_jacobians(const ContinuousLinearModel& analytic, const ContinuousLinearModel& numeric,
                                     double rel, double abs_floor) {
  JacobianComparison out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  auto scan = [&](const auto& ma, const auto& mn, int col_offset) {
    for (Eigen::Index i = 0; i < ma.rows(); ++i) {
      const double scale = std::max(analytic.A.row(i).cwiseAbs().maxCoeff(), analytic.B.row(i).cwiseAbs().maxCoeff());
      const double tol = std::max(rel * scale, abs_floor);
      for (Eigen::Index j = 0; j < ma.cols(); ++j) {
        const double diff = std::abs(ma(i, j) - mn(i, j));
        out.max_abs_diff = std::max(out.max_abs_diff, diff);
        const double excess = diff - tol;
        if (excess > out.worst_excess) {
          out.worst_excess = excess;
          out.worst_row = static_cast<int>(i);
          out.worst_col = static_cast<int>(j) + col_offset;
        }
      }
    }
  };
  scan(analytic.A, numeric.A, 0);
  scan(analytic.B, numeric.B, kStateDim);
  out.agree = out.worst_excess <= 0.0;
  return out;
}

}  // namespace rwdesat
