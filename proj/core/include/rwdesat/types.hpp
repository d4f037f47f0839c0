#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rwdesat {

inline constexpr int kStateDim = 10;
inline constexpr int kInputDim = 4;
inline constexpr int kRefDim = 2;

using Vec2 = Eigen::Matrix<double, 2, 1>;
using Vec3 = Eigen::Matrix<double, 3, 1>;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec10 = Eigen::Matrix<double, kStateDim, 1>;
using Mat3 = Eigen::Matrix<double, 3, 3>;
using Mat3x4 = Eigen::Matrix<double, 3, 4>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat10 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Mat10x4 = Eigen::Matrix<double, kStateDim, kInputDim>;
using Mat4x10 = Eigen::Matrix<double, kInputDim, kStateDim>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Full state [phi, theta, psi, w1, w2, w3, Om1, Om2, Om3, Om4].
using State = Vec10;
/// Wheel angular accelerations [A1..A4] (rad/s^2).
using Input = Vec4;
/// Commanded wheel-pair speeds (a, b) (rad/s).
using Reference = Vec2;

/// Named indices into State.
namespace idx {
inline constexpr int kPhi = 0;
inline constexpr int kTheta = 1;
inline constexpr int kPsi = 2;
inline constexpr int kW1 = 3;
inline constexpr int kW2 = 4;
inline constexpr int kW3 = 5;
inline constexpr int kWheel0 = 6;
}  // namespace idx

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euler-angle kinematics evaluated too close to theta = +-pi/2.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver ran out of iterations.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Matrix that must be invertible (or stable) is not.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Inputs violate a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace rwdesat
