#pragma once

#include <vector>

#include "rwdesat/linmodel.hpp"
#include "rwdesat/numerics.hpp"

namespace rwdesat {

/// Input-constrained LQ-MPC tuning. Defaults: N = 5, Ts = 10 s,
/// Q = diag(1 x6, 1e-4 x4), R = 1e-8 I, l = 6 projected-gradient iterations.
struct MpcConfig {
  int horizon = 5;
  double Ts = 10.0;
  Vec10 q_diag = (Vec10() << 1, 1, 1, 1, 1, 1, 1e-4, 1e-4, 1e-4, 1e-4).finished();
  Vec4 r_diag = Vec4::Constant(1e-8);
  int iterations = 6;
  double u_max = 0.5;
  bool warm_start = true;

  Mat10 Q() const { return q_diag.asDiagonal(); }
  Mat4 R() const { return r_diag.asDiagonal(); }
  void validate() const;
};

/// Discrete model plus the LQR design used by every controller.
struct Synthesis {
  DiscreteLinearModel model;
  Mat10 P = Mat10::Zero();      // DARE solution (terminal weight)
  Mat4x10 K = Mat4x10::Zero();  // stabilizing feedback u = -K x_bar
  Mat10 Acl = Mat10::Identity();
  double spectral_radius = 0.0;
  double dare_residual = 0.0;
  int dare_iterations = 0;
  /// Set when the closed-form Jacobian disagreed with finite differences and
  /// the finite-difference model was used instead.
  bool used_numeric_jacobian = false;
  JacobianComparison jacobian_check;
};

/// Linearize at equilibrium(r), discretize with ZOH and solve the DARE.
/// Throws ConvergenceError if the DARE iteration fails (uncontrollable geometry).
Synthesis synthesize(const SpacecraftParams& p, const Reference& r, const MpcConfig& cfg,
                     const SolverTolerances& tol = {});

/// Condensed form of the horizon-N problem. With stacked inputs U,
///   J(U) = sum_j |xi_j|_Q^2 + |mu_j|_R^2 + |xi_N|_P^2
///        = 1/2 U'HU + 2 (F x0)'U + x0' Y x0,
/// so grad J = H U + 2 F x0 and H = 2 (G' Qbar G + Rbar).
struct CondensedQp {
  Matrix H;      // 4N x 4N
  Matrix F;      // 4N x 10
  Matrix Y;      // 10 x 10 constant term
  Matrix Phi;    // 10(N+1) x 10 stacked powers of Ad
  Matrix Gamma;  // 10(N+1) x 4N impulse-response blocks
  double L = 0.0;  // lambda_max(H)
  int horizon = 0;
};

CondensedQp condense(const DiscreteLinearModel& dlm, const MpcConfig& cfg, const Mat10& terminal_weight);

double condensed_cost(const CondensedQp& qp, const Vector& U, const Vec10& x0);

/// Box projection onto [-u_max, u_max].
Vector clamp_box(const Vector& u, double u_max);
Vec4 clamp_box(const Vec4& u, double u_max);

/// l iterations of U <- clamp(U - (H U + 2 F x0) / L).
Vector pg_solve(const CondensedQp& qp, const Vec10& x0, const Vector& U_warm, int iterations, double u_max);

/// Predicted state after the horizon: Phi_N x0 + Gamma_N U.
Vec10 predict_terminal(const CondensedQp& qp, const Vec10& x0, const Vector& U);

/// Drop the first input, shift, and append clamp(-K x_end).
Vector warm_start_shift(const Vector& U_prev, const Mat4x10& K, const Vec10& x_end, double u_max);

/// MPC inputs continued with the saturated LQR tail, and the matching
/// deviation-state trajectory (states.size() == inputs.size() + 1).
struct ExtendedSequence {
  std::vector<Vec4> inputs;
  std::vector<Vec10> states;
  State base_state = State::Zero();
  Reference base_ref = Reference::Zero();
};

/// u_j = U_j for j < N, clamp(-K x_bar_j) afterwards; x_bar_0 = x_k - equilibrium(v).
ExtendedSequence extend_sequence(const Vector& U, const DiscreteLinearModel& dlm, const Mat4x10& K, const State& x_k,
                                 const Reference& v, int n_ext, double u_max, const SpacecraftParams& p);

/// Time-distributed MPC: a fixed iteration budget per sample, warm-started
/// from the shifted previous solution.
class TdmpcController {
 public:
  TdmpcController(const Synthesis& syn, const MpcConfig& cfg);

  /// Runs `iterations` projected-gradient steps from the warm start and
  /// returns the full input sequence. The warm start is then shifted.
  Vector solve(const Vec10& x_bar, int iterations);

  void reset() { warm_.setZero(); }
  const Vector& warm_start() const { return warm_; }
  const CondensedQp& qp() const { return qp_; }
  const MpcConfig& config() const { return cfg_; }
  const Synthesis& synthesis() const { return syn_; }

 private:
  Synthesis syn_;
  MpcConfig cfg_;
  CondensedQp qp_;
  Vector warm_;
};

}  // namespace rwdesat
