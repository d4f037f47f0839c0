#include "rwdesat/tdmpc.hpp"

#include <algorithm>

namespace rwdesat {

void MpcConfig::validate() const {
  if (horizon < 1) throw PreconditionError("MpcConfig: horizon must be >= 1");
  if (!(Ts > 0.0)) throw PreconditionError("MpcConfig: Ts must be positive");
  if (iterations < 1) throw PreconditionError("MpcConfig: iterations must be >= 1");
  if (!(u_max > 0.0)) throw PreconditionError("MpcConfig: u_max must be positive");
  if ((q_diag.array() < 0.0).any()) throw PreconditionError("MpcConfig: Q must be positive semidefinite");
  if ((r_diag.array() <= 0.0).any()) throw PreconditionError("MpcConfig: R must be positive definite");
}

Synthesis synthesize(const SpacecraftParams& p, const Reference& r, const MpcConfig& cfg,
                     const SolverTolerances& tol) {
  cfg.validate();
  Synthesis syn;
  const ContinuousLinearModel analytic = linearize_analytic(p, r);
  const ContinuousLinearModel numeric = linearize_numeric(p, r);
  syn.jacobian_check = compare_jacobians(analytic, numeric);
  syn.used_numeric_jacobian = !syn.jacobian_check.agree;
  syn.model = discretize_zoh(syn.used_numeric_jacobian ? numeric : analytic, cfg.Ts);

  const Matrix q = cfg.Q(), rr = cfg.R();
  const DareResult dare = solve_dare(syn.model.Ad, syn.model.Bd, q, rr, tol);
  syn.P = dare.P;
  syn.dare_residual = dare.residual;
  syn.dare_iterations = dare.iterations;
  syn.K = lqr_gain(syn.model.Ad, syn.model.Bd, syn.P, rr);
  syn.Acl = syn.model.Ad - syn.model.Bd * syn.K;
  syn.spectral_radius = spectral_radius(syn.Acl);
  return syn;
}

CondensedQp condense(const DiscreteLinearModel& dlm, const MpcConfig& cfg, const Mat10& terminal_weight) {
  const int N = cfg.horizon;
  const int nx = kStateDim, nu = kInputDim;
  CondensedQp qp;
  qp.horizon = N;
  qp.Phi = Matrix::Zero(nx * (N + 1), nx);
  qp.Gamma = Matrix::Zero(nx * (N + 1), nu * N);

  Mat10 power = Mat10::Identity();
  for (int j = 0; j <= N; ++j) {
    qp.Phi.block(nx * j, 0, nx, nx) = power;
    power = dlm.Ad * power;
  }
  // Block (j, i) of Gamma is Ad^(j-1-i) Bd for i < j.
  for (int j = 1; j <= N; ++j) {
    for (int i = 0; i < j; ++i) {
      qp.Gamma.block(nx * j, nu * i, nx, nu) = qp.Phi.block(nx * (j - 1 - i), 0, nx, nx) * dlm.Bd;
    }
  }

  Matrix qbar = Matrix::Zero(nx * (N + 1), nx * (N + 1));
  for (int j = 0; j < N; ++j) qbar.block(nx * j, nx * j, nx, nx) = cfg.Q();
  qbar.block(nx * N, nx * N, nx, nx) = terminal_weight;
  Matrix rbar = Matrix::Zero(nu * N, nu * N);
  for (int j = 0; j < N; ++j) rbar.block(nu * j, nu * j, nu, nu) = cfg.R();

  const Matrix gq = qp.Gamma.transpose() * qbar;
  qp.H = 2.0 * (gq * qp.Gamma + rbar);
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  qp.F = gq * qp.Phi;
  qp.Y = qp.Phi.transpose() * qbar * qp.Phi;
  qp.L = sym_eig_max(qp.H).value;
  return qp;
}

double condensed_cost(const CondensedQp& qp, const Vector& U, const Vec10& x0) {
  return 0.5 * U.dot(qp.H * U) + 2.0 * (qp.F * x0).dot(U) + x0.dot(qp.Y * x0);
}

Vector clamp_box(const Vector& u, double u_max) { return u.cwiseMax(-u_max).cwiseMin(u_max); }
Vec4 clamp_box(const Vec4& u, double u_max) { return u.cwiseMax(-u_max).cwiseMin(u_max); }

Vector pg_solve(const CondensedQp& qp, const Vec10& x0, const Vector& U_warm, int iterations, double u_max) {
  if (iterations < 1) throw PreconditionError("pg_solve: need at least one iteration");
  const Vector lin = 2.0 * (qp.F * x0);
  const double step = 1.0 / qp.L;
  Vector U = U_warm;
  for (int i = 0; i < iterations; ++i) U = clamp_box(Vector(U - step * (qp.H * U + lin)), u_max);
  return U;
}

Vec10 predict_terminal(const CondensedQp& qp, const Vec10& x0, const Vector& U) {
  const int N = qp.horizon;
  return qp.Phi.block(kStateDim * N, 0, kStateDim, kStateDim) * x0 +
         qp.Gamma.block(kStateDim * N, 0, kStateDim, kInputDim * N) * U;
}

Vector warm_start_shift(const Vector& U_prev, const Mat4x10& K, const Vec10& x_end, double u_max) {
  const Eigen::Index m = U_prev.size();
  Vector out(m);
  out.head(m - kInputDim) = U_prev.tail(m - kInputDim);
  out.tail(kInputDim) = clamp_box(Vec4(-K * x_end), u_max);
  return out;
}

ExtendedSequence extend_sequence(const Vector& U, const DiscreteLinearModel& dlm, const Mat4x10& K, const State& x_k,
                                 const Reference& v, int n_ext, double u_max, const SpacecraftParams& p) {
  const int N = static_cast<int>(U.size() / kInputDim);
  if (n_ext < N) throw PreconditionError("extend_sequence: extension shorter than the MPC horizon");
  ExtendedSequence seq;
  seq.base_state = x_k;
  seq.base_ref = v;
  seq.inputs.reserve(static_cast<std::size_t>(n_ext));
  seq.states.reserve(static_cast<std::size_t>(n_ext) + 1);
  Vec10 x = x_k - equilibrium(v, p);
  seq.states.push_back(x);
  for (int j = 0; j < n_ext; ++j) {
    const Vec4 u = j < N ? clamp_box(Vec4(U.segment<kInputDim>(kInputDim * j)), u_max) : clamp_box(Vec4(-K * x), u_max);
    x = dlm.Ad * x + dlm.Bd * u;
    seq.inputs.push_back(u);
    seq.states.push_back(x);
  }
  return seq;
}

TdmpcController::TdmpcController(const Synthesis& syn, const MpcConfig& cfg)
    : syn_(syn), cfg_(cfg), qp_(condense(syn.model, cfg, syn.P)), warm_(Vector::Zero(kInputDim * cfg.horizon)) {}

Vector TdmpcController::solve(const Vec10& x_bar, int iterations) {
  const Vector start = cfg_.warm_start ? warm_ : Vector::Zero(warm_.size());
  const Vector U = pg_solve(qp_, x_bar, start, iterations, cfg_.u_max);
  warm_ = warm_start_shift(U, syn_.K, predict_terminal(qp_, x_bar, U), cfg_.u_max);
  return U;
}

}  // namespace rwdesat
