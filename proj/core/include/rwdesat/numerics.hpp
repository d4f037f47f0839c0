#pragma once

#include <utility>

#include "rwdesat/types.hpp"

namespace rwdesat {

/// Tolerances and iteration caps shared by the dense solvers.
struct SolverTolerances {
  double rank_rel = 1e-9;
  double dare_step = 1e-12;  // relative change between Riccati iterates
  int dare_max_iter = 200000;
  double stability_margin = 1e-12;  // dlyap requires rho(Acl) < 1 - margin
};

/// Matrix exponential (scaling and squaring with a Pade core).
/// Throws NumericalError on non-square input or a non-finite result.
Matrix expm(const Matrix& m);

/// Numeric rank: singular values above tol * sigma_max, after column balancing.
int matrix_rank(const Matrix& m, double tol = SolverTolerances{}.rank_rel);

/// Singular values (descending) of the column-balanced matrix.
Vector balanced_singular_values(const Matrix& m);

struct EigPair {
  double value = 0.0;
  Vector vector;
};

/// Largest eigenvalue of (S + S^T)/2 and its unit eigenvector.
EigPair sym_eig_max(const Matrix& s);

/// Smallest eigenvalue of (S + S^T)/2.
double sym_eig_min(const Matrix& s);

/// Spectral radius of a general square matrix.
double spectral_radius(const Matrix& m);

struct DareResult {
  Matrix P;
  int iterations = 0;
  double residual = 0.0;  // inf-norm of the Riccati re-substitution residual
};

/// Discrete algebraic Riccati equation by fixed-point iteration from P0 = Q:
///   P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA.
/// Throws ConvergenceError if the iteration cap is hit.
DareResult solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                      const SolverTolerances& tol = {});

/// Riccati re-substitution residual in the infinity norm.
double dare_residual(const Matrix& p, const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

/// K = (R + B'PB)^-1 B'PA. The stabilizing loop is A - B K (inputs u = -K x).
Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& p, const Matrix& r);

/// Discrete Lyapunov equation Acl' P Acl - P + W = 0 via the Kronecker system.
/// Throws NumericalError if rho(Acl) >= 1 - margin.
Matrix solve_dlyap(const Matrix& acl, const Matrix& w, const SolverTolerances& tol = {});

/// True iff the symmetric part of S admits a Cholesky factorization.
bool is_positive_definite(const Matrix& s);

inline double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace rwdesat
