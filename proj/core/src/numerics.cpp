#include "rwdesat/numerics.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace rwdesat {

Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw NumericalError("expm: matrix must be square");
  if (!m.allFinite()) throw NumericalError("expm: non-finite input");
  Matrix e = m.exp();
  if (!e.allFinite()) throw NumericalError("expm: result overflows double precision");
  return e;
}

namespace {

Matrix balance_columns(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double nrm = out.col(j).norm();
    if (nrm > 0.0) out.col(j) /= nrm;
  }
  return out;
}

}  // namespace

Vector balanced_singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(balance_columns(m));
  return svd.singularValues();
}

int matrix_rank(const Matrix& m, double tol) {
  const Vector sv = balanced_singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * sv(0)) ++rank;
  }
  return rank;
}

EigPair sym_eig_max(const Matrix& s) {
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Eigen::Index last = sym.rows() - 1;
  EigPair out;
  out.value = es.eigenvalues()(last);
  out.vector = es.eigenvectors().col(last).normalized();
  return out;
}

double sym_eig_min(const Matrix& s) {
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double dare_residual(const Matrix& p, const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Matrix bp = b.transpose() * p;
  const Matrix s = r + bp * b;
  const Matrix rhs = q + a.transpose() * p * a - (bp * a).transpose() * s.ldlt().solve(bp * a);
  return inf_norm(p - rhs);
}

DareResult solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                      const SolverTolerances& tol) {
  Matrix p = 0.5 * (q + q.transpose());
  DareResult out;
  for (int it = 1; it <= tol.dare_max_iter; ++it) {
    const Matrix bp = b.transpose() * p;
    const Matrix s = r + bp * b;
    const Matrix bpa = bp * a;
    Matrix next = q + a.transpose() * p * a - bpa.transpose() * s.ldlt().solve(bpa);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw ConvergenceError("solve_dare: iterate diverged");
    const double change = inf_norm(next - p);
    const double scale = std::max(inf_norm(next), 1e-300);
    p = std::move(next);
    if (change <= tol.dare_step * scale || change == 0.0) {
      out.P = p;
      out.iterations = it;
      out.residual = dare_residual(p, a, b, q, r);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "solve_dare: no convergence after " << tol.dare_max_iter
      << " iterations (pair may not be stabilizable)";
  throw ConvergenceError(msg.str());
}

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& p, const Matrix& r) {
  const Matrix s = r + b.transpose() * p * b;
  Eigen::FullPivLU<Matrix> lu(s);
  if (!lu.isInvertible()) throw NumericalError("lqr_gain: R + B'PB is singular");
  return lu.solve(b.transpose() * p * a);
}

Matrix solve_dlyap(const Matrix& acl, const Matrix& w, const SolverTolerances& tol) {
  const Eigen::Index n = acl.rows();
  if (acl.cols() != n || w.rows() != n || w.cols() != n) throw NumericalError("solve_dlyap: dimension mismatch");
  const double rho = spectral_radius(acl);
  if (rho >= 1.0 - tol.stability_margin) {
    std::ostringstream msg;
    msg << "solve_dlyap: closed loop not Schur stable (spectral radius " << rho << ")";
    throw NumericalError(msg.str());
  }
  // vec(Acl' P Acl) = (Acl' kron Acl') vec(P)
  const Matrix at = acl.transpose();
  Matrix kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = at(i, j) * at;
  }
  const Matrix lhs = Matrix::Identity(n * n, n * n) - kron;
  const Matrix wsym = 0.5 * (w + w.transpose());
  const Vector vec_w = Eigen::Map<const Vector>(wsym.data(), n * n);
  const Vector vec_p = lhs.partialPivLu().solve(vec_w);
  Matrix p = Eigen::Map<const Matrix>(vec_p.data(), n, n);
  return 0.5 * (p + p.transpose());
}

bool is_positive_definite(const Matrix& s) {
  Eigen::LLT<Matrix> llt(0.5 * (s + s.transpose()));
  return llt.info() == Eigen::Success;
}

}  // namespace rwdesat
