#include "refugia/linear_solve.hpp"

#include <string>

namespace refugia {

namespace {
constexpr double kTargetResidual = 1e-12;
constexpr int kRefinementSweeps = 2;
}  // namespace

void SparseDirectSolver::factorize(const Eigen::SparseMatrix<double>& A) {
  matrix_ = A;
  matrix_.makeCompressed();
  lu_.analyzePattern(matrix_);
  lu_.factorize(matrix_);
  if (lu_.info() != Eigen::Success) {
    throw Error(failure_, "sparse LU factorization failed: " + lu_.lastErrorMessage());
  }
}

Eigen::VectorXd SparseDirectSolver::solve(const Eigen::VectorXd& rhs) const {
  const double rhs_norm = rhs.norm();
  Eigen::VectorXd x = lu_.solve(rhs);
  if (rhs_norm == 0.0) {
    last_residual_ = 0.0;
    return Eigen::VectorXd::Zero(rhs.size());
  }
  Eigen::VectorXd r = rhs - matrix_ * x;
  for (int sweep = 0; sweep < kRefinementSweeps && r.norm() > kTargetResidual * rhs_norm; ++sweep) {
    x += lu_.solve(r);
    r = rhs - matrix_ * x;
  }
  last_residual_ = r.norm() / rhs_norm;
  if (!x.allFinite() || !(last_residual_ <= accept_tol_)) {
    throw Error(failure_, "linear solve relative residual " + std::to_string(last_residual_));
  }
  return x;
}

Eigen::MatrixXd SparseDirectSolver::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd out(rhs.rows(), rhs.cols());
  for (Eigen::Index k = 0; k < rhs.cols(); ++k) out.col(k) = solve(Eigen::VectorXd(rhs.col(k)));
  return out;
}

Eigen::VectorXd solve_sparse(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& rhs, Errc failure) {
  SparseDirectSolver solver(failure);
  solver.factorize(A);
  return solver.solve(rhs);
}

}  // namespace refugia
