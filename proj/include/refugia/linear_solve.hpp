#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "refugia/error.hpp"

namespace refugia {

/// Sparse LU with a couple of iterative-refinement sweeps. Throws `failure`
/// when factorization breaks down or the relative residual stays above
/// `accept_tol` after refinement.
class SparseDirectSolver {
 public:
  explicit SparseDirectSolver(Errc failure = Errc::LinearSolveFailure, double accept_tol = 1e-8)
      : failure_(failure), accept_tol_(accept_tol) {}

  void factorize(const Eigen::SparseMatrix<double>& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  double last_relative_residual() const { return last_residual_; }

 private:
  Errc failure_;
  double accept_tol_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  mutable double last_residual_ = 0.0;
};

/// One-shot convenience wrapper.
Eigen::VectorXd solve_sparse(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& rhs,
                             Errc failure = Errc::LinearSolveFailure);

}  // namespace refugia
