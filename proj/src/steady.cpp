#include "refugia/steady.hpp"

#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

#include "refugia/linear_solve.hpp"

namespace refugia {

namespace {

Eigen::VectorXd clamp_packed(Eigen::VectorXd x) { return x.cwiseMax(0.0); }

double inf_norm(const Eigen::VectorXd& x) { return x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

NewtonResult newton_solve(const SystemState& initial, const ModelParams& params, const NewtonConfig& cfg,
                          const DomainGeometry& geom) {
  params.validate();
  Eigen::VectorXd x = clamp_packed(pack(initial));
  SystemState state = unpack(x, geom);
  Eigen::VectorXd res = residual_steady(params, state, geom);
  double norm = inf_norm(res);

  NewtonResult out;
  out.residual_history.push_back(norm);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (norm <= cfg.tol_residual) break;
    const SparseOperator J = assemble_jacobian(params, state, geom);
    const Eigen::VectorXd dx = solve_sparse(J, -res, Errc::SingularJacobian);

    bool accepted = false;
    for (double step = 1.0; step >= cfg.min_step; step *= cfg.damping) {
      Eigen::VectorXd trial = clamp_packed(x + step * dx);
      SystemState trial_state = unpack(trial, geom);
      Eigen::VectorXd trial_res = residual_steady(params, trial_state, geom);
      const double trial_norm = inf_norm(trial_res);
      if (std::isfinite(trial_norm) && trial_norm < norm) {
        x = std::move(trial);
        state = std::move(trial_state);
        res = std::move(trial_res);
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    out.residual_history.push_back(norm);
    if (!accepted) {
      throw Error(Errc::NoConvergence, "line search failed at residual " + std::to_string(norm));
    }
  }
  if (!(norm <= cfg.tol_residual)) {
    throw Error(Errc::NoConvergence, "residual " + std::to_string(norm) + " after " +
                                         std::to_string(out.iterations) + " iterations");
  }
  out.state = std::move(state);
  out.residual_norm = norm;
  return out;
}

KernelTangent solve_kernel_function(const ModelParams& params, const DomainGeometry& geom) {
  params.validate();
  const int n = geom.cell_count();
  SparseMatrix A(n, n);
  A.setIdentity();
  A -= geom.laplacian(Region::Omega);

  const ScalarField b = attack_rate_field(geom, params.b);
  const Eigen::VectorXd rhs = b.values / (1.0 + params.m * params.lambda);

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw Error(Errc::LinearSolveFailure, "kernel factorization failed");
  Eigen::VectorXd alpha = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !alpha.allFinite()) {
    throw Error(Errc::LinearSolveFailure, "kernel solve failed");
  }

  KernelTangent k;
  k.alpha = {Region::Omega, alpha};
  k.direction.resize(n + geom.omega1_count());
  k.direction << -alpha, Eigen::VectorXd::Ones(geom.omega1_count());
  k.normalized = k.direction.normalized();
  return k;
}

}  // namespace refugia
