#pragma once

#include <vector>

#include <Eigen/Core>

#include "refugia/geometry.hpp"
#include "refugia/operators.hpp"

namespace refugia {

struct NewtonConfig {
  double tol_residual = 1e-10;  // infinity norm
  int max_iter = 50;
  double damping = 0.5;
  double min_step = 1.0 / 1024.0;

  bool operator==(const NewtonConfig&) const = default;
};

struct NewtonResult {
  SystemState state;
  int iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // infinity norms, starting with the initial guess
};

/// Damped Newton for the steady system. Iterates are clamped to be
/// non-negative. Throws SingularJacobian or NoConvergence.
NewtonResult newton_solve(const SystemState& initial, const ModelParams& params, const NewtonConfig& cfg,
                          const DomainGeometry& geom);

/// Null direction of the linearization at (lambda, 0, mu*): alpha solves
/// -Lap(alpha) + alpha = b(x)/(1 + m lambda) with zero flux, and the kernel
/// vector in (u, v) coordinates is (-alpha, 1).
struct KernelTangent {
  ScalarField alpha;
  double beta = 1.0;
  Eigen::VectorXd direction;   // packed (-alpha, 1)
  Eigen::VectorXd normalized;  // direction / ||direction||_2
};

KernelTangent solve_kernel_function(const ModelParams& params, const DomainGeometry& geom);

}  // namespace refugia
