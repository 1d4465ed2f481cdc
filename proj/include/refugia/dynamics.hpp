#pragma once

#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "refugia/geometry.hpp"
#include "refugia/operators.hpp"

namespace refugia {

struct TransientConfig {
  double dt = 0.1;
  double t_end = 1000.0;
  double steady_tol = 1e-8;  // on ||du/dt||_inf and ||dv/dt||_inf
  int max_steps = 100000;
  int record_every = 1;

  bool operator==(const TransientConfig&) const = default;
};

struct TransientSample {
  double t = 0.0;
  double u_inf = 0.0;
  double v_inf = 0.0;
  double dudt_inf = 0.0;
  double dvdt_inf = 0.0;
};

struct TransientResult {
  SystemState state;
  bool converged = false;
  double t = 0.0;
  int steps = 0;
  std::vector<TransientSample> history;
};

/// First-order IMEX: diffusion implicit with the prey diffusivity frozen at
/// the start of the step, kinetics explicit. The predator matrix does not
/// depend on the state, so it is built once per stepper.
class ImexStepper {
 public:
  ImexStepper(const ModelParams& params, double dt, const DomainGeometry& geom);

  SystemState step(const SystemState& s) const;
  double dt() const { return dt_; }

  /// Reaction time-step bound 0.5 / max(r, mu, c lambda) under which
  /// non-negativity is expected.
  static double reaction_dt_bound(const ModelParams& p);

 private:
  ModelParams params_;
  double dt_;
  const DomainGeometry& geom_;
  SparseMatrix v_matrix_;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> v_solver_;
};

SystemState imex_step(const SystemState& s, const ModelParams& params, double dt, const DomainGeometry& geom);

/// Steps until both time-derivative norms fall below cfg.steady_tol, or the
/// horizon/step cap is hit (converged = false).
TransientResult run_to_steady(const SystemState& s0, const ModelParams& params, const TransientConfig& cfg,
                              const DomainGeometry& geom);

}  // namespace refugia
