#include "refugia/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace refugia {

namespace {

constexpr double kCgTolerance = 1e-12;
constexpr double kRejectThreshold = 1e-8;

double inf_norm(const Eigen::VectorXd& x) { return x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0; }

Eigen::VectorXd checked_clamp(const Eigen::VectorXd& x, const char* name) {
  if (x.size() && x.minCoeff() < -kRejectThreshold) {
    throw Error(Errc::StepRejected, std::string(name) + " went negative (" + std::to_string(x.minCoeff()) +
                                        "); reduce dt");
  }
  return x.cwiseMax(0.0);
}

TransientSample sample(double t, const SystemState& s, const ModelParams& p, const DomainGeometry& geom) {
  const SystemState rate = rhs_transient(p, s, geom);
  return {t, inf_norm(s.u.values), inf_norm(s.v.values), inf_norm(rate.u.values), inf_norm(rate.v.values)};
}

}  // namespace

ImexStepper::ImexStepper(const ModelParams& params, double dt, const DomainGeometry& geom)
    : params_(params), dt_(dt), geom_(geom) {
  params.validate_transient();
  if (!(dt > 0.0)) throw Error(Errc::InvalidParams, "time step must be positive");
  const int nv = geom.omega1_count();
  SparseMatrix I(nv, nv);
  I.setIdentity();
  v_matrix_ = I - (dt * params.D_v) * geom.laplacian(Region::Omega1);
  v_matrix_.makeCompressed();
  v_solver_.setTolerance(kCgTolerance);
  v_solver_.compute(v_matrix_);
}

double ImexStepper::reaction_dt_bound(const ModelParams& p) {
  return 0.5 / std::max({p.r, p.mu, p.c * p.lambda, 1e-300});
}

SystemState ImexStepper::step(const SystemState& s) const {
  const auto& p = params_;
  require_region(s.u, Region::Omega, geom_, "prey field");
  require_region(s.v, Region::Omega1, geom_, "predator field");
  const Eigen::VectorXd u = clamp_density<double>(s.u.values, "prey density");
  const Eigen::VectorXd v = clamp_density<double>(s.v.values, "predator density");
  const int nu = geom_.cell_count(), nv = geom_.omega1_count();

  Eigen::VectorXd rhs_u = u;
  Eigen::VectorXd rhs_v = v;
  for (int k = 0; k < nu; ++k) rhs_u[k] += dt_ * p.r * u[k] * (1.0 - u[k] / p.lambda);
  for (int j = 0; j < nv; ++j) {
    const int cell = geom_.omega1_cell(j);
    const double holling = u[cell] * v[j] / (1.0 + p.m * u[cell]);
    rhs_u[cell] -= dt_ * p.b * holling;
    rhs_v[j] += dt_ * (-p.mu * v[j] + p.c * holling);
  }

  // I - dt D_u A(u^n), A with face coefficients (u_k + u_nb)/2.
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(5 * static_cast<std::size_t>(nu));
  for (int k = 0; k < nu; ++k) {
    double diag = 1.0;
    for (int face = 0; face < kFaceCount; ++face) {
      const int nb = geom_.neighbor(Region::Omega, k, static_cast<Face>(face));
      if (nb < 0) continue;
      const double a = dt_ * p.D_u * geom_.face_weight(static_cast<Face>(face)) * 0.5 * (u[k] + u[nb]);
      t.emplace_back(k, nb, -a);
      diag += a;
    }
    t.emplace_back(k, k, diag);
  }
  SparseMatrix Au(nu, nu);
  Au.setFromTriplets(t.begin(), t.end());

  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> u_solver;
  u_solver.setTolerance(kCgTolerance);
  u_solver.compute(Au);
  Eigen::VectorXd u_next = u_solver.solveWithGuess(rhs_u, u);
  if (u_solver.info() != Eigen::Success) {
    throw Error(Errc::LinearSolveFailure, "prey diffusion solve did not converge");
  }
  Eigen::VectorXd v_next = v_solver_.solveWithGuess(rhs_v, v);
  if (v_solver_.info() != Eigen::Success) {
    throw Error(Errc::LinearSolveFailure, "predator diffusion solve did not converge");
  }

  SystemState out;
  out.u = {Region::Omega, checked_clamp(u_next, "prey density")};
  out.v = {Region::Omega1, checked_clamp(v_next, "predator density")};
  return out;
}

SystemState imex_step(const SystemState& s, const ModelParams& params, double dt, const DomainGeometry& geom) {
  return ImexStepper(params, dt, geom).step(s);
}

TransientResult run_to_steady(const SystemState& s0, const ModelParams& params, const TransientConfig& cfg,
                              const DomainGeometry& geom) {
  if (!(cfg.steady_tol > 0.0)) throw Error(Errc::InvalidParams, "steady tolerance must be positive");
  if (cfg.max_steps < 1 || cfg.record_every < 1) throw Error(Errc::InvalidParams, "step counts must be positive");
  const ImexStepper stepper(params, cfg.dt, geom);

  TransientResult out;
  out.state = s0;
  TransientSample last = sample(0.0, out.state, params, geom);
  out.history.push_back(last);
  while (out.steps < cfg.max_steps && out.t < cfg.t_end - 1e-12 * cfg.dt) {
    out.state = stepper.step(out.state);
    ++out.steps;
    out.t = out.steps * cfg.dt;
    last = sample(out.t, out.state, params, geom);
    out.converged = last.dudt_inf <= cfg.steady_tol && last.dvdt_inf <= cfg.steady_tol;
    if (out.converged || out.steps % cfg.record_every == 0) out.history.push_back(last);
    if (out.converged) break;
  }
  if (out.history.back().t != out.t) out.history.push_back(last);
  return out;
}

}  // namespace refugia
