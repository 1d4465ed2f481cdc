#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "refugia/dynamics.hpp"
#include "refugia/error.hpp"
#include "refugia/linear_solve.hpp"
#include "refugia/steady.hpp"
#include "support.hpp"

using namespace refugia;
using refugia::test::standard_params;
using refugia::test::unit_square;

namespace {

SystemState tangent_guess(const ModelParams& p, const DomainGeometry& g, double s) {
  const KernelTangent k = solve_kernel_function(p, g);
  SystemState x = semitrivial_state(p, g);
  x.u.values -= s * k.alpha.values;
  x.v.values.setConstant(s);
  return x;
}

}  // namespace

TEST_CASE("semitrivial and trivial roots") {
  const DomainGeometry g = unit_square(24);
  for (double mu : {0.7, 1.3}) {
    const ModelParams p = standard_params(mu);
    const NewtonResult r = newton_solve(semitrivial_state(p, g), p, {}, g);
    CHECK(r.iterations <= 2);
    CHECK(r.residual_norm <= 1e-10);
    CHECK((r.state.u.values.array() - p.lambda).abs().maxCoeff() <= 1e-14);
    CHECK(r.state.v.values.lpNorm<Eigen::Infinity>() == 0.0);

    const NewtonResult z = newton_solve(uniform_state(g, 0.0, 0.0), p, {}, g);
    CHECK(z.state.u.values.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(z.state.v.values.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("coexistence state below the threshold agrees with the transient attractor") {
  const DomainGeometry g = unit_square(24);
  const ModelParams p = standard_params(0.9);
  // coexistence amplitude here is about 0.35; the guess has to sit above half of it
  const NewtonResult r = newton_solve(tangent_guess(p, g, 0.3), p, {}, g);
  CHECK(r.residual_norm <= 1e-10);
  CHECK(r.state.v.values.minCoeff() > 0.0);
  CHECK(r.state.u.values.minCoeff() >= 0.0);

  TransientConfig tc;
  tc.dt = 0.2;
  tc.t_end = 5000;
  tc.steady_tol = 1e-9;
  const TransientResult t = run_to_steady(uniform_state(g, p.lambda, 0.05), p, tc, g);
  REQUIRE(t.converged);
  CHECK((pack(t.state) - pack(r.state)).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("small tangent offsets fall back to the semitrivial root") {
  // Newton on a v - k v^2 sends guesses below half the nonzero root to v = 0.
  const DomainGeometry g = unit_square(24);
  const ModelParams p = standard_params(0.9);
  for (double s : {0.05, 0.1}) {
    const NewtonResult r = newton_solve(tangent_guess(p, g, s), p, {}, g);
    CHECK(r.state.v.values.lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((r.state.u.values.array() - p.lambda).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("quadratic convergence tail") {
  const DomainGeometry g = unit_square(24);
  const ModelParams p = standard_params(0.9);
  const NewtonResult r = newton_solve(tangent_guess(p, g, 0.5), p, {}, g);
  const auto& h = r.residual_history;
  REQUIRE(h.size() >= 3);
  int checked = 0;
  for (std::size_t k = 1; k < h.size(); ++k) {
    if (h[k - 1] < 1e-3 && h[k - 1] > 1e-9) {
      CHECK(h[k] <= 50.0 * h[k - 1] * h[k - 1]);
      ++checked;
    }
  }
  CHECK(checked >= 1);
}

TEST_CASE("kernel function without refuge is constant") {
  const DomainGeometry g = unit_square(16, RefugeShape::empty());
  const KernelTangent k = solve_kernel_function(standard_params(), g);
  CHECK((k.alpha.values.array() - 0.5).abs().maxCoeff() <= 1e-12);
  CHECK(k.beta == 1.0);
}

TEST_CASE("kernel function with a refuge") {
  const DomainGeometry g = unit_square(32);
  const ModelParams p = standard_params();
  const KernelTangent k = solve_kernel_function(p, g);
  const Eigen::VectorXd& a = k.alpha.values;
  CHECK(a.minCoeff() > 0.0);
  CHECK(a.maxCoeff() < 0.5);

  Eigen::Index imax = 0, imin = 0;
  a.maxCoeff(&imax);
  a.minCoeff(&imin);
  CHECK(g.in_omega1(static_cast<int>(imax)));
  CHECK_FALSE(g.in_omega1(static_cast<int>(imin)));

  const double h2 = g.grid().cell_area();
  CHECK(std::abs(a.sum() * h2 - 0.5 * g.area_omega1()) <= 1e-8);

  SUBCASE("mean identity for other parameters") {
    ModelParams q = p;
    q.b = 2.5;
    q.m = 0.3;
    q.lambda = 1.7;
    const KernelTangent kq = solve_kernel_function(q, g);
    CHECK(std::abs(kq.alpha.values.sum() * h2 - q.b * g.area_omega1() / (1 + q.m * q.lambda)) <= 1e-8);
  }

  SUBCASE("independent of mu") {
    ModelParams q = p;
    q.mu = 3.0;
    CHECK((solve_kernel_function(q, g).alpha.values - a).lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("solves the Helmholtz problem") {
    const Eigen::VectorXd lhs = a - g.laplacian(Region::Omega) * a;
    const ScalarField b = attack_rate_field(g, p.b);
    CHECK((lhs - b.values / (1 + p.m * p.lambda)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }

  SUBCASE("packed direction") {
    CHECK(k.direction.size() == unknown_count(g));
    CHECK((k.direction.head(g.cell_count()) + a).norm() == 0.0);
    CHECK((k.direction.tail(g.omega1_count()).array() == 1.0).all());
    CHECK(k.normalized.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("kernel direction annihilated by the Jacobian at the threshold") {
  const DomainGeometry g = unit_square(32);
  ModelParams p = standard_params();
  p.mu = p.mu_threshold();
  const KernelTangent k = solve_kernel_function(p, g);
  const SparseOperator J = assemble_jacobian(p, semitrivial_state(p, g), g);
  CHECK((J * k.direction).lpNorm<Eigen::Infinity>() <= 1e-8 * k.direction.lpNorm<Eigen::Infinity>());
}

TEST_CASE("singular Jacobian at the threshold") {
  const DomainGeometry g = unit_square(16);
  ModelParams p = standard_params();
  p.mu = p.mu_threshold();
  const SparseOperator J = assemble_jacobian(p, semitrivial_state(p, g), g);
  // constants in the v rows are outside the range of the singular v-block
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknown_count(g));
  rhs.tail(g.omega1_count()).setOnes();
  try {
    solve_sparse(J, rhs, Errc::SingularJacobian);
    FAIL("expected SingularJacobian");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingularJacobian);
  }
  p.mu *= 1.01;
  CHECK_NOTHROW(solve_sparse(assemble_jacobian(p, semitrivial_state(p, g), g), rhs, Errc::SingularJacobian));
}

TEST_CASE("no convergence within the iteration cap") {
  const DomainGeometry g = unit_square(16);
  const ModelParams p = standard_params(0.9);
  NewtonConfig cfg;
  cfg.max_iter = 1;
  try {
    newton_solve(tangent_guess(p, g, 0.1), p, cfg, g);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoConvergence);
  }
}
