#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include "refugia/error.hpp"
#include "refugia/operators.hpp"
#include "support.hpp"

using namespace refugia;
using refugia::test::smooth_state;
using refugia::test::standard_params;
using refugia::test::unit_square;

namespace {

const double kPi = std::acos(-1.0);

ScalarField sample(const DomainGeometry& g, Region r, const std::function<double(double, double)>& f) {
  ScalarField out{r, Eigen::VectorXd(g.region_size(r))};
  for (int k = 0; k < g.region_size(r); ++k) {
    const int c = g.region_cell(r, k);
    out[k] = f(g.cell_x(c), g.cell_y(c));
  }
  return out;
}

double max_error(const ScalarField& a, const ScalarField& b) { return (a.values - b.values).lpNorm<Eigen::Infinity>(); }

double observed_order(const std::vector<double>& errs) {
  double worst = INFINITY;
  for (std::size_t k = 1; k < errs.size(); ++k) worst = std::min(worst, std::log2(errs[k - 1] / errs[k]));
  return worst;
}

// Independent pointwise kinetics.
double kinetics_u(const ModelParams& p, double u, double v, double bx) {
  return p.lambda * u - u * u - bx * u * v / (1.0 + p.m * u);
}
double kinetics_v(const ModelParams& p, double u, double v) { return -p.mu * v + p.c * u * v / (1.0 + p.m * u); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::IoError;
}

}  // namespace

TEST_CASE("constants are annihilated") {
  const DomainGeometry g = unit_square(24);
  const ScalarField u{Region::Omega, Eigen::VectorXd::Constant(g.cell_count(), 3.7)};
  const ScalarField v{Region::Omega1, Eigen::VectorXd::Constant(g.omega1_count(), 3.7)};
  CHECK(laplacian_neumann(u, g).values.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(laplacian_neumann(v, g).values.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(nonlinear_diffusion(u, g).values.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("laplacian of cos(pi x) converges at second order") {
  std::vector<double> errs;
  for (int n : {16, 32, 64, 128}) {
    const DomainGeometry g = unit_square(n, RefugeShape::empty());
    const auto f = sample(g, Region::Omega, [](double x, double) { return std::cos(kPi * x); });
    const auto exact = sample(g, Region::Omega, [](double x, double) { return -kPi * kPi * std::cos(kPi * x); });
    errs.push_back(max_error(laplacian_neumann(f, g), exact));
  }
  CHECK(errs[2] <= 1e-2);
  CHECK(observed_order(errs) >= 1.9);
}

TEST_CASE("smallest nonzero eigenvalue of -Lap is pi^2 up to O(h^2)") {
  const int n = 16;
  const DomainGeometry g = unit_square(n, RefugeShape::empty());
  const Eigen::MatrixXd A = -Eigen::MatrixXd(g.laplacian(Region::Omega));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXd ev = es.eigenvalues();
  CHECK(std::abs(ev[0]) < 1e-10);
  const double h = 1.0 / n;
  const double discrete = 4.0 / (h * h) * std::pow(std::sin(kPi * h / 2), 2);
  CHECK(ev[1] == doctest::Approx(discrete).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(discrete).epsilon(1e-12));  // x and y modes
  CHECK(std::abs(ev[1] - kPi * kPi) <= kPi * kPi * kPi * kPi * h * h / 12 * 1.01);
}

TEST_CASE("nonlinear diffusion converges at second order") {
  std::vector<double> errs_1d, errs_2d;
  for (int n : {16, 32, 64, 128}) {
    const DomainGeometry g = unit_square(n, RefugeShape::empty());
    {
      const auto u = sample(g, Region::Omega, [](double x, double) { return 2.0 + std::cos(kPi * x); });
      const auto exact = sample(g, Region::Omega, [](double x, double) {
        const double u = 2 + std::cos(kPi * x), du = -kPi * std::sin(kPi * x), d2u = -kPi * kPi * std::cos(kPi * x);
        return du * du + u * d2u;
      });
      errs_1d.push_back(max_error(nonlinear_diffusion(u, g), exact));
    }
    {
      const auto u = sample(g, Region::Omega,
                            [](double x, double y) { return 2.0 + std::cos(kPi * x) * std::cos(2 * kPi * y); });
      const auto exact = sample(g, Region::Omega, [](double x, double y) {
        const double cx = std::cos(kPi * x), sx = std::sin(kPi * x), cy = std::cos(2 * kPi * y),
                     sy = std::sin(2 * kPi * y);
        const double u = 2 + cx * cy;
        const double ux = -kPi * sx * cy, uy = -2 * kPi * cx * sy;
        const double lap = -kPi * kPi * cx * cy - 4 * kPi * kPi * cx * cy;
        return ux * ux + uy * uy + u * lap;
      });
      errs_2d.push_back(max_error(nonlinear_diffusion(u, g), exact));
    }
  }
  CHECK(observed_order(errs_1d) >= 1.9);
  CHECK(observed_order(errs_2d) >= 1.9);
}

TEST_CASE("nonlinear diffusion equals half the Laplacian of u squared") {
  const DomainGeometry g = unit_square(24);
  std::mt19937_64 rng(11);
  const SystemState s = smooth_state(g, rng);
  ScalarField u2 = s.u;
  u2.values = s.u.values.array().square();
  const ScalarField half = laplacian_neumann(u2, g);
  const ScalarField nd = nonlinear_diffusion(s.u, g);
  CHECK(max_error(nd, ScalarField{Region::Omega, 0.5 * half.values}) <= 1e-10 * half.values.lpNorm<Eigen::Infinity>());
}

TEST_CASE("discrete conservation") {
  const DomainGeometry g = unit_square(24);
  std::mt19937_64 rng(3);
  const SystemState s = smooth_state(g, rng);
  const double scale_u = nonlinear_diffusion(s.u, g).values.cwiseAbs().sum();
  CHECK(std::abs(nonlinear_diffusion(s.u, g).values.sum()) <= 1e-12 * scale_u);
  CHECK(std::abs(laplacian_neumann(s.u, g).values.sum()) <= 1e-12 * laplacian_neumann(s.u, g).values.cwiseAbs().sum());
  CHECK(std::abs(laplacian_neumann(s.v, g).values.sum()) <= 1e-12 * laplacian_neumann(s.v, g).values.cwiseAbs().sum());
}

TEST_CASE("negative prey tolerance and region checks") {
  const DomainGeometry g = unit_square(16);
  ScalarField u{Region::Omega, Eigen::VectorXd::Ones(g.cell_count())};
  u[5] = -1e-13;
  CHECK_NOTHROW(nonlinear_diffusion(u, g));
  u[5] = -1e-10;
  CHECK(code_of([&] { nonlinear_diffusion(u, g); }) == Errc::NegativePrey);

  const ScalarField v{Region::Omega1, Eigen::VectorXd::Ones(g.omega1_count())};
  CHECK(code_of([&] { nonlinear_diffusion(v, g); }) == Errc::RegionMismatch);
  const ScalarField short_field{Region::Omega, Eigen::VectorXd::Ones(10)};
  CHECK(code_of([&] { laplacian_neumann(short_field, g); }) == Errc::RegionMismatch);
  SystemState swapped = uniform_state(g, 1.0, 1.0);
  std::swap(swapped.u, swapped.v);
  CHECK(code_of([&] { residual_steady(standard_params(), swapped, g); }) == Errc::RegionMismatch);
}

TEST_CASE("reaction terms") {
  const DomainGeometry g = unit_square(16);
  ModelParams p = standard_params(1.0);

  SUBCASE("semitrivial and trivial states are rest points of the kinetics") {
    for (double lambda : {1.0, 2.5}) {
      p.lambda = lambda;
      auto [fu, fv] = reaction_terms(p, semitrivial_state(p, g), g);
      CHECK(fu.values.lpNorm<Eigen::Infinity>() == 0.0);
      CHECK(fv.values.lpNorm<Eigen::Infinity>() == 0.0);
      auto [gu, gv] = reaction_terms(p, uniform_state(g, 0.0, 0.0), g);
      CHECK(gu.values.lpNorm<Eigen::Infinity>() == 0.0);
      CHECK(gv.values.lpNorm<Eigen::Infinity>() == 0.0);
    }
  }

  SUBCASE("hand example on a predator cell") {
    auto [fu, fv] = reaction_terms(p, uniform_state(g, 1.0, 1.0), g);
    const int cell = g.cell_index(1, 1);
    CHECK(fu[cell] == doctest::Approx(-0.5));
    CHECK(kinetics_u(p, 1.0, 1.0, 1.0) == doctest::Approx(-0.5));
    CHECK(fv[g.omega1_index(cell)] == doctest::Approx(0.0));
    CHECK(kinetics_v(p, 1.0, 1.0) == doctest::Approx(0.0));
    // inside the refuge only the logistic term remains
    CHECK(fu[g.cell_index(8, 8)] == 0.0);
  }

  SUBCASE("agrees with an independent pointwise evaluation") {
    std::mt19937_64 rng(5);
    const SystemState s = smooth_state(g, rng);
    p.mu = 0.7;
    auto [fu, fv] = reaction_terms(p, s, g);
    for (int k = 0; k < g.cell_count(); ++k) {
      const int j = g.omega1_index(k);
      const double v = j >= 0 ? s.v[j] : 0.0;
      const double bx = j >= 0 ? p.b : 0.0;
      CHECK(fu[k] == doctest::Approx(kinetics_u(p, s.u[k], v, bx)).epsilon(1e-14));
      if (j >= 0) CHECK(fv[j] == doctest::Approx(kinetics_v(p, s.u[k], v)).epsilon(1e-14));
    }
  }
}

TEST_CASE("steady residual") {
  const DomainGeometry g = unit_square(24);
  for (double mu : {0.5, 1.0, 1.7}) {
    ModelParams p = standard_params(mu);
    p.lambda = 1.3;
    CHECK(residual_steady(p, semitrivial_state(p, g), g).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK(residual_steady(p, uniform_state(g, 0.0, 0.0), g).lpNorm<Eigen::Infinity>() == 0.0);
  }

  std::mt19937_64 rng(17);
  const ModelParams p = standard_params(0.9);
  for (int trial = 0; trial < 3; ++trial) {
    const SystemState s = smooth_state(g, rng);
    const Eigen::VectorXd r = residual_steady(p, s, g);
    Eigen::VectorXd expected(r.size());
    ScalarField u2 = s.u;
    u2.values = s.u.values.array().square();
    const Eigen::VectorXd diff_u = 0.5 * (g.laplacian(Region::Omega) * u2.values);
    const Eigen::VectorXd diff_v = g.laplacian(Region::Omega1) * s.v.values;
    for (int k = 0; k < g.cell_count(); ++k) {
      const int j = g.omega1_index(k);
      expected[k] = diff_u[k] + kinetics_u(p, s.u[k], j >= 0 ? s.v[j] : 0.0, j >= 0 ? p.b : 0.0);
    }
    for (int j = 0; j < g.omega1_count(); ++j) {
      expected[g.cell_count() + j] = diff_v[j] + kinetics_v(p, s.u[g.omega1_cell(j)], s.v[j]);
    }
    CHECK((r - expected).lpNorm<Eigen::Infinity>() <= 1e-11 * expected.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("transient right-hand side") {
  const DomainGeometry g = unit_square(16);
  ModelParams p = standard_params(1.2);

  p.r = 3.0;
  p.lambda = 2.0;
  const auto rest = rhs_transient(p, semitrivial_state(p, g), g);
  CHECK(rest.u.values.lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK(rest.v.values.lpNorm<Eigen::Infinity>() == 0.0);

  const auto half = rhs_transient(p, uniform_state(g, p.lambda / 2, 0.0), g);
  CHECK((half.u.values.array() - p.r * p.lambda / 4).abs().maxCoeff() <= 1e-14);

  std::mt19937_64 rng(23);
  const SystemState s = smooth_state(g, rng);
  for (double lambda : {1.0, 1.7}) {
    ModelParams q = standard_params(0.8);
    q.lambda = lambda;
    q.r = lambda;  // r u (1 - u/lambda) = lambda u - u^2
    const auto d = rhs_transient(q, s, g);
    Eigen::VectorXd packed(unknown_count(g));
    packed << d.u.values, d.v.values;
    CHECK((packed - residual_steady(q, s, g)).lpNorm<Eigen::Infinity>() <= 1e-13);
  }
}

TEST_CASE("jacobian structure at the semitrivial state") {
  const DomainGeometry g = unit_square(16);
  const ModelParams p = standard_params(1.2);
  const Eigen::MatrixXd J(assemble_jacobian(p, semitrivial_state(p, g), g));
  const int nu = g.cell_count(), nv = g.omega1_count();
  CHECK(J.bottomLeftCorner(nv, nu).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd ones_applied = J.topLeftCorner(nu, nu) * Eigen::VectorXd::Ones(nu);
  CHECK((ones_applied.array() + p.lambda).abs().maxCoeff() <= 1e-13);

  const Eigen::MatrixXd L = Eigen::MatrixXd(g.laplacian(Region::Omega));
  const Eigen::MatrixXd L1 = Eigen::MatrixXd(g.laplacian(Region::Omega1));
  CHECK((J.topLeftCorner(nu, nu) - p.lambda * (L - Eigen::MatrixXd::Identity(nu, nu))).cwiseAbs().maxCoeff() <=
        1e-12);
  const double shift = p.c * p.lambda / (1 + p.m * p.lambda) - p.mu;
  CHECK((J.bottomRightCorner(nv, nv) - (L1 + shift * Eigen::MatrixXd::Identity(nv, nv))).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("jacobian matches central differences") {
  const DomainGeometry g = unit_square(24);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  const ModelParams p = standard_params(0.9);
  for (int trial = 0; trial < 4; ++trial) {
    const SystemState s = smooth_state(g, rng);
    const SparseOperator J = assemble_jacobian(p, s, g);
    Eigen::VectorXd d(unknown_count(g));
    for (auto& x : d) x = normal(rng);
    const double eps = 1e-6;
    const Eigen::VectorXd x = pack(s);
    const Eigen::VectorXd fd = (residual_steady(p, unpack(x + eps * d, g), g) -
                                residual_steady(p, unpack(x - eps * d, g), g)) /
                               (2 * eps);
    const Eigen::VectorXd jd = J * d;
    CHECK((fd - jd).norm() <= 1e-6 * jd.norm());
  }
}

TEST_CASE("jacobian matches forward-mode automatic differentiation") {
  using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;
  const DomainGeometry g = unit_square(8);
  std::mt19937_64 rng(31);
  const SystemState s = smooth_state(g, rng);
  const ModelParams p = standard_params(1.1);
  const Eigen::Index n = unknown_count(g);

  BasicState<AD> ad;
  ad.u.values.resize(g.cell_count());
  ad.v.values.resize(g.omega1_count());
  for (int k = 0; k < g.cell_count(); ++k) ad.u[k] = AD(s.u[k], n, k);
  for (int k = 0; k < g.omega1_count(); ++k) ad.v[k] = AD(s.v[k], n, g.cell_count() + k);
  const VectorX<AD> r = residual_steady(p, ad, g);

  Eigen::MatrixXd Jad(n, n);
  for (Eigen::Index row = 0; row < n; ++row) Jad.row(row) = r[row].derivatives().transpose();
  const Eigen::MatrixXd J(assemble_jacobian(p, s, g));
  CHECK((J - Jad).cwiseAbs().maxCoeff() <= 1e-12 * Jad.cwiseAbs().maxCoeff());
}

TEST_CASE("block-triangular spectrum at v = 0") {
  const DomainGeometry g = unit_square(16);
  std::mt19937_64 rng(37);
  SystemState s = smooth_state(g, rng);
  s.v.values.setZero();
  const ModelParams p = standard_params(1.1);
  const Eigen::MatrixXd J(assemble_jacobian(p, s, g));
  const int nu = g.cell_count(), nv = g.omega1_count();

  auto spectrum = [](const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + A.rows());
    return ev;
  };
  const auto full = spectrum(J);
  auto blocks = spectrum(J.topLeftCorner(nu, nu));
  const auto vb = spectrum(J.bottomRightCorner(nv, nv));
  blocks.insert(blocks.end(), vb.begin(), vb.end());
  REQUIRE(full.size() == blocks.size());

  const double scale = J.cwiseAbs().rowwise().sum().maxCoeff();
  double worst = 0.0;
  for (const auto& z : full) {
    double best = INFINITY;
    for (const auto& w : blocks) best = std::min(best, std::abs(z - w));
    worst = std::max(worst, best);
  }
  CHECK(worst <= 1e-9 * scale);
}

TEST_CASE("coordinate dump round-trips") {
  const DomainGeometry g = unit_square(8);
  std::mt19937_64 rng(41);
  const SystemState s = smooth_state(g, rng);
  const SparseOperator J = assemble_jacobian(standard_params(), s, g);
  std::ostringstream out;
  write_coo(J, out);
  std::istringstream in(out.str());
  long rows = 0, cols = 0, nnz = 0;
  in >> rows >> cols >> nnz;
  CHECK(rows == J.rows());
  CHECK(cols == J.cols());
  CHECK(nnz == J.nonZeros());
  Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(rows, cols);
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0;
    in >> i >> j >> v;
    rebuilt(i, j) = v;
  }
  CHECK((rebuilt - Eigen::MatrixXd(J)).cwiseAbs().maxCoeff() == 0.0);
}
