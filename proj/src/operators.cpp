#include "refugia/operators.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

namespace refugia {

void ModelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::InvalidParams, what);
  };
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
  require(m >= 0.0 && std::isfinite(m), "m must be non-negative");
  require(c > 0.0 && std::isfinite(c), "c must be positive");
  require(b > 0.0 && std::isfinite(b), "b must be positive");
  require(mu > 0.0 && std::isfinite(mu), "mu must be positive");
  require(D_u > 0.0 && D_v > 0.0 && r > 0.0, "D_u, D_v and r must be positive");
}

void ModelParams::validate_transient() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::InvalidParams, what);
  };
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
  require(D_u > 0.0 && D_v > 0.0, "diffusion coefficients must be positive");
  require(m >= 0.0 && c >= 0.0 && b >= 0.0 && mu >= 0.0 && r >= 0.0, "kinetic coefficients must be non-negative");
}

Eigen::VectorXd pack(const SystemState& s) {
  Eigen::VectorXd x(s.u.size() + s.v.size());
  x << s.u.values, s.v.values;
  return x;
}

SystemState unpack(const Eigen::Ref<const Eigen::VectorXd>& x, const DomainGeometry& geom) {
  const int nu = geom.cell_count(), nv = geom.omega1_count();
  if (x.size() != nu + nv) {
    throw Error(Errc::RegionMismatch, "packed vector length " + std::to_string(x.size()) +
                                          " does not match " + std::to_string(nu + nv) + " unknowns");
  }
  SystemState s;
  s.u = {Region::Omega, x.head(nu)};
  s.v = {Region::Omega1, x.tail(nv)};
  return s;
}

SystemState uniform_state(const DomainGeometry& geom, double u, double v) {
  SystemState s;
  s.u = {Region::Omega, Eigen::VectorXd::Constant(geom.cell_count(), u)};
  s.v = {Region::Omega1, Eigen::VectorXd::Constant(geom.omega1_count(), v)};
  return s;
}

SystemState semitrivial_state(const ModelParams& params, const DomainGeometry& geom) {
  return uniform_state(geom, params.lambda, 0.0);
}

SparseOperator assemble_jacobian(const ModelParams& p, const SystemState& s, const DomainGeometry& geom) {
  require_region(s.u, Region::Omega, geom, "prey field");
  require_region(s.v, Region::Omega1, geom, "predator field");
  const Eigen::VectorXd u = clamp_density<double>(s.u.values, "prey density");
  const Eigen::VectorXd v = clamp_density<double>(s.v.values, "predator density");
  const int nu = geom.cell_count(), nv = geom.omega1_count();

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(6 * nu + 7 * nv));

  // u rows: div(u grad u) = (1/2) L (u^2), so its derivative is L diag(u).
  for (int k = 0; k < nu; ++k) {
    double diag = p.lambda - 2.0 * u[k];
    for (int face = 0; face < kFaceCount; ++face) {
      const int nb = geom.neighbor(Region::Omega, k, static_cast<Face>(face));
      if (nb < 0) continue;
      const double w = geom.face_weight(static_cast<Face>(face));
      t.emplace_back(k, nb, w * u[nb]);
      diag -= w * u[k];
    }
    const int j = geom.omega1_index(k);
    if (j >= 0) {
      const double denom = 1.0 + p.m * u[k];
      diag -= p.b * v[j] / (denom * denom);
      t.emplace_back(k, nu + j, -p.b * u[k] / denom);
    }
    t.emplace_back(k, k, diag);
  }

  for (int j = 0; j < nv; ++j) {
    const int cell = geom.omega1_cell(j);
    const double denom = 1.0 + p.m * u[cell];
    double diag = -p.mu + p.c * u[cell] / denom;
    for (int face = 0; face < kFaceCount; ++face) {
      const int nb = geom.neighbor(Region::Omega1, j, static_cast<Face>(face));
      if (nb < 0) continue;
      const double w = geom.face_weight(static_cast<Face>(face));
      t.emplace_back(nu + j, nu + nb, w);
      diag -= w;
    }
    t.emplace_back(nu + j, nu + j, diag);
    t.emplace_back(nu + j, cell, p.c * v[j] / (denom * denom));
  }

  SparseOperator J(nu + nv, nu + nv);
  J.setFromTriplets(t.begin(), t.end());
  J.makeCompressed();
  return J;
}

Eigen::VectorXd residual_mu_derivative(const SystemState& s, const DomainGeometry& geom) {
  require_region(s.v, Region::Omega1, geom, "predator field");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(s.u.size() + s.v.size());
  d.tail(s.v.size()) = -s.v.values;
  return d;
}

void write_coo(const SparseOperator& op, std::ostream& out) {
  out << op.rows() << ' ' << op.cols() << ' ' << op.nonZeros() << '\n';
  char buf[64];
  for (int col = 0; col < op.outerSize(); ++col) {
    for (SparseOperator::InnerIterator it(op, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
  }
}

}  // namespace refugia
