#pragma once

#include <iosfwd>
#include <string>
#include <utility>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "refugia/error.hpp"
#include "refugia/geometry.hpp"

namespace refugia {

/// Values in [-kNegativeTolerance, 0) are rounding noise and get clamped to 0;
/// anything below is an error.
inline constexpr double kNegativeTolerance = 1e-12;

struct ModelParams {
  double lambda = 1.0;  // prey carrying capacity
  double m = 1.0;       // handling-time coefficient
  double c = 2.0;       // conversion coefficient
  double b = 1.0;       // attack rate outside the refuge
  double mu = 1.0;      // predator mortality
  double D_u = 1.0;
  double D_v = 1.0;
  double r = 1.0;

  /// Predator mortality at which the semitrivial state loses stability.
  double mu_threshold() const { return c * lambda / (1.0 + m * lambda); }
  /// Steady-state ranges: everything positive except m >= 0.
  void validate() const;
  /// Transient runs also admit zero kinetics (r, b, c, mu >= 0) for control experiments.
  void validate_transient() const;

  bool operator==(const ModelParams&) const = default;
};

/// Prey u on Omega and predator v on Omega1 (v is identically 0 in the refuge).
template <typename Scalar>
struct BasicState {
  Field<Scalar> u{Region::Omega, {}};
  Field<Scalar> v{Region::Omega1, {}};
};

using SystemState = BasicState<double>;

/// Unknown ordering: u over Omega (row-major), then v over Omega1 (row-major).
Eigen::VectorXd pack(const SystemState& s);
SystemState unpack(const Eigen::Ref<const Eigen::VectorXd>& x, const DomainGeometry& geom);
SystemState uniform_state(const DomainGeometry& geom, double u, double v);
/// (lambda, 0): prey at carrying capacity, no predators.
SystemState semitrivial_state(const ModelParams& params, const DomainGeometry& geom);
inline Eigen::Index unknown_count(const DomainGeometry& geom) {
  return geom.cell_count() + geom.omega1_count();
}

template <typename Scalar>
void require_region(const Field<Scalar>& f, Region expected, const DomainGeometry& geom, const char* name) {
  if (f.region != expected || f.size() != geom.region_size(expected)) {
    throw Error(Errc::RegionMismatch, std::string(name) + " does not match the geometry's " +
                                          (expected == Region::Omega ? "Omega" : "Omega1") + " cells");
  }
}

template <typename Scalar>
VectorX<Scalar> clamp_density(const VectorX<Scalar>& x, const char* name) {
  VectorX<Scalar> out = x;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    if (out[k] < Scalar(0)) {
      if (out[k] < Scalar(-kNegativeTolerance)) {
        throw Error(Errc::NegativePrey, std::string(name) + " is negative at index " + std::to_string(k));
      }
      out[k] = Scalar(0);
    }
  }
  return out;
}

/// 5-point Laplacian on the field's own region with zero-flux faces.
template <typename Scalar>
Field<Scalar> laplacian_neumann(const Field<Scalar>& f, const DomainGeometry& geom) {
  require_region(f, f.region, geom, "field");
  Field<Scalar> out{f.region, VectorX<Scalar>::Zero(f.size())};
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    Scalar acc(0);
    for (int face = 0; face < kFaceCount; ++face) {
      const int nb = geom.neighbor(f.region, static_cast<int>(k), static_cast<Face>(face));
      if (nb < 0) continue;
      acc += Scalar(geom.face_weight(static_cast<Face>(face))) * (f[nb] - f[k]);
    }
    out[k] = acc;
  }
  return out;
}

/// div(u grad u) in flux form: face flux = arithmetic face mean of u times the
/// centered face gradient.
template <typename Scalar>
Field<Scalar> nonlinear_diffusion(const Field<Scalar>& u_in, const DomainGeometry& geom) {
  require_region(u_in, Region::Omega, geom, "prey field");
  const VectorX<Scalar> u = clamp_density<Scalar>(u_in.values, "prey density");
  Field<Scalar> out{Region::Omega, VectorX<Scalar>::Zero(u.size())};
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    Scalar acc(0);
    for (int face = 0; face < kFaceCount; ++face) {
      const int nb = geom.neighbor(Region::Omega, static_cast<int>(k), static_cast<Face>(face));
      if (nb < 0) continue;
      const Scalar face_u = Scalar(0.5) * (u[k] + u[nb]);
      acc += Scalar(geom.face_weight(static_cast<Face>(face))) * face_u * (u[nb] - u[k]);
    }
    out[k] = acc;
  }
  return out;
}

/// Pointwise kinetics of the steady system: (lambda u - u^2 - b(x) u v/(1+m u),
/// -mu v + c u v/(1+m u)).
template <typename Scalar>
std::pair<Field<Scalar>, Field<Scalar>> reaction_terms(const ModelParams& p, const BasicState<Scalar>& s,
                                                       const DomainGeometry& geom) {
  require_region(s.u, Region::Omega, geom, "prey field");
  require_region(s.v, Region::Omega1, geom, "predator field");
  const VectorX<Scalar> u = clamp_density<Scalar>(s.u.values, "prey density");
  const VectorX<Scalar> v = clamp_density<Scalar>(s.v.values, "predator density");
  const Scalar lambda(p.lambda), m(p.m), c(p.c), b(p.b), mu(p.mu);

  Field<Scalar> fu{Region::Omega, VectorX<Scalar>(u.size())};
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    fu[k] = lambda * u[k] - u[k] * u[k];
  }
  Field<Scalar> fv{Region::Omega1, VectorX<Scalar>(v.size())};
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const int cell = geom.omega1_cell(static_cast<int>(k));
    const Scalar holling = u[cell] * v[k] / (Scalar(1) + m * u[cell]);
    fu[cell] -= b * holling;
    fv[k] = -mu * v[k] + c * holling;
  }
  return {std::move(fu), std::move(fv)};
}

/// Steady residual, concatenated as [u rows; v rows].
template <typename Scalar>
VectorX<Scalar> residual_steady(const ModelParams& p, const BasicState<Scalar>& s, const DomainGeometry& geom) {
  auto [fu, fv] = reaction_terms(p, s, geom);
  const Field<Scalar> diff_u = nonlinear_diffusion(s.u, geom);
  const Field<Scalar> diff_v = laplacian_neumann(s.v, geom);
  VectorX<Scalar> out(fu.size() + fv.size());
  out.head(fu.size()) = diff_u.values + fu.values;
  out.tail(fv.size()) = diff_v.values + fv.values;
  return out;
}

/// Time derivative of the dimensional model with logistic growth r u (1 - u/lambda).
template <typename Scalar>
BasicState<Scalar> rhs_transient(const ModelParams& p, const BasicState<Scalar>& s, const DomainGeometry& geom) {
  require_region(s.u, Region::Omega, geom, "prey field");
  require_region(s.v, Region::Omega1, geom, "predator field");
  const VectorX<Scalar> u = clamp_density<Scalar>(s.u.values, "prey density");
  const VectorX<Scalar> v = clamp_density<Scalar>(s.v.values, "predator density");
  const Scalar lambda(p.lambda), m(p.m), c(p.c), b(p.b), mu(p.mu), r(p.r);

  BasicState<Scalar> out;
  out.u = nonlinear_diffusion(s.u, geom);
  out.u.values *= Scalar(p.D_u);
  out.v = laplacian_neumann(s.v, geom);
  out.v.values *= Scalar(p.D_v);
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    out.u[k] += r * u[k] * (Scalar(1) - u[k] / lambda);
  }
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const int cell = geom.omega1_cell(static_cast<int>(k));
    const Scalar holling = u[cell] * v[k] / (Scalar(1) + m * u[cell]);
    out.u[cell] -= b * holling;
    out.v[k] += -mu * v[k] + c * holling;
  }
  return out;
}

using SparseOperator = Eigen::SparseMatrix<double>;

/// Analytic Jacobian of residual_steady with respect to the packed unknowns.
SparseOperator assemble_jacobian(const ModelParams& p, const SystemState& s, const DomainGeometry& geom);

/// d(residual_steady)/d(mu) = [0; -v].
Eigen::VectorXd residual_mu_derivative(const SystemState& s, const DomainGeometry& geom);

/// Coordinate text dump: header "rows cols nnz", then "row col value" lines.
void write_coo(const SparseOperator& op, std::ostream& out);

}  // namespace refugia
