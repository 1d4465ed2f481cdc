#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "refugia/geometry.hpp"
#include "refugia/operators.hpp"
#include "refugia/spectral.hpp"
#include "refugia/steady.hpp"

namespace refugia {

enum class BranchLabel { Semitrivial, Nontrivial };
std::string_view to_string(BranchLabel label);

struct BranchPoint {
  double mu = 0.0;
  SystemState state;
  double s = 0.0;          // arclength from the bifurcation point
  double amplitude = 0.0;  // mean of v over Omega1
  double gamma = 0.0;      // leading eigenvalue (real part)
  bool gamma_complex = false;
  Stability flag = Stability::Marginal;
  double residual_norm = 0.0;
};

enum class Termination { Completed, AmplitudeCap, LeftPhysicalRegion, Stalled };
std::string_view to_string(Termination t);

struct Branch {
  BranchLabel label = BranchLabel::Semitrivial;
  std::vector<BranchPoint> points;
  ModelParams params;  // mu is per point
  Termination termination = Termination::Completed;
};

struct ContinuationConfig {
  NewtonConfig newton{1e-10, 12, 0.5, 1.0 / 64.0};
  EigenOptions eigen;
  double delta_switch_factor = 1e-2;  // initial mu offset below mu* at branch switching
  double min_step_factor = 1.0 / 64.0;
  double max_amplitude = std::numeric_limits<double>::infinity();
};

/// Packed state plus the parameter.
struct ExtendedVector {
  Eigen::VectorXd x;
  double mu = 0.0;
};

/// Mean predator density over Omega1; the branch parameter proxy.
double amplitude(const SystemState& s, const DomainGeometry& geom);

/// Cell-area weighted inner product on packed states (the discrete L2 product).
double weighted_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const DomainGeometry& geom);
double extended_norm(const ExtendedVector& v, const DomainGeometry& geom);

/// Residual, leading eigenvalue and stability of a steady state.
BranchPoint evaluate_point(double mu, SystemState state, const ModelParams& params, const DomainGeometry& geom,
                           const EigenOptions& eigen = {});

/// Samples (lambda, 0) at n_points equally spaced mu values.
Branch trace_semitrivial(const ModelParams& base, double mu_min, double mu_max, int n_points,
                         const DomainGeometry& geom, const EigenOptions& eigen = {});

/// Root of the semitrivial leading eigenvalue in mu, bracketed by a sign change
/// along the branch, refined to |gamma| <= 1e-10. Throws NoCrossing.
double detect_transcritical(const Branch& semitrivial, const DomainGeometry& geom, const EigenOptions& eigen = {});

/// Steps off the semitrivial line along (-alpha, 1): predictor at mu* - delta,
/// corrected with mu free and the amplitude pinned to s0.
BranchPoint branch_switch(double mu_star, const ModelParams& params, const DomainGeometry& geom, double s0,
                          const ContinuationConfig& cfg = {});

/// Pseudo-arclength continuation: secant predictor, Newton on the bordered
/// system, step halving down to ds * min_step_factor. The first tangent solves
/// the bordered system oriented by `direction`. Throws ContinuationStalled
/// when not a single step can be taken.
Branch continue_branch(const BranchPoint& start, const ExtendedVector& direction, int n_steps, double ds,
                       BranchLabel label, const ModelParams& params, const DomainGeometry& geom,
                       const ContinuationConfig& cfg = {});

struct SignAuditRow {
  int index = 0;
  double mu = 0.0;
  double gamma = 0.0;
  bool pass = false;
};

struct SignAudit {
  std::vector<SignAuditRow> rows;  // audited points only
  bool applicable = true;
  std::string warning;
  int passed() const;
  bool all_pass() const { return passed() == static_cast<int>(rows.size()); }
};

inline constexpr double kAuditMuBand = 1e-4;

/// sign(mu - mu*) == sign(gamma) at every point outside the marginality bands.
SignAudit verify_sign_relation(const Branch& branch, double mu_star);

enum class AuditStatus { Passed, Failed, NotRun };
std::string_view to_string(AuditStatus s);

struct ExchangeCell {
  int stable = 0;
  int unstable = 0;
  int marginal = 0;
  int total() const { return stable + unstable + marginal; }
};

struct BifurcationReport {
  double mu_star_detected = 0.0;
  double mu_star_analytic = 0.0;
  double relative_gap = 0.0;
  double area_omega = 0.0;
  double area_omega1 = 0.0;
  bool refuge_empty = false;
  std::optional<double> tangent_cosine;  // smallest-amplitude point vs (-alpha, 1)
  std::optional<double> tangent_angle_deg;
  std::optional<int> slope_sign;  // sign of mu(s) - mu* as s -> 0+
  bool mu_decreasing_initially = false;
  SignAudit audit;
  AuditStatus audit_status = AuditStatus::NotRun;
  ExchangeCell semitrivial_below, semitrivial_above, nontrivial_below, nontrivial_above;
  bool both_stable_window = false;
  bool exchange_ok = false;
  std::vector<std::string> notes;
};

BifurcationReport build_report(const Branch& semitrivial, const Branch* nontrivial, double mu_star,
                               const ModelParams& params, const DomainGeometry& geom);

/// Cosine between ((lambda - u)/a, v/a) and (alpha, 1), a the amplitude.
double tangent_cosine(const SystemState& s, const ModelParams& params, const KernelTangent& kernel,
                      const DomainGeometry& geom);

}  // namespace refugia
