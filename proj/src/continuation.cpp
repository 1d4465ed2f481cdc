#include "refugia/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "refugia/linear_solve.hpp"

namespace refugia {

namespace {

constexpr double kGammaTolerance = 1e-10;
constexpr double kConstraintTolerance = 1e-12;

double inf_norm(const Eigen::VectorXd& x) { return x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0; }

int sign(double x) { return (x > 0.0) - (x < 0.0); }

ModelParams with_mu(ModelParams p, double mu) {
  p.mu = mu;
  return p;
}

/// [J col; row^T corner] as one sparse matrix.
SparseMatrix border(const SparseMatrix& J, const Eigen::VectorXd& col, const Eigen::VectorXd& row, double corner) {
  const Eigen::Index n = J.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(J.nonZeros() + 2 * n + 1));
  for (int k = 0; k < J.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(J, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (col[i] != 0.0) t.emplace_back(i, n, col[i]);
    if (row[i] != 0.0) t.emplace_back(n, i, row[i]);
  }
  t.emplace_back(n, n, corner);
  SparseMatrix B(n + 1, n + 1);
  B.setFromTriplets(t.begin(), t.end());
  B.makeCompressed();
  return B;
}

Eigen::VectorXd area_weights(const DomainGeometry& geom) {
  return Eigen::VectorXd::Constant(unknown_count(geom), geom.grid().cell_area());
}

/// Linear side condition row . x + corner * mu = rhs.
struct Constraint {
  Eigen::VectorXd row;
  double corner = 0.0;
  double rhs = 0.0;
  double value(const Eigen::VectorXd& x, double mu) const { return row.dot(x) + corner * mu - rhs; }
};

struct Corrected {
  Eigen::VectorXd x;
  double mu = 0.0;
  double residual = 0.0;
};

/// Newton on (F(x, mu), constraint) = 0. Returns nullopt on failure.
std::optional<Corrected> bordered_correct(Eigen::VectorXd x, double mu, const Constraint& con, const ModelParams& base,
                                          const DomainGeometry& geom, const NewtonConfig& cfg) {
  try {
    x = x.cwiseMax(0.0);
    SystemState state = unpack(x, geom);
    Eigen::VectorXd F = residual_steady(with_mu(base, mu), state, geom);
    double g = con.value(x, mu);
    const double g_scale = 1.0 + std::abs(con.rhs);
    auto merit = [&](double f_norm, double g_val) { return f_norm + std::abs(g_val) / g_scale; };
    double current = merit(inf_norm(F), g);

    for (int it = 0; it <= cfg.max_iter; ++it) {
      if (inf_norm(F) <= cfg.tol_residual && std::abs(g) <= kConstraintTolerance * g_scale) {
        return Corrected{std::move(x), mu, inf_norm(F)};
      }
      if (it == cfg.max_iter) break;
      const ModelParams p = with_mu(base, mu);
      const SparseMatrix B = border(assemble_jacobian(p, state, geom), residual_mu_derivative(state, geom), con.row,
                                    con.corner);
      Eigen::VectorXd rhs(x.size() + 1);
      rhs << -F, -g;
      const Eigen::VectorXd step = solve_sparse(B, rhs, Errc::SingularJacobian);

      bool accepted = false;
      for (double lam = 1.0; lam >= cfg.min_step; lam *= cfg.damping) {
        Eigen::VectorXd xt = (x + lam * step.head(x.size())).cwiseMax(0.0);
        const double mut = mu + lam * step[x.size()];
        SystemState st = unpack(xt, geom);
        Eigen::VectorXd Ft = residual_steady(with_mu(base, mut), st, geom);
        const double gt = con.value(xt, mut);
        const double mt = merit(inf_norm(Ft), gt);
        if (std::isfinite(mt) && mt < current) {
          x = std::move(xt);
          mu = mut;
          state = std::move(st);
          F = std::move(Ft);
          g = gt;
          current = mt;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  } catch (const Error&) {
  }
  return std::nullopt;
}

double semitrivial_gamma(const ModelParams& base, double mu, const DomainGeometry& geom, const EigenOptions& eigen) {
  const ModelParams p = with_mu(base, mu);
  return leading_eigenvalue(assemble_jacobian(p, semitrivial_state(p, geom), geom), eigen).value;
}

ExchangeCell& cell_for(BifurcationReport& r, BranchLabel label, bool above) {
  if (label == BranchLabel::Semitrivial) return above ? r.semitrivial_above : r.semitrivial_below;
  return above ? r.nontrivial_above : r.nontrivial_below;
}

void tally(ExchangeCell& cell, Stability flag) {
  switch (flag) {
    case Stability::Stable: ++cell.stable; break;
    case Stability::Unstable: ++cell.unstable; break;
    case Stability::Marginal: ++cell.marginal; break;
  }
}

}  // namespace

std::string_view to_string(BranchLabel label) {
  return label == BranchLabel::Semitrivial ? "SEMITRIVIAL" : "NONTRIVIAL";
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::AmplitudeCap: return "amplitude_cap";
    case Termination::LeftPhysicalRegion: return "left_physical_region";
    case Termination::Stalled: return "stalled";
  }
  return "completed";
}

std::string_view to_string(AuditStatus s) {
  switch (s) {
    case AuditStatus::Passed: return "PASSED";
    case AuditStatus::Failed: return "FAILED";
    case AuditStatus::NotRun: return "NOT_RUN";
  }
  return "NOT_RUN";
}

double amplitude(const SystemState& s, const DomainGeometry& geom) {
  require_region(s.v, Region::Omega1, geom, "predator field");
  return s.v.size() ? s.v.values.mean() : 0.0;
}

double weighted_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const DomainGeometry& geom) {
  return geom.grid().cell_area() * a.dot(b);
}

double extended_norm(const ExtendedVector& v, const DomainGeometry& geom) {
  return std::sqrt(weighted_dot(v.x, v.x, geom) + v.mu * v.mu);
}

BranchPoint evaluate_point(double mu, SystemState state, const ModelParams& params, const DomainGeometry& geom,
                           const EigenOptions& eigen) {
  const ModelParams p = with_mu(params, mu);
  BranchPoint pt;
  pt.mu = mu;
  pt.residual_norm = inf_norm(residual_steady(p, state, geom));
  pt.amplitude = amplitude(state, geom);
  const EigenPair lead = leading_eigenvalue(assemble_jacobian(p, state, geom), eigen);
  pt.gamma = lead.value;
  pt.gamma_complex = lead.complex;
  pt.flag = classify(lead.value);
  pt.state = std::move(state);
  return pt;
}

Branch trace_semitrivial(const ModelParams& base, double mu_min, double mu_max, int n_points,
                         const DomainGeometry& geom, const EigenOptions& eigen) {
  if (!(mu_min > 0.0) || !(mu_max >= mu_min) || n_points < 1) {
    throw Error(Errc::InvalidParams, "semitrivial trace needs 0 < mu_min <= mu_max and n_points >= 1");
  }
  Branch br;
  br.label = BranchLabel::Semitrivial;
  br.params = base;
  for (int k = 0; k < n_points; ++k) {
    const double mu = n_points == 1 ? mu_min : mu_min + (mu_max - mu_min) * k / (n_points - 1);
    const ModelParams p = with_mu(base, mu);
    p.validate();
    BranchPoint pt = evaluate_point(mu, semitrivial_state(p, geom), p, geom, eigen);
    pt.s = std::abs(mu - p.mu_threshold());
    br.points.push_back(std::move(pt));
  }
  return br;
}

double detect_transcritical(const Branch& semitrivial, const DomainGeometry& geom, const EigenOptions& eigen) {
  const auto& pts = semitrivial.points;
  if (semitrivial.label != BranchLabel::Semitrivial) {
    throw Error(Errc::InvalidParams, "transcritical detection runs on the semitrivial branch");
  }
  for (const auto& pt : pts) {
    if (std::abs(pt.gamma) <= kGammaTolerance) return pt.mu;
  }
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = pts[k].mu, b = pts[k + 1].mu;
    double ga = pts[k].gamma, gb = pts[k + 1].gamma;
    if (sign(ga) == sign(gb)) continue;

    // Bisection safeguarded with secant proposals; a secant step that fails to
    // halve the bracket forces a plain bisection next.
    bool force_bisect = false;
    for (int it = 0; it < 200; ++it) {
      double m = 0.5 * (a + b);
      if (!force_bisect) {
        const double secant = a - ga * (b - a) / (gb - ga);
        if (std::isfinite(secant) && std::min(a, b) < secant && secant < std::max(a, b)) m = secant;
      }
      const double width = std::abs(b - a);
      const double gm = semitrivial_gamma(semitrivial.params, m, geom, eigen);
      if (std::abs(gm) <= kGammaTolerance) return m;
      if (sign(gm) == sign(ga)) {
        a = m;
        ga = gm;
      } else {
        b = m;
        gb = gm;
      }
      force_bisect = std::abs(b - a) > 0.5 * width;
      if (std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(a)) return 0.5 * (a + b);
    }
    throw Error(Errc::NoConvergence, "transcritical refinement did not reach |gamma| <= 1e-10");
  }
  throw Error(Errc::NoCrossing, "leading eigenvalue keeps one sign over mu in [" +
                                    std::to_string(pts.empty() ? 0.0 : pts.front().mu) + ", " +
                                    std::to_string(pts.empty() ? 0.0 : pts.back().mu) + "]");
}

BranchPoint branch_switch(double mu_star, const ModelParams& params, const DomainGeometry& geom, double s0,
                          const ContinuationConfig& cfg) {
  if (!(s0 > 0.0) || s0 > 0.1 * params.lambda + 1e-15) {
    throw Error(Errc::InvalidParams, "branch switch amplitude must lie in (0, 0.1 lambda]");
  }
  const KernelTangent kernel = solve_kernel_function(params, geom);
  const Eigen::VectorXd base = pack(semitrivial_state(params, geom));
  const double mu0 = mu_star - cfg.delta_switch_factor * mu_star;

  Constraint pin;
  pin.row = Eigen::VectorXd::Zero(base.size());
  pin.row.tail(geom.omega1_count()).setConstant(1.0 / geom.omega1_count());
  pin.rhs = s0;

  const auto corrected = bordered_correct(base + s0 * kernel.direction, mu0, pin, params, geom, cfg.newton);
  if (!corrected) throw Error(Errc::NoConvergence, "branch-switch corrector failed");

  SystemState state = unpack(corrected->x, geom);
  if (amplitude(state, geom) < s0 / 10.0) {
    throw Error(Errc::FellBackToSemitrivial, "corrected amplitude fell below s0/10");
  }
  BranchPoint pt = evaluate_point(corrected->mu, std::move(state), params, geom, cfg.eigen);
  pt.s = extended_norm({corrected->x - base, corrected->mu - mu_star}, geom);
  return pt;
}

Branch continue_branch(const BranchPoint& start, const ExtendedVector& direction, int n_steps, double ds,
                       BranchLabel label, const ModelParams& params, const DomainGeometry& geom,
                       const ContinuationConfig& cfg) {
  if (!(ds > 0.0) || n_steps < 1) throw Error(Errc::InvalidParams, "continuation needs ds > 0 and n_steps >= 1");
  const Eigen::VectorXd weights = area_weights(geom);

  Branch br;
  br.label = label;
  br.params = params;
  br.points.push_back(start);

  Eigen::VectorXd x = pack(start.state);
  double mu = start.mu;

  // Initial tangent from [J F_mu; d^T W d_mu] t = e_last.
  ExtendedVector tangent;
  try {
    const ModelParams p = with_mu(params, mu);
    const SparseMatrix B = border(assemble_jacobian(p, start.state, geom), residual_mu_derivative(start.state, geom),
                                  direction.x.cwiseProduct(weights), direction.mu);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(x.size() + 1);
    rhs[x.size()] = 1.0;
    const Eigen::VectorXd t = solve_sparse(B, rhs, Errc::SingularJacobian);
    tangent = {t.head(x.size()), t[x.size()]};
  } catch (const Error&) {
    tangent = direction;
  }
  {
    const double nrm = extended_norm(tangent, geom);
    if (!(nrm > 0.0)) throw Error(Errc::InvalidParams, "continuation direction is zero");
    tangent.x /= nrm;
    tangent.mu /= nrm;
  }

  const double min_ds = ds * cfg.min_step_factor;
  double h = ds;
  double s = start.s;
  int accepted = 0;
  while (accepted < n_steps) {
    Constraint arc;
    arc.row = tangent.x.cwiseProduct(weights);
    arc.corner = tangent.mu;
    arc.rhs = arc.row.dot(x) + tangent.mu * mu + h;

    const auto corrected =
        bordered_correct(x + h * tangent.x, mu + h * tangent.mu, arc, params, geom, cfg.newton);
    if (!corrected) {
      h *= 0.5;
      if (h < min_ds) {
        if (accepted == 0) throw Error(Errc::ContinuationStalled, "corrector failed down to ds/64");
        br.termination = Termination::Stalled;
        break;
      }
      continue;
    }

    SystemState state = unpack(corrected->x, geom);
    const double amp = amplitude(state, geom);
    if (label == BranchLabel::Nontrivial && amp <= 0.0) {
      br.termination = Termination::LeftPhysicalRegion;
      break;
    }
    if (amp > cfg.max_amplitude) {
      br.termination = Termination::AmplitudeCap;
      break;
    }

    ExtendedVector secant{corrected->x - x, corrected->mu - mu};
    const double step_len = extended_norm(secant, geom);
    s += step_len;
    BranchPoint pt = evaluate_point(corrected->mu, std::move(state), params, geom, cfg.eigen);
    pt.s = s;
    br.points.push_back(std::move(pt));
    ++accepted;

    if (step_len > 0.0) {
      tangent = {secant.x / step_len, secant.mu / step_len};
    }
    x = corrected->x;
    mu = corrected->mu;
    h = std::min(ds, 2.0 * h);
  }
  return br;
}

int SignAudit::passed() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const SignAuditRow& r) { return r.pass; }));
}

SignAudit verify_sign_relation(const Branch& branch, double mu_star) {
  SignAudit audit;
  if (branch.label == BranchLabel::Semitrivial) {
    audit.applicable = false;
    audit.warning =
        "RegionOfApplicability: the relation describes the nontrivial branch; on the semitrivial line "
        "gamma = mu* - mu, so sign(mu - mu*) = -sign(gamma)";
  } else if (branch.points.size() < 5) {
    audit.warning = "branch has fewer than 5 points";
  }
  for (std::size_t k = 0; k < branch.points.size(); ++k) {
    const auto& pt = branch.points[k];
    if (std::abs(pt.mu - mu_star) <= kAuditMuBand || std::abs(pt.gamma) <= kMarginalBand) continue;
    audit.rows.push_back({static_cast<int>(k), pt.mu, pt.gamma, sign(pt.mu - mu_star) == sign(pt.gamma)});
  }
  return audit;
}

double tangent_cosine(const SystemState& s, const ModelParams& params, const KernelTangent& kernel,
                      const DomainGeometry& geom) {
  Eigen::VectorXd deviation(unknown_count(geom));
  deviation << (Eigen::VectorXd::Constant(geom.cell_count(), params.lambda) - s.u.values), s.v.values;
  Eigen::VectorXd reference(unknown_count(geom));
  reference << kernel.alpha.values, Eigen::VectorXd::Ones(geom.omega1_count());
  const double denom = deviation.norm() * reference.norm();
  return denom > 0.0 ? deviation.dot(reference) / denom : 0.0;
}

BifurcationReport build_report(const Branch& semitrivial, const Branch* nontrivial, double mu_star,
                               const ModelParams& params, const DomainGeometry& geom) {
  BifurcationReport r;
  r.mu_star_detected = mu_star;
  r.mu_star_analytic = params.mu_threshold();
  r.relative_gap = std::abs(mu_star - r.mu_star_analytic) / r.mu_star_analytic;
  r.area_omega = geom.area_omega();
  r.area_omega1 = geom.area_omega1();
  r.refuge_empty = geom.omega1_count() == geom.cell_count();
  if (r.refuge_empty) r.notes.push_back("refuge is empty: |Omega1| = |Omega|; threshold is refuge independent");
  r.notes.push_back("mu'(0) is verified by sign only");

  for (const auto& pt : semitrivial.points) {
    if (std::abs(pt.mu - mu_star) <= kAuditMuBand) continue;
    tally(cell_for(r, BranchLabel::Semitrivial, pt.mu > mu_star), pt.flag);
  }

  const bool have_nontrivial = nontrivial && nontrivial->points.size() > 0;
  if (have_nontrivial) {
    const auto& pts = nontrivial->points;
    for (const auto& pt : pts) {
      if (std::abs(pt.mu - mu_star) <= kAuditMuBand) continue;
      tally(cell_for(r, BranchLabel::Nontrivial, pt.mu > mu_star), pt.flag);
      if (pt.flag == Stability::Stable && pt.mu > mu_star) r.both_stable_window = true;
    }
    // Semitrivial points that are stable below mu* inside the nontrivial range
    // would also give a window with two stable states.
    double nt_min = pts.front().mu, nt_max = pts.front().mu;
    for (const auto& pt : pts) {
      nt_min = std::min(nt_min, pt.mu);
      nt_max = std::max(nt_max, pt.mu);
    }
    for (const auto& pt : semitrivial.points) {
      if (pt.flag == Stability::Stable && pt.mu >= nt_min && pt.mu <= nt_max) r.both_stable_window = true;
    }

    const auto smallest = std::min_element(pts.begin(), pts.end(), [](const BranchPoint& a, const BranchPoint& b) {
      return a.amplitude < b.amplitude;
    });
    if (smallest->amplitude > 0.0) {
      const KernelTangent kernel = solve_kernel_function(params, geom);
      const double cosine = tangent_cosine(smallest->state, params, kernel, geom);
      r.tangent_cosine = cosine;
      r.tangent_angle_deg = std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / std::numbers::pi;
      r.slope_sign = sign(smallest->mu - mu_star);
    }
    const std::size_t head = std::min<std::size_t>(pts.size(), 10);
    r.mu_decreasing_initially = head >= 2;
    for (std::size_t k = 1; k < head; ++k) {
      if (!(pts[k].mu < pts[k - 1].mu)) r.mu_decreasing_initially = false;
    }

    r.audit = verify_sign_relation(*nontrivial, mu_star);
    r.audit_status = r.audit.all_pass() && !r.audit.rows.empty() ? AuditStatus::Passed : AuditStatus::Failed;
  } else {
    r.notes.push_back("nontrivial branch absent: sign audit not run");
  }

  const bool semitrivial_ok = r.semitrivial_above.unstable == 0 && r.semitrivial_above.marginal == 0 &&
                              r.semitrivial_below.stable == 0 && r.semitrivial_below.marginal == 0 &&
                              r.semitrivial_above.total() > 0 && r.semitrivial_below.total() > 0;
  const bool nontrivial_ok = have_nontrivial && r.nontrivial_below.total() > 0 &&
                             r.nontrivial_below.stable == r.nontrivial_below.total() &&
                             r.nontrivial_above.stable == 0;
  r.exchange_ok = semitrivial_ok && nontrivial_ok && !r.both_stable_window;
  return r;
}

}  // namespace refugia
