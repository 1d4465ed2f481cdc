#include "refugia/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseLU>

namespace refugia {

namespace {

using Complex = std::complex<double>;

constexpr double kShiftOffset = 6.18e-4;

struct RitzPair {
  Complex value;
  Eigen::VectorXcd vector;
  double residual = 0.0;
  double shift = 0.0;
};

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& Z) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  return qr.householderQ() * Eigen::MatrixXd::Identity(Z.rows(), Z.cols());
}

Eigen::MatrixXd starting_block(Eigen::Index n, int p, unsigned seed) {
  Eigen::MatrixXd Q(n, p);
  Q.col(0).setOnes();
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 1; k < p; ++k)
    for (Eigen::Index i = 0; i < n; ++i) Q(i, k) = dist(gen);
  return orthonormalize(Q);
}

// Nudges the shift off an exactly singular pivot.
bool factor_shifted(const SparseOperator& J, double& shift, Eigen::SparseLU<SparseOperator>& lu) {
  SparseOperator I(J.rows(), J.cols());
  I.setIdentity();
  for (int attempt = 0; attempt < 4; ++attempt) {
    SparseOperator M = J - shift * I;
    M.makeCompressed();
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() == Eigen::Success) return true;
    shift += 1e-7 * (1.0 + std::abs(shift));
  }
  return false;
}

// Shift-and-invert block iteration with Rayleigh-Ritz on J itself. Returns
// every Ritz pair whose residual meets accept_tol.
std::vector<RitzPair> iterate_shift(const SparseOperator& J, double shift, const EigenOptions& opt) {
  const Eigen::Index n = J.rows();
  const int p = static_cast<int>(std::min<Eigen::Index>(opt.block_size, n));
  const int wanted = std::min(p, 2);
  double norm_J = 0.0;
  {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
    for (int col = 0; col < J.outerSize(); ++col)
      for (SparseOperator::InnerIterator it(J, col); it; ++it) row_sums[it.row()] += std::abs(it.value());
    norm_J = row_sums.maxCoeff();
  }
  // Residuals cannot drop much below rounding in J x.
  const double tol = std::max(opt.tol, 64.0 * std::numeric_limits<double>::epsilon() * norm_J);

  Eigen::SparseLU<SparseOperator> lu;
  if (!factor_shifted(J, shift, lu)) return {};

  Eigen::MatrixXd Q = starting_block(n, p, opt.seed);
  std::vector<RitzPair> pairs;
  double best_wanted = std::numeric_limits<double>::infinity();
  int since_improved = 0;

  for (int it = 0; it < opt.max_iter; ++it) {
    Eigen::MatrixXd Z = lu.solve(Q);
    if (!Z.allFinite()) break;
    Q = orthonormalize(Z);
    const Eigen::MatrixXd JQ = J * Q;
    const Eigen::MatrixXd H = Q.transpose() * JQ;
    Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) break;

    pairs.clear();
    for (int i = 0; i < p; ++i) {
      RitzPair rp;
      rp.value = es.eigenvalues()[i];
      const Eigen::VectorXcd y = es.eigenvectors().col(i);
      rp.vector = Q.cast<Complex>() * y;
      const Eigen::VectorXcd r = JQ.cast<Complex>() * y - rp.value * rp.vector;
      rp.residual = r.cwiseAbs().maxCoeff() / rp.vector.cwiseAbs().maxCoeff();
      rp.shift = shift;
      pairs.push_back(std::move(rp));
    }
    std::sort(pairs.begin(), pairs.end(), [shift](const RitzPair& a, const RitzPair& b) {
      return std::abs(a.value - shift) < std::abs(b.value - shift);
    });

    double worst = 0.0;
    bool done = true;
    for (int i = 0; i < wanted; ++i) {
      worst = std::max(worst, pairs[i].residual);
      if (pairs[i].residual > tol * std::max(1.0, std::abs(pairs[i].value))) done = false;
    }
    if (done) break;
    if (worst < 0.5 * best_wanted) {
      best_wanted = worst;
      since_improved = 0;
    } else if (++since_improved > 10 && worst <= opt.accept_tol) {
      break;  // stagnated at rounding level
    } else if (since_improved > 40) {
      break;
    }
  }

  std::erase_if(pairs, [&](const RitzPair& rp) { return !(rp.residual <= opt.accept_tol); });
  return pairs;
}

}  // namespace

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "STABLE";
    case Stability::Unstable: return "UNSTABLE";
    case Stability::Marginal: return "MARGINAL";
  }
  return "MARGINAL";
}

Stability classify(double leading_value) {
  if (leading_value < -kMarginalBand) return Stability::Stable;
  if (leading_value > kMarginalBand) return Stability::Unstable;
  return Stability::Marginal;
}

double gershgorin_right_bound(const SparseOperator& J) {
  Eigen::VectorXd bound = Eigen::VectorXd::Zero(J.rows());
  for (int col = 0; col < J.outerSize(); ++col) {
    for (SparseOperator::InnerIterator it(J, col); it; ++it) {
      bound[it.row()] += it.row() == it.col() ? it.value() : std::abs(it.value());
    }
  }
  return bound.maxCoeff();
}

EigenPair leading_eigenvalue(const SparseOperator& J, const EigenOptions& opt) {
  if (J.rows() != J.cols() || J.rows() == 0) {
    throw Error(Errc::EigenNoConvergence, "operator must be square and non-empty");
  }
  std::vector<double> shifts = opt.shifts;
  if (opt.gershgorin_shift) {
    const double g = gershgorin_right_bound(J);
    const double top = shifts.empty() ? -std::numeric_limits<double>::infinity()
                                      : *std::max_element(shifts.begin(), shifts.end());
    if (g > top + 0.25) shifts.push_back(g);
  }

  std::optional<RitzPair> best;
  for (double shift : shifts) {
    // A shift sitting exactly on an eigenvalue (the threshold zero is grid
    // exact) swamps the rest of the block, so step slightly off it.
    shift += kShiftOffset * (1.0 + std::abs(shift));
    for (auto& rp : iterate_shift(J, shift, opt)) {
      if (!best || rp.value.real() > best->value.real() + 1e-12 ||
          (std::abs(rp.value.real() - best->value.real()) <= 1e-12 && rp.residual < best->residual)) {
        best = std::move(rp);
      }
    }
  }
  if (!best) throw Error(Errc::EigenNoConvergence, "no Ritz pair met the residual tolerance");

  EigenPair out;
  out.value = best->value.real();
  out.imag = best->value.imag();
  out.complex = std::abs(out.imag) > 1e-10 * std::max(1.0, std::abs(best->value));
  out.shift = best->shift;

  // Rotate the complex vector so its largest entry is real and positive.
  Eigen::Index arg = 0;
  best->vector.cwiseAbs().maxCoeff(&arg);
  const Complex phase = std::abs(best->vector[arg]) / best->vector[arg];
  Eigen::VectorXcd z = best->vector * phase;
  z /= z.cwiseAbs().maxCoeff();
  out.residual_norm = best->residual;
  out.vector = z.real();
  if (!out.complex) {
    const Eigen::VectorXd r = J * out.vector - out.value * out.vector;
    out.residual_norm = r.lpNorm<Eigen::Infinity>() / out.vector.lpNorm<Eigen::Infinity>();
  }
  return out;
}

double semitrivial_leading_analytic(const ModelParams& params) {
  return std::max(-params.lambda, params.mu_threshold() - params.mu);
}

Stability classify_stability(const SparseOperator& J, const EigenOptions& opt) {
  return classify(leading_eigenvalue(J, opt).value);
}

}  // namespace refugia
