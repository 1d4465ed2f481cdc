#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "refugia/operators.hpp"

namespace refugia {

enum class Stability { Stable, Unstable, Marginal };

/// |Lambda| at or below this is MARGINAL.
inline constexpr double kMarginalBand = 1e-6;

std::string_view to_string(Stability s);
Stability classify(double leading_value);

struct EigenPair {
  double value = 0.0;  // real part of the leading eigenvalue
  double imag = 0.0;
  bool complex = false;
  Eigen::VectorXd vector;  // real part of the eigenvector, infinity norm 1
  double residual_norm = 0.0;  // ||J x - Lambda x||_inf / ||x||_inf
  double shift = 0.0;          // shift whose iteration produced the pair
};

struct EigenOptions {
  std::vector<double> shifts{0.0, 0.5, -0.5};
  /// Adds a shift at the Gershgorin bound on the real part when it lies
  /// right of every ladder shift.
  bool gershgorin_shift = true;
  int block_size = 6;
  int max_iter = 400;
  double tol = 1e-10;  // raised to 64 eps ||J||_inf when that is larger
  double accept_tol = 1e-8;
  unsigned seed = 7u;
};

/// Eigenvalue of largest real part reachable by shift-and-invert block
/// iteration from the shift ladder. Throws EigenNoConvergence.
EigenPair leading_eigenvalue(const SparseOperator& J, const EigenOptions& opt = {});

/// Largest real part over all Gershgorin discs.
double gershgorin_right_bound(const SparseOperator& J);

/// max(-lambda, c lambda/(1 + m lambda) - mu): exact leading eigenvalue of the
/// Jacobian at (lambda, 0), whose u-block is lambda (Lap - I) and whose v-block
/// is Lap - mu + c lambda/(1 + m lambda).
double semitrivial_leading_analytic(const ModelParams& params);

Stability classify_stability(const SparseOperator& J, const EigenOptions& opt = {});

}  // namespace refugia
