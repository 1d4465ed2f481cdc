#pragma once

#include <cmath>
#include <random>

#include "refugia/geometry.hpp"
#include "refugia/operators.hpp"

namespace refugia::test {

inline RefugeShape centre_square() { return RefugeShape::rectangle(0.375, 0.625, 0.375, 0.625); }

inline DomainGeometry unit_square(int n, RefugeShape refuge = centre_square()) {
  return build_geometry({n, n, 1.0, 1.0}, refuge);
}

inline ModelParams standard_params(double mu = 1.0) {
  ModelParams p;
  p.lambda = 1.0;
  p.m = 1.0;
  p.c = 2.0;
  p.b = 1.0;
  p.mu = mu;
  return p;
}

/// Smooth positive state with random low-frequency modes.
inline SystemState smooth_state(const DomainGeometry& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-0.2, 0.2);
  const double a1 = coef(rng), a2 = coef(rng), a3 = coef(rng), b1 = coef(rng), b2 = coef(rng);
  SystemState s = uniform_state(g, 0.0, 0.0);
  const double pi = std::acos(-1.0);
  for (int k = 0; k < g.cell_count(); ++k) {
    const double x = g.cell_x(k), y = g.cell_y(k);
    s.u.values[k] = 0.8 + a1 * std::cos(pi * x) + a2 * std::cos(pi * y) + a3 * std::cos(pi * x) * std::cos(2 * pi * y);
  }
  for (int k = 0; k < g.omega1_count(); ++k) {
    const int c = g.omega1_cell(k);
    const double x = g.cell_x(c), y = g.cell_y(c);
    s.v.values[k] = 0.4 + b1 * std::sin(pi * x) + b2 * std::cos(3 * pi * y);
  }
  return s;
}

}  // namespace refugia::test
