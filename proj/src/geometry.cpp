#include "refugia/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "refugia/error.hpp"

namespace refugia {

RefugeShape RefugeShape::rectangle(double x0, double x1, double y0, double y1) {
  RefugeShape s;
  s.kind = RefugeKind::Rectangle;
  s.cx = 0.5 * (x0 + x1);
  s.cy = 0.5 * (y0 + y1);
  s.half_x = 0.5 * (x1 - x0);
  s.half_y = 0.5 * (y1 - y0);
  return s;
}

RefugeShape RefugeShape::disc(double cx, double cy, double radius) {
  RefugeShape s;
  s.kind = RefugeKind::Disc;
  s.cx = cx;
  s.cy = cy;
  s.radius = radius;
  return s;
}

bool RefugeShape::contains(double x, double y) const {
  switch (kind) {
    case RefugeKind::Empty:
      return false;
    case RefugeKind::Rectangle:
      return std::abs(x - cx) <= half_x && std::abs(y - cy) <= half_y;
    case RefugeKind::Disc:
      return std::hypot(x - cx, y - cy) <= radius;
  }
  return false;
}

double RefugeShape::boundary_margin(double lx, double ly) const {
  double ex = 0.0, ey = 0.0;
  switch (kind) {
    case RefugeKind::Empty:
      return std::min(lx, ly);
    case RefugeKind::Rectangle:
      ex = half_x;
      ey = half_y;
      break;
    case RefugeKind::Disc:
      ex = ey = radius;
      break;
  }
  return std::min({cx - ex, lx - (cx + ex), cy - ey, ly - (cy + ey)});
}

DomainGeometry::DomainGeometry(const GridSpec& grid, const RefugeShape& refuge)
    : grid_(grid), refuge_(refuge) {
  if (grid.nx < 4 || grid.ny < 4) {
    throw Error(Errc::DegenerateGrid, "grid needs at least 4 cells per direction, got " +
                                          std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
  }
  if (!(grid.lx > 0.0) || !(grid.ly > 0.0)) {
    throw Error(Errc::DegenerateGrid, "domain extents must be positive");
  }
  if (refuge.kind == RefugeKind::Rectangle && !(refuge.half_x > 0.0 && refuge.half_y > 0.0)) {
    throw Error(Errc::InvalidParams, "rectangular refuge needs positive half-widths");
  }
  if (refuge.kind == RefugeKind::Disc && !(refuge.radius > 0.0)) {
    throw Error(Errc::InvalidParams, "disc refuge needs a positive radius");
  }
  const double h = std::max(grid.hx(), grid.hy());
  if (refuge.kind != RefugeKind::Empty && refuge.boundary_margin(grid.lx, grid.ly) <= 2.0 * h) {
    throw Error(Errc::RefugeTouchesBoundary,
                "refuge closure must keep a margin > 2h = " + std::to_string(2.0 * h) + " to the outer boundary");
  }

  wx_ = 1.0 / (grid.hx() * grid.hx());
  wy_ = 1.0 / (grid.hy() * grid.hy());

  const int n = grid.cells();
  classes_.resize(n);
  omega1_index_.assign(n, -1);
  for (int c = 0; c < n; ++c) {
    const int i = cell_i(c), j = cell_j(c);
    if (refuge.contains(cell_x(c), cell_y(c))) {
      classes_[c] = CellClass::RefugeInterior;
      continue;
    }
    const bool edge = i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1;
    classes_[c] = edge ? CellClass::OuterBoundaryAdjacent : CellClass::PredatorDomain;
    omega1_index_[c] = static_cast<int>(omega1_cells_.size());
    omega1_cells_.push_back(c);
  }

  for (int r = 0; r < 2; ++r) {
    const Region region = r == 0 ? Region::Omega : Region::Omega1;
    const int size = region_size(region);
    auto& nb = neighbors_[r];
    nb.resize(size);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(5 * static_cast<std::size_t>(size));
    for (int k = 0; k < size; ++k) {
      const int c = region_cell(region, k);
      const int i = cell_i(c), j = cell_j(c);
      const std::array<std::array<int, 2>, kFaceCount> offsets{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
      double diag = 0.0;
      for (int f = 0; f < kFaceCount; ++f) {
        const int ii = i + offsets[f][0], jj = j + offsets[f][1];
        int target = -1;
        if (ii >= 0 && jj >= 0 && ii < grid.nx && jj < grid.ny) {
          const int other = cell_index(ii, jj);
          target = region == Region::Omega ? other : omega1_index_[other];
        }
        nb[k][f] = target;
        if (target >= 0) {
          const double w = face_weight(static_cast<Face>(f));
          triplets.emplace_back(k, target, w);
          diag -= w;
        }
      }
      triplets.emplace_back(k, k, diag);
    }
    laplacians_[r].resize(size, size);
    laplacians_[r].setFromTriplets(triplets.begin(), triplets.end());
    laplacians_[r].makeCompressed();
  }
}

std::uint8_t DomainGeometry::zero_flux_faces(Region r, int k) const {
  std::uint8_t mask = 0;
  for (int f = 0; f < kFaceCount; ++f) {
    if (neighbors_[index(r)][k][f] < 0) mask |= static_cast<std::uint8_t>(1u << f);
  }
  return mask;
}

DomainGeometry build_geometry(const GridSpec& grid, const RefugeShape& refuge) {
  return DomainGeometry(grid, refuge);
}

ScalarField attack_rate_field(const DomainGeometry& geom, double b) {
  if (!(b > 0.0)) throw Error(Errc::NonPositiveAttackRate, "attack rate must be positive");
  ScalarField out{Region::Omega, Eigen::VectorXd::Zero(geom.cell_count())};
  for (int c = 0; c < geom.cell_count(); ++c) {
    if (geom.in_omega1(c)) out[c] = b;
  }
  return out;
}

void write_mask_pgm(const DomainGeometry& geom, std::ostream& out) {
  const auto& g = geom.grid();
  out << "P2\n" << g.nx << ' ' << g.ny << "\n2\n";
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      out << static_cast<int>(geom.cell_class(geom.cell_index(i, j))) << (i + 1 < g.nx ? ' ' : '\n');
    }
  }
}

}  // namespace refugia
