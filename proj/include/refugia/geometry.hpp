#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace refugia {

struct GridSpec {
  int nx = 64;
  int ny = 64;
  double lx = 1.0;
  double ly = 1.0;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  int cells() const { return nx * ny; }

  bool operator==(const GridSpec&) const = default;
};

enum class RefugeKind { Empty, Rectangle, Disc };

/// Predator-free zone. Coordinates are physical; a cell belongs to the refuge
/// when its center lies in the closed shape.
struct RefugeShape {
  RefugeKind kind = RefugeKind::Empty;
  double cx = 0.0;
  double cy = 0.0;
  double half_x = 0.0;
  double half_y = 0.0;
  double radius = 0.0;

  static RefugeShape empty() { return {}; }
  static RefugeShape rectangle(double x0, double x1, double y0, double y1);
  static RefugeShape disc(double cx, double cy, double radius);

  bool contains(double x, double y) const;
  /// Distance from the shape's closure to the outer boundary of [0,lx]x[0,ly].
  double boundary_margin(double lx, double ly) const;

  bool operator==(const RefugeShape&) const = default;
};

enum class CellClass : std::uint8_t { RefugeInterior, PredatorDomain, OuterBoundaryAdjacent };

/// Omega is the whole habitat (prey); Omega1 excludes the refuge (predator).
enum class Region : std::uint8_t { Omega, Omega1 };

enum Face : int { West = 0, East = 1, South = 2, North = 3 };
inline constexpr int kFaceCount = 4;

using SparseMatrix = Eigen::SparseMatrix<double>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One value per cell of its region, region-local ordering (row-major).
template <typename Scalar>
struct Field {
  Region region = Region::Omega;
  VectorX<Scalar> values;

  Eigen::Index size() const { return values.size(); }
  Scalar& operator[](Eigen::Index k) { return values[k]; }
  const Scalar& operator[](Eigen::Index k) const { return values[k]; }
};

using ScalarField = Field<double>;

/// Cell-centered uniform grid over the habitat with the refuge given as a cell
/// mask. Immutable after construction.
class DomainGeometry {
 public:
  DomainGeometry(const GridSpec& grid, const RefugeShape& refuge);

  const GridSpec& grid() const { return grid_; }
  const RefugeShape& refuge() const { return refuge_; }

  int cell_count() const { return grid_.cells(); }
  int omega1_count() const { return static_cast<int>(omega1_cells_.size()); }
  int region_size(Region r) const { return r == Region::Omega ? cell_count() : omega1_count(); }

  int cell_index(int i, int j) const { return j * grid_.nx + i; }
  int cell_i(int cell) const { return cell % grid_.nx; }
  int cell_j(int cell) const { return cell / grid_.nx; }
  double cell_x(int cell) const { return (cell_i(cell) + 0.5) * grid_.hx(); }
  double cell_y(int cell) const { return (cell_j(cell) + 0.5) * grid_.hy(); }

  CellClass cell_class(int cell) const { return classes_[cell]; }
  bool in_omega1(int cell) const { return omega1_index_[cell] >= 0; }
  /// Position of `cell` in the Omega1 numbering, or -1 inside the refuge.
  int omega1_index(int cell) const { return omega1_index_[cell]; }
  int omega1_cell(int k) const { return omega1_cells_[k]; }
  /// Maps a region-local index to a grid cell.
  int region_cell(Region r, int k) const { return r == Region::Omega ? k : omega1_cells_[k]; }

  double area_omega() const { return grid_.lx * grid_.ly; }
  double area_omega1() const { return omega1_count() * grid_.cell_area(); }

  /// Region-local index of the neighbor across `face`, or -1 when that face is
  /// zero-flux for fields living on `r`.
  int neighbor(Region r, int k, Face face) const { return neighbors_[index(r)][k][face]; }
  /// Bit i set when face i of region-local cell k is zero-flux.
  std::uint8_t zero_flux_faces(Region r, int k) const;
  /// 1/h^2 weight for a face direction.
  double face_weight(Face face) const { return face <= East ? wx_ : wy_; }

  /// 5-point Neumann Laplacian on the region (ghost reflection at zero-flux faces).
  const SparseMatrix& laplacian(Region r) const { return laplacians_[index(r)]; }

 private:
  static int index(Region r) { return r == Region::Omega ? 0 : 1; }

  GridSpec grid_;
  RefugeShape refuge_;
  double wx_ = 0.0;
  double wy_ = 0.0;
  std::vector<CellClass> classes_;
  std::vector<int> omega1_index_;
  std::vector<int> omega1_cells_;
  std::array<std::vector<std::array<int, kFaceCount>>, 2> neighbors_;
  std::array<SparseMatrix, 2> laplacians_;
};

/// Validates the refuge placement and builds the masks.
DomainGeometry build_geometry(const GridSpec& grid, const RefugeShape& refuge);

/// b(x): b on Omega1 cells, 0 on refuge cells.
ScalarField attack_rate_field(const DomainGeometry& geom, double b);

/// Plain-text PGM (P2) raster: 0 refuge, 1 predator domain, 2 boundary-adjacent.
void write_mask_pgm(const DomainGeometry& geom, std::ostream& out);

}  // namespace refugia
