#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace eiknet {

using Config = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Regular 2D or 3D lattice. Node (i, j[, k]) sits at origin + h * (i, j[, k]);
/// linear index is i + nx * (j + ny * k).
struct GridShape {
  int dims = 2;
  std::array<int, 3> size{1, 1, 1};
  double h = 1.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  GridShape() = default;
  GridShape(std::array<int, 3> size_, int dims_, double h_,
            std::array<double, 3> origin_ = {0.0, 0.0, 0.0});

  std::size_t count() const {
    return static_cast<std::size_t>(size[0]) * size[1] * size[2];
  }
  std::size_t index(int i, int j, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(size[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(size[1]) * k);
  }
  std::array<int, 3> coords(std::size_t idx) const;
  Config position(std::size_t idx) const;
  Config lower() const;
  Config upper() const;
  bool contains(const Config& q) const;
  /// Index of the lattice node nearest to q (clamped into the lattice).
  std::size_t nearest(const Config& q) const;

  bool operator==(const GridShape& o) const {
    return dims == o.dims && size == o.size && h == o.h && origin == o.origin;
  }
};

/// Scalar field sampled at the nodes of a GridShape.
struct GridField {
  GridShape shape;
  std::vector<double> values;

  GridField() = default;
  GridField(GridShape s, double fill) : shape(s), values(s.count(), fill) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  /// Multilinear interpolation at q. Requires q inside the lattice box.
  double interpolate(const Config& q) const;
  /// Interpolated value plus the gradient of the multilinear interpolant.
  /// At cell faces the lower-index cell is used (upper face of the domain
  /// belongs to the last cell).
  double interpolate(const Config& q, Config& gradient) const;
};

struct OccupancyGrid {
  GridShape shape;
  std::vector<std::uint8_t> occupied;
  /// Euclidean distance (world units) from each node to the nearest occupied
  /// node; zero on occupied nodes, +inf when there are no obstacles.
  GridField clearance;

  OccupancyGrid() = default;
  explicit OccupancyGrid(GridShape s)
      : shape(s), occupied(s.count(), 0), clearance(s, kInf) {}

  bool is_occupied(std::size_t idx) const { return occupied[idx] != 0; }
  std::size_t free_count() const;
};

/// Fills grid.clearance with the exact Euclidean distance transform of the
/// occupancy lattice. Throws "no free space" when every node is occupied.
void distance_transform(OccupancyGrid& grid);

}  // namespace eiknet
