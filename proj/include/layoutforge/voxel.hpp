#pragma once

#include "layoutforge/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace layoutforge {

// Occupancy grid in an asset's canonical frame. Cell (i,j,k) spans
// origin + cell * [i, i+1) x [j, j+1) x [k, k+1).
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double cell = 0.05;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> bits;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool at(int i, int j, int k) const { return in_bounds(i, j, k) && bits[index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool on = true) { bits[index(i, j, k)] = on ? 1 : 0; }
  std::size_t count() const;
  Vec3 cell_center(int i, int j, int k) const {
    return origin + cell * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  void validate() const;

  // Empty grid covering a box of `extents` centered at the origin.
  static VoxelGrid empty_box(const Vec3& extents, double cell);
  // Fully occupied grid of the same shape.
  static VoxelGrid solid_box(const Vec3& extents, double cell);
  // Clears every cell whose center lies inside [lo, hi].
  void carve(const Vec3& lo, const Vec3& hi);
};

// Placement of a scaled asset in the world: p_world = R * (s .* p_asset) + t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  Vec3 s = Vec3::Ones();

  Vec3 apply(const Vec3& p) const { return R * s.cwiseProduct(p) + t; }
  Vec3 inverse(const Vec3& p) const { return (R.transpose() * (p - t)).cwiseQuotient(s); }
};

// Packed integer coordinates of a world cell. World cells are aligned to
// integer multiples of the cell size.
using CellKey = std::int64_t;
CellKey pack_cell(int i, int j, int k);
std::array<int, 3> unpack_cell(CellKey key);

// Sorted keys of the world cells whose centers fall inside an occupied asset
// cell. `extents` is the asset's canonical box (centered at its origin).
std::vector<CellKey> occupied_world_cells(const VoxelGrid& grid, const Vec3& extents,
                                          const Pose& pose, double world_cell);

// Axis-aligned rectangle on the boundary of the occupied cells, asset
// frame. Corners run counter-clockwise seen from outside.
struct VoxelFace {
  std::array<Vec3, 4> corners;
  Vec3 normal = Vec3::Zero();
};

// Boundary of the occupied cells as maximal rectangles per slice, clipped
// to the asset box.
std::vector<VoxelFace> exposed_faces(const VoxelGrid& grid, const Vec3& extents);

// Height (asset frame z) of the top of the highest occupied cell in the
// column containing (x, y) at or below `z_from`; nullopt if none.
std::optional<double> column_top_below(const VoxelGrid& grid, const Vec3& extents, double x,
                                       double y, double z_from);

}  // namespace layoutforge
