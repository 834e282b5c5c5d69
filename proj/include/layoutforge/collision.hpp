#pragma once

#include "layoutforge/ingest.hpp"
#include "layoutforge/voxel.hpp"

#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace layoutforge {

// Voxel proxies of the layout's objects: the library grid when the asset is
// known, else a solid box of the object's extents.
class ShapeSet {
 public:
  ShapeSet(const std::vector<LayoutObject>& objects, const AssetLibrary* library, double cell);

  const VoxelGrid& grid(std::size_t i) const { return *grids_[i]; }
  std::size_t size() const { return grids_.size(); }

 private:
  std::vector<VoxelGrid> owned_;
  std::vector<const VoxelGrid*> grids_;
};

std::vector<CellKey> object_cells(const LayoutObject& obj, const VoxelGrid& grid, double world_cell);

// Multiset of occupied world cells with the overlap measure
// sum over cells of max(0, count - 1).
class OccupancyMap {
 public:
  void add(const std::vector<CellKey>& cells);
  void remove(const std::vector<CellKey>& cells);
  std::size_t overlap() const { return overlap_; }

 private:
  std::unordered_map<CellKey, int> counts_;
  std::size_t overlap_ = 0;
};

// Pairs (i < j) of objects sharing at least one world cell.
std::vector<std::pair<int, int>> intersecting_pairs(const std::vector<LayoutObject>& objects,
                                                    const ShapeSet& shapes, double world_cell);

// Height of the parent's surface right under the child: the highest top of
// an occupied parent column below the child's bottom (+ tol), over the
// child's footprint columns. nullopt when no column of the child lies over
// the parent. Both objects must be upright.
std::optional<double> support_height_under(const LayoutObject& child, const VoxelGrid& child_grid,
                                           const LayoutObject& parent,
                                           const VoxelGrid& parent_grid, double tol);

double z_min(const LayoutObject& o);
double z_max(const LayoutObject& o);

}  // namespace layoutforge
