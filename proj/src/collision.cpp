#include "layoutforge/collision.hpp"

#include "layoutforge/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace layoutforge {

ShapeSet::ShapeSet(const std::vector<LayoutObject>& objects, const AssetLibrary* library,
                   double cell) {
  owned_.reserve(objects.size());
  std::vector<int> owned_index(objects.size(), -1);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const Asset* a = library ? library->manifest.find(objects[i].asset_id) : nullptr;
    if (!a) {
      owned_.push_back(VoxelGrid::solid_box(objects[i].extents, cell));
      owned_index[i] = static_cast<int>(owned_.size()) - 1;
    }
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (owned_index[i] >= 0) {
      grids_.push_back(&owned_[owned_index[i]]);
    } else {
      grids_.push_back(&library->manifest.find(objects[i].asset_id)->voxel);
    }
  }
}

std::vector<CellKey> object_cells(const LayoutObject& obj, const VoxelGrid& grid, double world_cell) {
  return occupied_world_cells(grid, obj.extents, obj.pose(), world_cell);
}

void OccupancyMap::add(const std::vector<CellKey>& cells) {
  for (CellKey k : cells) {
    int& c = counts_[k];
    if (c >= 1) ++overlap_;
    ++c;
  }
}

void OccupancyMap::remove(const std::vector<CellKey>& cells) {
  for (CellKey k : cells) {
    auto it = counts_.find(k);
    if (it == counts_.end()) continue;
    if (it->second >= 2) --overlap_;
    if (--it->second == 0) counts_.erase(it);
  }
}

std::vector<std::pair<int, int>> intersecting_pairs(const std::vector<LayoutObject>& objects,
                                                    const ShapeSet& shapes, double world_cell) {
  std::vector<std::vector<CellKey>> cells;
  cells.reserve(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    cells.push_back(object_cells(objects[i], shapes.grid(i), world_cell));
  }
  return kernels::overlapping_pairs(cells);
}

double z_min(const LayoutObject& o) { return o.obb().min_along(Vec3::UnitZ()); }
double z_max(const LayoutObject& o) { return o.obb().max_along(Vec3::UnitZ()); }

std::optional<double> support_height_under(const LayoutObject& child, const VoxelGrid& cg,
                                           const LayoutObject& parent, const VoxelGrid& pg,
                                           double tol) {
  const double bottom = z_min(child);
  const Pose pp = parent.pose();
  const double from_local = (bottom + tol - parent.t.z()) / parent.s.z();
  std::optional<double> best;
  for (int j = 0; j < cg.dims[1]; ++j) {
    for (int i = 0; i < cg.dims[0]; ++i) {
      bool any = false;
      for (int k = 0; k < cg.dims[2] && !any; ++k) any = cg.at(i, j, k);
      if (!any) continue;
      Vec3 local = cg.cell_center(i, j, 0);
      // Column centers beyond the asset box (grid padding) are clipped.
      local.x() = std::clamp(local.x(), -0.5 * child.extents.x(), 0.5 * child.extents.x());
      local.y() = std::clamp(local.y(), -0.5 * child.extents.y(), 0.5 * child.extents.y());
      const Vec3 world = child.pose().apply(local);
      const Vec3 in_parent = pp.inverse(world);
      const auto top = column_top_below(pg, parent.extents, in_parent.x(), in_parent.y(), from_local);
      if (!top) continue;
      const double h = parent.t.z() + parent.s.z() * *top;
      if (!best || h > *best) best = h;
    }
  }
  return best;
}

}  // namespace layoutforge
