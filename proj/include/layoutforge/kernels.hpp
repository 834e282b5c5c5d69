#pragma once

// Hot loops of the pipeline. The functions in `kernels` are OpenMP-parallel;
// `kernels::serial` holds the reference versions they are tested against.
// Both produce identical results for identical inputs.

#include "layoutforge/features.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/voxel.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace layoutforge {

struct PatchMatch {
  int tmpl = 0;
  int query = 0;
  double cosine = 0;
  bool operator==(const PatchMatch&) const = default;
};

#define LAYOUTFORGE_KERNEL_DECLS                                                              \
  std::vector<std::size_t> count_plane_inliers(std::span<const Vec3> points,                 \
                                               std::span<const Plane> planes, double thr);   \
  std::vector<PatchMatch> mutual_nearest_neighbors(const PatchFeatureMap& tmpl,              \
                                                   const PatchFeatureMap& query,             \
                                                   double min_cos);                          \
  std::vector<double> view_similarities(std::span<const PatchFeatureMap> templates,          \
                                        const PatchFeatureMap& query, double min_cos);       \
  std::vector<double> mean_view_cosines(std::span<const std::vector<GlobalFeature>> views,   \
                                        const GlobalFeature& query);                         \
  std::vector<std::pair<int, int>> overlapping_pairs(                                        \
      std::span<const std::vector<CellKey>> sorted_cells);

namespace kernels {
LAYOUTFORGE_KERNEL_DECLS
void set_threads(int n);
int max_threads();
namespace serial {
LAYOUTFORGE_KERNEL_DECLS
}  // namespace serial
}  // namespace kernels

#undef LAYOUTFORGE_KERNEL_DECLS

// Number of common elements of two sorted ranges.
std::size_t sorted_intersection_size(std::span<const CellKey> a, std::span<const CellKey> b);

}  // namespace layoutforge
