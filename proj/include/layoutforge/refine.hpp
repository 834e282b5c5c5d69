#pragma once

#include "layoutforge/collision.hpp"
#include "layoutforge/ingest.hpp"
#include "layoutforge/kernels.hpp"
#include "layoutforge/scenegraph.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace layoutforge {

// Sorted, unique row-major pixel indices.
using PixelSet = std::vector<std::uint32_t>;

struct AnnealConfig {
  double T0 = 1.0;
  double cooling = 0.97;
  int iters = 5000;
  double step_sigma = 0.05;
  std::uint64_t seed = 42;
};

struct RefineConfig {
  double lambda1 = 0.1;
  AnnealConfig anneal;
  double voxel_cell = 0.05;
  double wall_snap_tolerance = 0.05;
  double wall_yaw_snap_deg = 15.0;

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  double temperature = 0;
  MaskId proposal = 0;
  bool accepted = false;
  double objective = 0;
};

// Indexed like LayoutDocument::objects.
struct OptState {
  std::vector<Vec3> t_update;
  std::vector<std::array<bool, 3>> frozen;
  std::vector<bool> locked;  // placed inside a parent; only rides along
  double objective = 0;      // +inf while any voxel overlap remains
  std::size_t overlap = 0;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
  bool relaxed = false;  // some hard constraint could not be met
};

// Rotation fixes along the support tree: upright snapping to the support
// normal, yaw snapping to contact walls, ceiling alignment.
LayoutDocument local_refine(LayoutDocument layout, const SceneGraph& graph,
                            const RefineConfig& config = {});

// New (t, s) for a child resting inside one of the parent's subspaces.
// Throws NoSubspace when the parent asset has none.
std::pair<Vec3, Vec3> place_internal(const LayoutObject& child, const LayoutObject& parent,
                                     const Asset& parent_asset, double d_vertical);

// Index of the subspace whose center height fraction is nearest
// `d_vertical`; ties keep the lower index.
int nearest_subspace(const Asset& asset, double d_vertical);

// Resolves support heights, ceiling attachment and wall contact in place and
// freezes the fixed translation components.
OptState apply_hard_constraints(LayoutDocument& layout, const SceneGraph& graph,
                                const AssetLibrary* library, const RefineConfig& config = {});

// Precomputed render/voxel data for evaluating the translation objective.
class TranslationProblem {
 public:
  TranslationProblem(const LayoutDocument& layout, const SceneBundle& bundle,
                     const AssetLibrary* library, const RefineConfig& config);

  std::size_t size() const { return faces_.size(); }
  // Pixels missed by the render plus rendered pixels outside every mask,
  // over the mask area. Rendered pixels on another object's mask may be
  // hidden by it and cost nothing. 0 when the object has no mask pixels.
  double mask_term(std::size_t i, const LayoutObject& obj) const;
  PixelSet render(const LayoutObject& obj, std::size_t i) const;
  std::vector<CellKey> cells(const LayoutObject& obj, std::size_t i) const;
  const ShapeSet& shapes() const { return shapes_; }

 private:
  // Calls visit(pixel) for every pixel whose center sees the object.
  template <class Visit>
  void raster(const LayoutObject& obj, std::size_t i, Visit&& visit) const;

  Mat3 camera_R_;
  Vec3 camera_t_;
  CameraIntrinsics K_;
  RefineConfig cfg_;
  ShapeSet shapes_;
  std::vector<std::vector<VoxelFace>> faces_;
  std::vector<const Bitmap*> masks_;
  std::vector<std::size_t> mask_area_;
  std::vector<std::uint16_t> cover_;  // number of masks on each pixel
  mutable std::vector<std::uint32_t> stamp_;
  mutable std::uint32_t generation_ = 0;
};

// lambda1 * sum |t - t_update|^2 + sum normalized mask symmetric difference.
double objective(const OptState& state, const LayoutDocument& layout, const SceneBundle& bundle,
                 const AssetLibrary* library, const RefineConfig& config = {});

// Voxel overlap measure of the whole layout.
std::size_t layout_overlap(const LayoutDocument& layout, const AssetLibrary* library,
                           double voxel_cell);

// Metropolis search over unfrozen translation components. Moves that
// increase the voxel overlap are rejected; the best state seen (fewest
// overlaps, then lowest objective) is written back to `layout`.
OptState anneal_translations(OptState state, LayoutDocument& layout, const SceneGraph& graph,
                             const SceneBundle& bundle, const AssetLibrary* library,
                             const RefineConfig& config = {});

// Drops floating objects straight down onto their supports, parents first,
// each carrying its subtree.
LayoutDocument settle(LayoutDocument layout, const SceneGraph& graph, const AssetLibrary* library,
                      const RefineConfig& config = {});

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

}  // namespace layoutforge
