#pragma once

#include "layoutforge/ingest.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace layoutforge {

// Axis-aligned solid piece of an asset, in the asset frame.
struct PartBox {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

enum class SynthRole { Floor, Small, Ceiling };

struct SynthAssetInfo {
  std::vector<PartBox> parts;
  GlobalFeature base;        // planted global descriptor
  SynthRole role = SynthRole::Floor;
  bool surface = false;      // children may rest on its top
  bool wall_item = false;    // usually stands with its back (+y) to a wall
  bool stackable = false;    // small object that can carry another one
};

struct SynthLibrary {
  AssetLibrary library;
  std::map<AssetId, SynthAssetInfo> info;
};

inline constexpr int kSynthPatchGrid = 6;
inline constexpr int kSynthPatchDim = 12;
inline constexpr int kSynthGlobalDim = 32;

// Deterministic library of box-like furniture built from parts, with
// random template/thumbnail descriptors.
SynthLibrary make_synth_library(std::uint64_t seed = 2024);

// Voxelizes parts on the asset grid (cell centers inside any part).
VoxelGrid voxelize_parts(const std::vector<PartBox>& parts, const Vec3& extents, double cell);

struct SynthConfig {
  int objects = 12;
  std::uint64_t seed = 7;
  double depth_noise = 0;       // meters, Gaussian
  double descriptor_noise = 0;  // per component, added to query patches
  int width = 320;
  int height = 240;
  int min_visible_px = 60;
};

struct SynthScene {
  SceneBundle bundle;
  LayoutDocument truth;         // world frame of the generator
  std::map<MaskId, int> true_view;
  std::vector<std::string> warnings;
};

SynthScene make_synth_scene(const SynthLibrary& lib, const SynthConfig& config);

// Entry distance along `dir` (camera frame, unit z component not required)
// of the ray from the origin into `box`; nullopt on a miss or when the
// origin lies inside.
std::optional<double> ray_box_entry(const Vec3& dir, const Obb& box);

// World-frame OBBs of an object's parts.
std::vector<Obb> object_part_boxes(const LayoutObject& obj, const std::vector<PartBox>& parts);

}  // namespace layoutforge
