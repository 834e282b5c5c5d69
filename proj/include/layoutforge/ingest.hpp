#pragma once

#include "layoutforge/features.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/image.hpp"
#include "layoutforge/voxel.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace layoutforge {

// Library category -> detector category, plus the exact preimage.
class CategoryMap {
 public:
  void add(const std::string& library_category, const std::string& detector_category);
  const std::map<std::string, std::string>& forward() const { return forward_; }
  const std::map<std::string, std::set<std::string>>& inverse() const { return inverse_; }
  // Empty set for unknown detector categories.
  const std::set<std::string>& preimage(const std::string& detector_category) const;
  std::optional<std::string> detector_of(const std::string& library_category) const;

 private:
  std::map<std::string, std::string> forward_;
  std::map<std::string, std::set<std::string>> inverse_;
};

// Recorded answers to the qualitative questions about the scene.
struct OracleRecord {
  std::set<MaskId> floor_supported;
  std::set<MaskId> ceiling_supported;
  std::map<MaskId, int> wall_contacts;
  std::map<std::pair<MaskId, MaskId>, bool> occlusion_support;  // (supporter, supported)
  std::map<MaskId, Vec3> object_dims;                           // (l, w, h)
  std::set<MaskId> excluded;
};

enum class ScaleMode { HeightFree, TwoLongAxes, FullyFree };
std::string to_string(ScaleMode mode);
ScaleMode scale_mode_from_string(const std::string& s);

// Axis-aligned interior box in the asset frame.
struct Subspace {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct TemplateView {
  Mat3 rotation = Mat3::Identity();  // camera_from_object for this viewpoint
  std::string feature;               // path relative to the library root
};

struct Asset {
  AssetId id;
  std::string category;  // library-space label
  Vec3 extents = Vec3::Ones();
  ScaleMode scale_mode = ScaleMode::FullyFree;
  std::vector<Subspace> subspaces;
  VoxelGrid voxel;
  std::vector<TemplateView> template_views;
  std::vector<std::string> thumbnail_views;
};

struct AssetManifest {
  std::vector<Asset> assets;
  CategoryMap categories;

  const Asset* find(const AssetId& id) const;
  void validate() const;
};

// Manifest plus the feature files it references, loaded into memory.
struct AssetLibrary {
  AssetManifest manifest;
  std::map<AssetId, std::vector<PatchFeatureMap>> templates;
  std::map<AssetId, std::vector<GlobalFeature>> thumbnails;

  const Asset& asset(const AssetId& id) const;
};

struct SceneBundle {
  CameraIntrinsics camera;
  DepthMap depth;
  std::vector<Mask> masks;  // ascending id
  std::optional<OracleRecord> oracle;
  std::map<MaskId, PatchFeatureMap> query_patches;
  std::map<MaskId, GlobalFeature> query_globals;

  const Mask& mask(MaskId id) const;
  bool has_mask(MaskId id) const;
  void validate() const;
};

enum class SupportKind { None, Floor, Contact, Internal, Ceiling };
std::string to_string(SupportKind kind);
SupportKind support_kind_from_string(const std::string& s);

struct SupportInfo {
  SupportKind kind = SupportKind::None;
  MaskId parent = kFloorId;
  double d_vertical = 0;
};

// Placed instance of a library asset: p_world = R * (s .* p_asset) + t.
struct LayoutObject {
  AssetId asset_id;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  Vec3 s = Vec3::Ones();
  MaskId source_mask = 0;
  std::string category;        // detector-space label
  std::string asset_category;  // library-space label
  Vec3 extents = Vec3::Ones(); // canonical asset extents (unscaled)
  SupportInfo support;
  std::optional<int> wall;

  Pose pose() const { return {R, t, s}; }
  Obb obb() const { return {t, R, 0.5 * s.cwiseProduct(extents)}; }
  void validate() const;
};

struct RoomInfo {
  double floor_height = 0;
  std::optional<double> ceiling_height;
  std::vector<Plane> walls;  // world frame
  std::vector<double> wall_lengths;
};

// Layouts live in a gravity-aligned world frame (z up, floor at z = 0);
// camera_from_world ties it back to the image.
struct LayoutDocument {
  std::vector<LayoutObject> objects;
  Mat3 camera_R = Mat3::Identity();
  Vec3 camera_t = Vec3::Zero();
  RoomInfo room;
  std::vector<std::string> warnings;

  Vec3 to_camera(const Vec3& p) const { return camera_R * p + camera_t; }
  const LayoutObject* find(MaskId id) const;
};

SceneBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const SceneBundle& bundle, const std::filesystem::path& dir);

AssetLibrary load_library(const std::filesystem::path& dir);
void save_library(const AssetLibrary& library, const std::filesystem::path& dir);

void save_layout(const LayoutDocument& layout, const std::filesystem::path& path);
LayoutDocument load_layout(const std::filesystem::path& path);

// PFM: "Pf" header, negative scale for little-endian, rows stored bottom-up.
DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace layoutforge
