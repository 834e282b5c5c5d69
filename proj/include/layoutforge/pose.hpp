#pragma once

#include "layoutforge/features.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/homography.hpp"
#include "layoutforge/ingest.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <vector>

namespace layoutforge {

struct Correspondence {
  Vec2 tmpl_px;   // template patch center (relative to the map center)
  Vec2 query_px;  // query patch center
  double cosine = 0;
  bool inlier = false;
};

struct Correspondences {
  std::vector<Correspondence> pairs;
};

struct ViewScore {
  int view = 0;
  double score = 0;
};

enum class RotationSource { Visual, Geometric };

struct RotationEstimate {
  Mat3 R_best = Mat3::Identity();
  RotationSource source = RotationSource::Visual;
  std::vector<ViewScore> candidates;  // fine-selected views, best first
  std::vector<Mat3> visual;           // their rotations, same order
  double theta = 0;                   // min angle between OBB and visual candidates
  int obb_index = -1;                 // chosen OBB orientation, -1 when unavailable
  int visual_index = -1;
};

struct PoseConfig {
  int coarse_k = 10;
  int fine_k = 4;
  double min_cos = 0.5;
  double tau = std::numbers::pi / 5.0;
  HomographyConfig homography;
};

Correspondences match_patches(const PatchFeatureMap& tmpl, const PatchFeatureMap& query,
                              double min_cos = 0.5);
double sim_img(const Correspondences& corr);

// Top-k template views by sim_img, descending; ties keep the lower index.
std::vector<ViewScore> coarse_select(std::span<const PatchFeatureMap> templates,
                                     const PatchFeatureMap& query, int k = 10,
                                     double min_cos = 0.5);

// Re-ranks candidates by the in-plane rotation of their homography,
// ascending. Throws FineSelectionFailed when every candidate is dropped.
std::vector<ViewScore> fine_select(const std::vector<ViewScore>& candidates,
                                   std::span<const PatchFeatureMap> templates,
                                   const PatchFeatureMap& query, int k = 4,
                                   const HomographyConfig& config = {}, double min_cos = 0.5);

// Picks the OBB orientation closest to any visual candidate when the angle
// is within tau, else the first visual candidate.
RotationEstimate geometric_enhance(const std::vector<Mat3>& visual,
                                   const std::optional<std::array<Mat3, 4>>& obb_orientations,
                                   double tau = std::numbers::pi / 5.0);

// Full rotation estimate for one object. `world_from_virtual` maps the
// virtual camera looking at the object into the world frame.
RotationEstimate estimate_rotation(const Asset& asset, std::span<const PatchFeatureMap> templates,
                                   const PatchFeatureMap& query, const Mat3& world_from_virtual,
                                   const std::optional<Obb>& obb_world, const PoseConfig& config);

Vec3 init_translation(const Obb& obb);

// V(target ∩ asset) - V(target ∪ asset) for the asset box centered on the
// target with rotation R and scale s.
double scale_objective(const Vec3& extents, const Mat3& R, const Vec3& s, const Obb& target);

// Maps free parameters to a full scale vector for the given mode.
Vec3 scale_from_params(ScaleMode mode, const Vec3& extents, std::span<const double> params);
int scale_param_count(ScaleMode mode);

inline constexpr double kScaleMin = 0.2;
inline constexpr double kScaleMax = 5.0;

Vec3 optimize_scale(const Vec3& extents, ScaleMode mode, const Mat3& R, const Obb& target);

}  // namespace layoutforge
