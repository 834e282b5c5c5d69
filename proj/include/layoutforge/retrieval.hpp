#pragma once

#include "layoutforge/ingest.hpp"

#include <optional>
#include <vector>

namespace layoutforge {

struct RetrievalScore {
  AssetId asset_id;
  double sim_mean = 0;
  double delta_s = 0;
  double score = 0;
};

struct RetrievalConfig {
  double alpha = 0.1;
};

// |l_A/h_A - l_m/h_m| + |w_A/h_A - w_m/h_m|, dims given as (l, w, h).
double size_penalty(const Vec3& asset_dims, const Vec3& query_dims);

// (l, w, h) with l >= w from a box's extents (x, y, z).
Vec3 footprint_dims(const Vec3& extents);

// Ranks the assets whose library category maps to the mask's detector
// category. Query dims come from the oracle, else `fallback_dims`.
std::vector<RetrievalScore> retrieve(MaskId mask_id, const SceneBundle& bundle,
                                     const AssetLibrary& library,
                                     const RetrievalConfig& config = {},
                                     const std::optional<Vec3>& fallback_dims = std::nullopt);

}  // namespace layoutforge
