#pragma once

#include "layoutforge/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace layoutforge {

// Grid of patch descriptors. All-zero descriptors mark background patches.
struct PatchFeatureMap {
  int rows = 0, cols = 0, dim = 0;
  double patch_px = 14.0;
  std::vector<float> data;           // rows * cols * dim, row-major
  std::vector<std::uint8_t> valid;   // rows * cols

  int size() const { return rows * cols; }
  std::span<const float> at(int idx) const {
    return {data.data() + static_cast<std::size_t>(idx) * dim, static_cast<std::size_t>(dim)};
  }
  bool is_valid(int idx) const { return valid[idx] != 0; }
  // Patch center in pixels, relative to the map center.
  Vec2 patch_center(int idx) const {
    const int r = idx / cols, c = idx % cols;
    return {(c + 0.5 - cols / 2.0) * patch_px, (r + 0.5 - rows / 2.0) * patch_px};
  }
  // Normalizes every non-zero descriptor and rebuilds `valid`.
  void finalize();
};

struct GlobalFeature {
  std::vector<float> vec;  // unit norm
};

double cosine(std::span<const float> a, std::span<const float> b);

// Binary layout: "LFF1", uint32 rows, cols, dim, then float32 data, all
// little-endian.
PatchFeatureMap read_patch_features(const std::filesystem::path& path);
void write_patch_features(const std::filesystem::path& path, const PatchFeatureMap& map);
// Global features use the same container with rows = cols = 1.
GlobalFeature read_global_feature(const std::filesystem::path& path);
void write_global_feature(const std::filesystem::path& path, const GlobalFeature& f);

}  // namespace layoutforge
