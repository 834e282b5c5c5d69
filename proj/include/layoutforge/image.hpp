#pragma once

#include "layoutforge/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace layoutforge {

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;
  // Optional gravity direction in the camera frame (unit). Used as the
  // floor-normal prior during plane extraction.
  std::optional<Vec3> gravity;

  void validate() const;

  // Pixel coordinates of a camera-frame point (z > 0 assumed).
  Vec2 project(const Vec3& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
  Vec3 ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
};

// Row-major depth in meters; values <= 0 are invalid.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;

  float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  void validate() const;
};

struct Bitmap {
  int width = 0, height = 0;
  std::vector<std::uint8_t> bits;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) {
    bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0;
  }
  std::size_t count() const;
  bool operator==(const Bitmap&) const = default;
};

// Inclusive pixel rectangle. Empty bitmaps get x0 > x1.
struct BBox2D {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const { return x0 > x1 || y0 > y1; }
  bool operator==(const BBox2D&) const = default;
};

BBox2D tight_bbox(const Bitmap& bitmap);

// Run lengths over the row-major bitmap, alternating off/on, starting with
// an "off" run (possibly zero).
std::vector<std::uint32_t> rle_encode(const Bitmap& bitmap);
Bitmap rle_decode(std::span<const std::uint32_t> runs, int width, int height);

// Same encoding over any 0/1 byte sequence (voxel occupancy uses it too).
std::vector<std::uint32_t> rle_encode_bits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> rle_decode_bits(std::span<const std::uint32_t> runs, std::size_t n);

struct Mask {
  MaskId id = 0;
  std::string category;  // detector-space label
  Bitmap bitmap;
  BBox2D bbox;
};

}  // namespace layoutforge
