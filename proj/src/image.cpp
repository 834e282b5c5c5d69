#include "layoutforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace layoutforge {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) {
    throw Error(ErrorCode::Validation, "camera: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::Validation, "camera: image size must be positive");
  }
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height)) {
    throw Error(ErrorCode::Validation, "camera: principal point outside the image");
  }
  if (gravity && std::abs(gravity->norm() - 1.0) > 1e-3) {
    throw Error(ErrorCode::Validation, "camera: gravity must be a unit vector");
  }
}

void DepthMap::validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::Validation, "depth: image size must be positive");
  }
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::Validation, "depth: value count does not match width*height");
  }
  for (float z : values) {
    if (!std::isfinite(z)) throw Error(ErrorCode::Validation, "depth: non-finite value");
  }
}

std::size_t Bitmap::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

BBox2D tight_bbox(const Bitmap& bitmap) {
  BBox2D box{bitmap.width, bitmap.height, -1, -1};
  for (int v = 0; v < bitmap.height; ++v) {
    for (int u = 0; u < bitmap.width; ++u) {
      if (!bitmap.at(u, v)) continue;
      box.x0 = std::min(box.x0, u);
      box.y0 = std::min(box.y0, v);
      box.x1 = std::max(box.x1, u);
      box.y1 = std::max(box.y1, v);
    }
  }
  if (box.x1 < 0) return BBox2D{};
  return box;
}

std::vector<std::uint32_t> rle_encode_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (std::uint8_t b : bits) {
    const std::uint8_t bit = b ? 1 : 0;
    if (bit != current) {
      runs.push_back(length);
      current = bit;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

std::vector<std::uint8_t> rle_decode_bits(std::span<const std::uint32_t> runs, std::size_t n) {
  const std::uint64_t total = std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
  if (total != n) {
    throw Error(ErrorCode::Validation,
                "rle: runs sum to " + std::to_string(total) + ", expected " + std::to_string(n));
  }
  std::vector<std::uint8_t> out(n, 0);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : runs) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(pos), run, value);
    pos += run;
    value ^= 1;
  }
  return out;
}

std::vector<std::uint32_t> rle_encode(const Bitmap& bitmap) { return rle_encode_bits(bitmap.bits); }

Bitmap rle_decode(std::span<const std::uint32_t> runs, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Validation, "rle: bad image size");
  Bitmap out(width, height);
  out.bits = rle_decode_bits(runs, out.bits.size());
  return out;
}

}  // namespace layoutforge
