#include "layoutforge/features.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace layoutforge {

static_assert(std::endian::native == std::endian::little, "feature I/O assumes little-endian");

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'F', 'F', '1'};

}  // namespace

void PatchFeatureMap::finalize() {
  valid.assign(static_cast<std::size_t>(size()), 0);
  for (int i = 0; i < size(); ++i) {
    float* d = data.data() + static_cast<std::size_t>(i) * dim;
    double n2 = 0;
    for (int k = 0; k < dim; ++k) n2 += static_cast<double>(d[k]) * d[k];
    if (n2 <= 0) continue;
    valid[i] = 1;
    // Already unit length in float precision: leave the bits alone so that
    // load/save is idempotent.
    if (std::abs(n2 - 1.0) < 1e-6) continue;
    const double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < dim; ++k) d[k] = static_cast<float>(d[k] * inv);
  }
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += static_cast<double>(a[k]) * b[k];
  return dot;
}

PatchFeatureMap read_patch_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFeature, "cannot open feature file " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t dims[3] = {0, 0, 0};
  in.read(magic.data(), 4);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || magic != kMagic) {
    throw Error(ErrorCode::Parse, path.string() + ": bad feature header");
  }
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0 || dims[0] > 4096 || dims[1] > 4096 ||
      dims[2] > 65536) {
    throw Error(ErrorCode::Parse, path.string() + ": implausible feature dimensions");
  }
  PatchFeatureMap map;
  map.rows = static_cast<int>(dims[0]);
  map.cols = static_cast<int>(dims[1]);
  map.dim = static_cast<int>(dims[2]);
  map.data.resize(static_cast<std::size_t>(map.rows) * map.cols * map.dim);
  in.read(reinterpret_cast<char*>(map.data.data()),
          static_cast<std::streamsize>(map.data.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated feature data");
  for (float f : map.data) {
    if (!std::isfinite(f)) throw Error(ErrorCode::Parse, path.string() + ": non-finite value");
  }
  map.finalize();
  return map;
}

void write_patch_features(const std::filesystem::path& path, const PatchFeatureMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(map.rows),
                                 static_cast<std::uint32_t>(map.cols),
                                 static_cast<std::uint32_t>(map.dim)};
  out.write(kMagic.data(), 4);
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(map.data.data()),
            static_cast<std::streamsize>(map.data.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

GlobalFeature read_global_feature(const std::filesystem::path& path) {
  PatchFeatureMap map = read_patch_features(path);
  if (map.rows != 1 || map.cols != 1) {
    throw Error(ErrorCode::Parse, path.string() + ": global feature must be 1x1xD");
  }
  if (!map.valid[0]) throw Error(ErrorCode::Parse, path.string() + ": zero global feature");
  return GlobalFeature{std::move(map.data)};
}

void write_global_feature(const std::filesystem::path& path, const GlobalFeature& f) {
  PatchFeatureMap map;
  map.rows = map.cols = 1;
  map.dim = static_cast<int>(f.vec.size());
  map.data = f.vec;
  write_patch_features(path, map);
}

}  // namespace layoutforge
