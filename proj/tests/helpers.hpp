#pragma once

#include "layoutforge/geometry.hpp"
#include "layoutforge/ingest.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace lft {

using namespace layoutforge;

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double deg(double r) { return r * 180.0 / 3.14159265358979323846; }
inline double rad(double d) { return d * 3.14159265358979323846 / 180.0; }

inline Obb box(const Vec3& center, const Vec3& half, double yaw = 0) {
  return {center, rot_z(yaw), half};
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("layoutforge_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline LayoutObject make_object(MaskId id, const Vec3& extents, const Vec3& t, double yaw = 0,
                                const std::string& category = "box") {
  LayoutObject o;
  o.asset_id = category + "_" + std::to_string(id);
  o.source_mask = id;
  o.category = category;
  o.asset_category = category;
  o.extents = extents;
  o.R = rot_z(yaw);
  o.t = t;
  return o;
}

}  // namespace lft
