#include "layoutforge/viewpoints.hpp"

#include <array>
#include <cmath>
#include <map>
#include <utility>

namespace layoutforge {

std::vector<Vec3> icosphere_vertices(int level) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return verts;
}

std::vector<Vec3> dodecahedron_vertices() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double inv = 1.0 / phi;
  std::vector<Vec3> out;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) out.emplace_back(sx, sy, sz);
    }
  }
  for (int a : {-1, 1}) {
    for (int b : {-1, 1}) {
      out.emplace_back(0, a * inv, b * phi);
      out.emplace_back(a * inv, b * phi, 0);
      out.emplace_back(a * phi, 0, b * inv);
    }
  }
  for (Vec3& v : out) v.normalize();
  return out;
}

Mat3 look_at_rotation(const Vec3& direction) {
  const Vec3 forward = -direction.normalized();  // camera z, object frame
  Vec3 down = -Vec3::UnitZ();
  // Looking straight up or down: keep the object's -y as image down.
  if (std::abs(forward.dot(down)) > 1.0 - 1e-9) down = -Vec3::UnitY();
  const Vec3 x = down.cross(forward).normalized();
  const Vec3 y = forward.cross(x);
  Mat3 object_from_camera;
  object_from_camera << x, y, forward;
  return object_from_camera.transpose();
}

Mat3 virtual_camera_rotation(const Vec3& target, const Vec3& up) {
  const Vec3 forward = target.normalized();
  Vec3 down = -up.normalized();
  if (std::abs(forward.dot(down)) > 1.0 - 1e-9) down = Vec3::UnitY();
  const Vec3 x = down.cross(forward).normalized();
  const Vec3 y = forward.cross(x);
  Mat3 r;
  r << x, y, forward;
  return r;
}

std::vector<Mat3> template_view_rotations() {
  std::vector<Mat3> out;
  for (const Vec3& d : icosphere_vertices(2)) out.push_back(look_at_rotation(d));
  return out;
}

std::vector<Mat3> thumbnail_view_rotations() {
  std::vector<Mat3> out;
  for (const Vec3& d : dodecahedron_vertices()) out.push_back(look_at_rotation(d));
  return out;
}

}  // namespace layoutforge
