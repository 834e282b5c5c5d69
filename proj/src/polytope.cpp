#include "layoutforge/polytope.hpp"

#include <algorithm>
#include <cmath>

namespace layoutforge {

namespace {

constexpr double kPlaneEps = 1e-12;

}  // namespace

Polytope Polytope::from_obb(const Obb& box) {
  const auto c = box.corners();
  // Corner i has bit0 -> +x, bit1 -> +y, bit2 -> +z.
  static constexpr int kFaces[6][4] = {
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
  };
  Polytope p;
  for (const auto& f : kFaces) p.faces.push_back({c[f[0]], c[f[1]], c[f[2]], c[f[3]]});
  return p;
}

Polytope Polytope::clip(const Vec3& n, double d) const {
  Polytope out;
  std::vector<Vec3> cut;  // points on the clipping plane
  bool face_on_plane = false;
  for (const auto& face : faces) {
    std::vector<Vec3> kept;
    const std::size_t m = face.size();
    // A face already lying in the plane is the cap; adding another would
    // count that area twice.
    if (std::all_of(face.begin(), face.end(),
                    [&](const Vec3& p) { return std::abs(n.dot(p) - d) <= kPlaneEps; })) {
      face_on_plane = true;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3& a = face[i];
      const Vec3& b = face[(i + 1) % m];
      const double da = n.dot(a) - d;
      const double db = n.dot(b) - d;
      if (da <= kPlaneEps) kept.push_back(a);
      if (std::abs(da) <= kPlaneEps) cut.push_back(a);
      if ((da < -kPlaneEps && db > kPlaneEps) || (da > kPlaneEps && db < -kPlaneEps)) {
        const Vec3 x = a + (b - a) * (da / (da - db));
        kept.push_back(x);
        cut.push_back(x);
      }
    }
    if (kept.size() >= 3) out.faces.push_back(std::move(kept));
  }
  if (out.faces.empty()) return out;

  // Cap polygon: the cut points ordered by angle around their centroid.
  if (cut.size() >= 3 && !face_on_plane) {
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : cut) centroid += p;
    centroid /= static_cast<double>(cut.size());
    Vec3 u = (std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(n).normalized();
    Vec3 v = n.cross(u);
    std::vector<std::pair<double, Vec3>> ordered;
    for (const Vec3& p : cut) {
      const Vec3 q = p - centroid;
      ordered.emplace_back(std::atan2(q.dot(v), q.dot(u)), p);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<Vec3> cap;
    for (const auto& [angle, p] : ordered) {
      if (cap.empty() || (cap.back() - p).norm() > 1e-12) cap.push_back(p);
    }
    if (cap.size() >= 3 && (cap.front() - cap.back()).norm() <= 1e-12) cap.pop_back();
    if (cap.size() >= 3) out.faces.push_back(std::move(cap));
  }
  return out;
}

double Polytope::volume() const {
  if (faces.empty()) return 0.0;
  // Divergence theorem against a reference point inside the hull; face
  // orientation does not matter since each term uses |area . (c - ref)|.
  Vec3 ref = Vec3::Zero();
  std::size_t count = 0;
  for (const auto& f : faces) {
    for (const Vec3& p : f) {
      ref += p;
      ++count;
    }
  }
  ref /= static_cast<double>(count);
  double vol = 0;
  for (const auto& f : faces) {
    Vec3 area = Vec3::Zero();
    for (std::size_t i = 1; i + 1 < f.size(); ++i) area += (f[i] - f[0]).cross(f[i + 1] - f[0]);
    area *= 0.5;
    vol += std::abs(area.dot(f[0] - ref)) / 3.0;
  }
  return vol;
}

double obb_intersection_volume(const Obb& a, const Obb& b) {
  if (!obb_intersect(a, b)) return 0.0;
  Polytope p = Polytope::from_obb(a);
  for (int axis = 0; axis < 3 && !p.empty(); ++axis) {
    const Vec3 n = b.axes.col(axis);
    const double c = n.dot(b.center);
    p = p.clip(n, c + b.half_extents[axis]);
    if (!p.empty()) p = p.clip(-n, -(c - b.half_extents[axis]));
  }
  return p.volume();
}

}  // namespace layoutforge
