#pragma once

#include "layoutforge/geometry.hpp"

#include <vector>

namespace layoutforge {

// Convex polytope stored as its face polygons (vertices counter-clockwise
// seen from outside).
struct Polytope {
  std::vector<std::vector<Vec3>> faces;

  static Polytope from_obb(const Obb& box);
  bool empty() const { return faces.empty(); }
  // Keeps the part with n.x <= d.
  Polytope clip(const Vec3& n, double d) const;
  double volume() const;
};

// Exact volume of the intersection of two boxes.
double obb_intersection_volume(const Obb& a, const Obb& b);

}  // namespace layoutforge
