#pragma once

#include "layoutforge/image.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace layoutforge {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// {x : n.x = d}. Normals are oriented so the room interior (and the camera)
// lies on the positive side.
struct Plane {
  Vec3 n = Vec3::UnitZ();
  double d = 0;

  double signed_distance(const Vec3& p) const { return n.dot(p) - d; }
};

struct Obb {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns are the box axes
  Vec3 half_extents = Vec3::Constant(0.5);

  std::array<Vec3, 8> corners() const;
  Vec3 to_local(const Vec3& p) const { return axes.transpose() * (p - center); }
  bool contains(const Vec3& p, double inflate = 1e-9) const;
  double volume() const { return 8.0 * half_extents.prod(); }
  // Extent of the box along a unit direction (support half-width).
  double radius_along(const Vec3& dir) const;
  // Min / max of the projection onto a unit direction.
  double min_along(const Vec3& dir) const { return center.dot(dir) - radius_along(dir); }
  double max_along(const Vec3& dir) const { return center.dot(dir) + radius_along(dir); }
};

// Every corner of `inner` lies inside `outer` (inflated by `inflate`).
bool obb_contains(const Obb& outer, const Obb& inner, double inflate = 1e-9);

struct RoomFrame {
  Plane floor;
  std::optional<Plane> ceiling;
  std::vector<Plane> walls;
  // Horizontal extent of the inliers of each wall, parallel to `walls`.
  std::vector<double> wall_lengths;
  Vec3 up = Vec3::UnitZ();
};

struct RansacConfig {
  int iterations = 1000;
  double inlier_threshold = 0.02;
  std::size_t min_inliers = 200;
  std::uint64_t seed = 42;
  int max_walls = 4;
  // Maximum deviation of the floor normal from -gravity when a prior is given.
  double floor_prior_deg = 5.0;
  // Walls must be within this angle of the first wall's frame (parallel or
  // perpendicular) before being snapped onto it.
  double manhattan_tolerance_deg = 10.0;
};

// Back-projects valid (and optionally masked) pixels into the camera frame.
PointCloud depth_to_pointcloud(const DepthMap& depth, const CameraIntrinsics& K,
                               const Bitmap* mask = nullptr);

struct ObbFit {
  Obb obb;
  bool degenerate = false;  // axis-aligned fallback was used
};

// Gravity-aligned box: one axis is `up`, the other two come from the
// minimum-area rectangle of the points projected on the plane orthogonal
// to `up` (rotating calipers over the convex hull).
ObbFit fit_obb(const PointCloud& cloud, const Vec3& up);

// Sequential RANSAC: floor, Manhattan walls orthogonal to the floor, and an
// optional ceiling parallel to the floor above `foreground_top` (the highest
// foreground point along the floor normal, in camera coordinates).
RoomFrame fit_room_planes(const PointCloud& background, const RansacConfig& config,
                          const std::optional<Vec3>& gravity = std::nullopt,
                          std::optional<Vec3> camera_center = Vec3::Zero(),
                          const PointCloud* foreground = nullptr);

bool obb_intersect(const Obb& a, const Obb& b);
double set_distance(const Obb& a, const Obb& b);
double set_distance(const Obb& a, const Plane& p);
// Signed gap between the box and the plane's positive half-space boundary:
// negative when the box crosses to the negative side.
double signed_plane_gap(const Obb& a, const Plane& p);

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);
double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                const Vec3& q2);

// Geodesic angle on SO(3), in [0, pi].
double geodesic_angle(const Mat3& a, const Mat3& b);

Mat3 rot_x(double rad);
Mat3 rot_y(double rad);
Mat3 rot_z(double rad);
Mat3 axis_angle(const Vec3& axis, double rad);
// Yaw of a rotation about +z: angle of R * x projected on the xy plane.
double yaw_of(const Mat3& r);
Eigen::Vector4d to_quaternion_wxyz(const Mat3& r);
Mat3 from_quaternion_wxyz(const Eigen::Vector4d& q);
bool is_rotation(const Mat3& r, double tol = 1e-6);
// Nearest rotation in the Frobenius sense.
Mat3 orthonormalize(const Mat3& m);
// Rotation whose third column is `up`, keeping the heading of `r` as close
// as possible.
Mat3 snap_upright(const Mat3& r, const Vec3& up);

// Four rotations {R_obb * Rz(k * 90deg)}, k = 0..3; R_obb has the OBB's up
// axis as its third column. Throws NotUpright when no axis is within
// `tolerance_deg` of `up`.
std::array<Mat3, 4> obb_vertical_orientations(const Obb& obb, const Vec3& up,
                                              double tolerance_deg = 1.0);

// 2-D convex hull (counter-clockwise, no collinear points).
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

}  // namespace layoutforge
