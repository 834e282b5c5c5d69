#include "layoutforge/geometry.hpp"

#include "layoutforge/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace layoutforge {

namespace {

constexpr double kPi = std::numbers::pi;

// Orthonormal basis (u, v) of the plane orthogonal to `up`, v = up x u.
std::pair<Vec3, Vec3> plane_basis(const Vec3& up) {
  Vec3 ref = std::abs(up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 u = (ref - ref.dot(up) * up).normalized();
  Vec3 v = up.cross(u);
  return {u, v};
}

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

Obb axis_aligned_fallback(const PointCloud& cloud, const Vec3& up) {
  auto [u, v] = plane_basis(up);
  Mat3 axes;
  axes << u, v, up;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : cloud.points) {
    Vec3 q = axes.transpose() * p;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  Obb box;
  box.axes = axes;
  box.center = axes * (0.5 * (lo + hi));
  box.half_extents = (0.5 * (hi - lo)).cwiseMax(1e-6);
  return box;
}

// Least-squares plane through points; normal is the smallest principal axis.
Plane fit_plane_lsq(const std::vector<Vec3>& pts) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) {
    Vec3 q = p - centroid;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  Vec3 n = es.eigenvectors().col(0).normalized();
  return Plane{n, n.dot(centroid)};
}

Plane orient_towards(Plane p, const Vec3& point) {
  if (p.signed_distance(point) < 0) {
    p.n = -p.n;
    p.d = -p.d;
  }
  return p;
}

std::vector<std::size_t> collect_inliers(const std::vector<Vec3>& pts,
                                         const std::vector<std::size_t>& idx,
                                         const Plane& plane, double thr) {
  std::vector<std::size_t> out;
  for (std::size_t i : idx) {
    if (std::abs(plane.signed_distance(pts[i])) < thr) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> set_minus(const std::vector<std::size_t>& all,
                                   const std::vector<std::size_t>& removed) {
  std::vector<std::size_t> out;
  std::set_difference(all.begin(), all.end(), removed.begin(), removed.end(),
                      std::back_inserter(out));
  return out;
}

struct BestPlane {
  Plane plane;
  std::size_t inliers = 0;
  bool found = false;
};

BestPlane pick_best(const std::vector<Vec3>& subset, const std::vector<Plane>& hypotheses,
                    double thr) {
  BestPlane best;
  if (hypotheses.empty()) return best;
  const auto counts = kernels::count_plane_inliers(subset, hypotheses, thr);
  for (std::size_t h = 0; h < hypotheses.size(); ++h) {
    if (!best.found || counts[h] > best.inliers) {
      best = {hypotheses[h], counts[h], true};
    }
  }
  return best;
}

}  // namespace

std::array<Vec3, 8> Obb::corners() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    Vec3 sgn((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out[i] = center + axes * sgn.cwiseProduct(half_extents);
  }
  return out;
}

bool Obb::contains(const Vec3& p, double inflate) const {
  Vec3 q = to_local(p);
  return (q.cwiseAbs().array() <= (half_extents.array() + inflate)).all();
}

double Obb::radius_along(const Vec3& dir) const {
  return half_extents.x() * std::abs(axes.col(0).dot(dir)) +
         half_extents.y() * std::abs(axes.col(1).dot(dir)) +
         half_extents.z() * std::abs(axes.col(2).dot(dir));
}

bool obb_contains(const Obb& outer, const Obb& inner, double inflate) {
  for (const Vec3& c : inner.corners()) {
    if (!outer.contains(c, inflate)) return false;
  }
  return true;
}

PointCloud depth_to_pointcloud(const DepthMap& depth, const CameraIntrinsics& K,
                               const Bitmap* mask) {
  if (depth.width != K.width || depth.height != K.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth size differs from camera image size");
  }
  if (mask && (mask->width != depth.width || mask->height != depth.height)) {
    throw Error(ErrorCode::DimensionMismatch, "mask size differs from depth size");
  }
  PointCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (mask && !mask->at(u, v)) continue;
      const double z = depth.at(u, v);
      if (!(z > 0)) continue;
      cloud.points.emplace_back((u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z);
    }
  }
  return cloud;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

ObbFit fit_obb(const PointCloud& cloud, const Vec3& up_in) {
  if (cloud.empty()) throw Error(ErrorCode::Degenerate, "fit_obb: empty point cloud");
  const Vec3 up = up_in.normalized();
  auto [u, v] = plane_basis(up);

  std::vector<Vec2> flat;
  flat.reserve(cloud.size());
  double hmin = std::numeric_limits<double>::infinity();
  double hmax = -hmin;
  for (const Vec3& p : cloud.points) {
    flat.emplace_back(p.dot(u), p.dot(v));
    const double h = p.dot(up);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  const std::vector<Vec2> hull = convex_hull(flat);
  if (hull.size() < 3) return {axis_aligned_fallback(cloud, up), true};

  // Rotating calipers: the optimal rectangle has a side collinear with a
  // hull edge, so it suffices to test every edge direction.
  double best_area = std::numeric_limits<double>::infinity();
  double best_angle = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    Vec2 e = hull[(i + 1) % hull.size()] - hull[i];
    const double len = e.norm();
    if (len <= 0) continue;
    e /= len;
    const Vec2 f(-e.y(), e.x());
    double emin = std::numeric_limits<double>::infinity(), emax = -emin;
    double fmin = emin, fmax = -emin;
    for (const Vec2& q : hull) {
      emin = std::min(emin, q.dot(e));
      emax = std::max(emax, q.dot(e));
      fmin = std::min(fmin, q.dot(f));
      fmax = std::max(fmax, q.dot(f));
    }
    const double area = (emax - emin) * (fmax - fmin);
    if (area < best_area) {
      best_area = area;
      best_angle = std::atan2(e.y(), e.x());
    }
  }
  if (!(best_area > 0)) return {axis_aligned_fallback(cloud, up), true};

  // Canonical heading in [0, 90deg).
  double angle = best_angle - std::floor(best_angle / (kPi / 2)) * (kPi / 2);
  if (angle >= kPi / 2 - 1e-12) angle = 0;
  const Vec2 e(std::cos(angle), std::sin(angle));
  const Vec2 f(-e.y(), e.x());
  double emin = std::numeric_limits<double>::infinity(), emax = -emin;
  double fmin = emin, fmax = -emin;
  for (const Vec2& q : hull) {
    emin = std::min(emin, q.dot(e));
    emax = std::max(emax, q.dot(e));
    fmin = std::min(fmin, q.dot(f));
    fmax = std::max(fmax, q.dot(f));
  }
  const Vec3 e3 = e.x() * u + e.y() * v;
  const Vec3 f3 = up.cross(e3);
  const Vec2 c2 = 0.5 * (emin + emax) * e + 0.5 * (fmin + fmax) * f;

  Obb box;
  box.axes << e3, f3, up;
  box.center = c2.x() * u + c2.y() * v + 0.5 * (hmin + hmax) * up;
  box.half_extents =
      Vec3(0.5 * (emax - emin), 0.5 * (fmax - fmin), 0.5 * (hmax - hmin)).cwiseMax(1e-6);
  return {box, false};
}

RoomFrame fit_room_planes(const PointCloud& background, const RansacConfig& cfg,
                          const std::optional<Vec3>& gravity,
                          std::optional<Vec3> camera_center, const PointCloud* foreground) {
  const std::vector<Vec3>& pts = background.points;
  if (pts.size() < cfg.min_inliers || pts.size() < 3) {
    throw Error(ErrorCode::NoFloor, "fit_room_planes: too few background points");
  }
  const Vec3 viewpoint = camera_center.value_or(Vec3::Zero());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> remaining(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) remaining[i] = i;

  auto subset_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<Vec3> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(pts[i]);
    return out;
  };

  // Floor.
  const double prior_cos = std::cos(cfg.floor_prior_deg * kPi / 180.0);
  std::vector<Plane> hypotheses;
  {
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    for (int it = 0; it < cfg.iterations; ++it) {
      const Vec3& a = pts[pick(rng)];
      const Vec3& b = pts[pick(rng)];
      const Vec3& c = pts[pick(rng)];
      Vec3 n = (b - a).cross(c - a);
      if (n.norm() < 1e-12) continue;
      n.normalize();
      if (gravity && std::abs(n.dot(-*gravity)) < prior_cos) continue;
      hypotheses.push_back(Plane{n, n.dot(a)});
    }
  }
  BestPlane floor = pick_best(pts, hypotheses, cfg.inlier_threshold);
  if (!floor.found || floor.inliers < cfg.min_inliers) {
    throw Error(ErrorCode::NoFloor, "fit_room_planes: no plane meets the inlier threshold");
  }
  std::vector<std::size_t> inl = collect_inliers(pts, remaining, floor.plane, cfg.inlier_threshold);
  Plane floor_plane = fit_plane_lsq(subset_of(inl));
  if (gravity && std::abs(floor_plane.n.dot(-*gravity)) < prior_cos) {
    floor_plane = floor.plane;  // refinement left the prior cone; keep the hypothesis
  }
  floor_plane = orient_towards(floor_plane, viewpoint);
  inl = collect_inliers(pts, remaining, floor_plane, cfg.inlier_threshold);
  remaining = set_minus(remaining, inl);

  RoomFrame room;
  room.floor = floor_plane;
  room.up = floor_plane.n;
  const Vec3 up = room.up;
  const double manhattan_sin = std::sin(cfg.manhattan_tolerance_deg * kPi / 180.0);

  // Walls: vertical planes through two sampled points.
  for (int w = 0; w < cfg.max_walls && remaining.size() >= cfg.min_inliers; ++w) {
    const std::vector<Vec3> sub = subset_of(remaining);
    std::uniform_int_distribution<std::size_t> pick(0, sub.size() - 1);
    hypotheses.clear();
    for (int it = 0; it < cfg.iterations; ++it) {
      const Vec3& a = sub[pick(rng)];
      const Vec3& b = sub[pick(rng)];
      Vec3 n = (b - a).cross(up);
      if (n.norm() < 1e-9) continue;
      n.normalize();
      if (!room.walls.empty()) {
        const Vec3 w0 = room.walls.front().n;
        const Vec3 w1 = up.cross(w0);
        const double c0 = n.dot(w0), c1 = n.dot(w1);
        // Snap to whichever Manhattan direction is nearest.
        if (std::abs(c0) >= std::abs(c1)) {
          if (std::abs(c1) > manhattan_sin) continue;
          n = c0 > 0 ? w0 : Vec3(-w0);
        } else {
          if (std::abs(c0) > manhattan_sin) continue;
          n = c1 > 0 ? w1 : Vec3(-w1);
        }
      }
      hypotheses.push_back(Plane{n, n.dot(a)});
    }
    BestPlane wall = pick_best(sub, hypotheses, cfg.inlier_threshold);
    if (!wall.found || wall.inliers < cfg.min_inliers) break;

    inl = collect_inliers(pts, remaining, wall.plane, cfg.inlier_threshold);
    Plane refined = wall.plane;
    if (room.walls.empty()) {
      // Horizontal least-squares line through the inliers.
      auto [bu, bv] = plane_basis(up);
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (std::size_t i : inl) mean += Eigen::Vector2d(pts[i].dot(bu), pts[i].dot(bv));
      mean /= static_cast<double>(inl.size());
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (std::size_t i : inl) {
        Eigen::Vector2d q = Eigen::Vector2d(pts[i].dot(bu), pts[i].dot(bv)) - mean;
        cov += q * q.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
      Eigen::Vector2d n2 = es.eigenvectors().col(0);
      refined.n = (n2.x() * bu + n2.y() * bv).normalized();
    }
    // Gram-Schmidt against the floor normal.
    refined.n = (refined.n - refined.n.dot(up) * up).normalized();
    double sum = 0;
    for (std::size_t i : inl) sum += refined.n.dot(pts[i]);
    refined.d = sum / static_cast<double>(inl.size());
    refined = orient_towards(refined, viewpoint);
    inl = collect_inliers(pts, remaining, refined, cfg.inlier_threshold);
    if (inl.size() < cfg.min_inliers) break;

    const Vec3 along = up.cross(refined.n);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i : inl) {
      lo = std::min(lo, along.dot(pts[i]));
      hi = std::max(hi, along.dot(pts[i]));
    }
    room.walls.push_back(refined);
    room.wall_lengths.push_back(hi - lo);
    remaining = set_minus(remaining, inl);
  }

  // Ceiling: horizontal plane above every foreground point.
  double top = floor_plane.n.dot(viewpoint) - floor_plane.d;
  if (foreground) {
    for (const Vec3& p : foreground->points) top = std::max(top, p.dot(up) - floor_plane.d);
  }
  top = std::max(top, 0.0);
  if (remaining.size() >= cfg.min_inliers) {
    const std::vector<Vec3> sub = subset_of(remaining);
    std::vector<std::size_t> above;
    for (std::size_t i = 0; i < sub.size(); ++i) {
      if (sub[i].dot(up) - floor_plane.d > top + cfg.inlier_threshold) above.push_back(i);
    }
    if (above.size() >= cfg.min_inliers) {
      std::uniform_int_distribution<std::size_t> pick(0, above.size() - 1);
      hypotheses.clear();
      for (int it = 0; it < cfg.iterations; ++it) {
        const Vec3& a = sub[above[pick(rng)]];
        hypotheses.push_back(Plane{-up, -up.dot(a)});
      }
      BestPlane ceil = pick_best(sub, hypotheses, cfg.inlier_threshold);
      if (ceil.found && ceil.inliers >= cfg.min_inliers) {
        inl = collect_inliers(pts, remaining, ceil.plane, cfg.inlier_threshold);
        double sum = 0;
        for (std::size_t i : inl) sum += up.dot(pts[i]);
        Plane c{-up, -sum / static_cast<double>(inl.size())};
        room.ceiling = orient_towards(c, viewpoint);
      }
    }
  }
  return room;
}

bool obb_intersect(const Obb& a, const Obb& b) {
  const Vec3 delta = b.center - a.center;
  std::array<Vec3, 15> axes;
  int n = 0;
  for (int i = 0; i < 3; ++i) axes[n++] = a.axes.col(i);
  for (int i = 0; i < 3; ++i) axes[n++] = b.axes.col(i);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Vec3 c = a.axes.col(i).cross(b.axes.col(j));
      if (c.norm() > 1e-9) axes[n++] = c.normalized();
    }
  }
  for (int k = 0; k < n; ++k) {
    const Vec3& l = axes[k];
    if (std::abs(delta.dot(l)) > a.radius_along(l) + b.radius_along(l)) return false;
  }
  return true;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  constexpr double kEps = 1e-18;
  double s = 0, t = 0;
  if (a <= kEps && e <= kEps) return r.norm();
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > kEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

namespace {

double point_box_distance(const Vec3& p, const Obb& box) {
  const Vec3 q = box.to_local(p);
  const Vec3 clamped = q.cwiseMax(-box.half_extents).cwiseMin(box.half_extents);
  return (q - clamped).norm();
}

constexpr std::array<std::pair<int, int>, 12> kBoxEdges = {{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // along x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // along z
}};

}  // namespace

double set_distance(const Obb& a, const Obb& b) {
  if (obb_intersect(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : ca) best = std::min(best, point_box_distance(p, b));
  for (const Vec3& p : cb) best = std::min(best, point_box_distance(p, a));
  for (const auto& [i0, i1] : kBoxEdges) {
    for (const auto& [j0, j1] : kBoxEdges) {
      best = std::min(best, segment_segment_distance(ca[i0], ca[i1], cb[j0], cb[j1]));
    }
  }
  return best;
}

double set_distance(const Obb& a, const Plane& p) {
  const double s = p.signed_distance(a.center);
  const double r = a.radius_along(p.n);
  return std::abs(s) <= r ? 0.0 : std::abs(s) - r;
}

double signed_plane_gap(const Obb& a, const Plane& p) {
  return p.signed_distance(a.center) - a.radius_along(p.n);
}

double geodesic_angle(const Mat3& a, const Mat3& b) {
  const Mat3 r = a.transpose() * b;
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * axis.norm();
  // atan2 keeps full precision near 0 and pi where acos does not.
  return std::atan2(s, c);
}

Mat3 rot_x(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix(); }
Mat3 axis_angle(const Vec3& axis, double rad) {
  return Eigen::AngleAxisd(rad, axis.normalized()).toRotationMatrix();
}

double yaw_of(const Mat3& r) { return std::atan2(r(1, 0), r(0, 0)); }

Eigen::Vector4d to_quaternion_wxyz(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  Eigen::Vector4d out(q.w(), q.x(), q.y(), q.z());
  if (out[0] < 0) out = -out;
  return out;
}

Mat3 from_quaternion_wxyz(const Eigen::Vector4d& q) {
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

bool is_rotation(const Mat3& r, double tol) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

Mat3 snap_upright(const Mat3& r, const Vec3& up_in) {
  const Vec3 up = up_in.normalized();
  Vec3 x = r.col(0) - r.col(0).dot(up) * up;
  if (x.norm() < 1e-6) {
    Vec3 y = r.col(1) - r.col(1).dot(up) * up;
    x = y.cross(up);
  }
  x.normalize();
  Mat3 out;
  out << x, up.cross(x), up;
  return out;
}

std::array<Mat3, 4> obb_vertical_orientations(const Obb& obb, const Vec3& up,
                                              double tolerance_deg) {
  const double cos_tol = std::cos(tolerance_deg * kPi / 180.0);
  int up_axis = -1;
  double best = 0;
  for (int i = 0; i < 3; ++i) {
    const double c = std::abs(obb.axes.col(i).dot(up));
    if (c >= cos_tol && c > best) {
      best = c;
      up_axis = i;
    }
  }
  if (up_axis < 0) {
    throw Error(ErrorCode::NotUpright, "OBB has no axis aligned with the up direction");
  }
  Vec3 z = obb.axes.col(up_axis);
  if (z.dot(up) < 0) z = -z;
  const Vec3 x = obb.axes.col(up_axis == 0 ? 1 : 0);
  Mat3 base;
  base << x, z.cross(x), z;
  std::array<Mat3, 4> out;
  for (int k = 0; k < 4; ++k) out[k] = base * rot_z(k * kPi / 2);
  return out;
}

}  // namespace layoutforge
