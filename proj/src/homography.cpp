#include "layoutforge/homography.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace layoutforge {

namespace {

// Hartley conditioning: centroid to the origin, mean distance sqrt(2).
Mat3 conditioner(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const Vec2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0;
  for (const Vec2& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  const double s = mean > 1e-12 ? std::sqrt(2.0) / mean : 1.0;
  Mat3 T;
  T << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return T;
}

}  // namespace

std::optional<Mat3> homography_dlt(std::span<const Vec2> from, std::span<const Vec2> to) {
  const std::size_t n = from.size();
  if (n < 4 || to.size() != n) return std::nullopt;
  const Mat3 Tf = conditioner(from);
  const Mat3 Tt = conditioner(to);
  Eigen::MatrixXd A(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = Tf * from[i].homogeneous();
    const Vec3 q = Tt * to[i].homogeneous();
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // Rank < 8 means the sample does not pin H down (e.g. collinear points).
  if (sv.size() >= 8 && sv(7) <= 1e-10 * sv(0)) return std::nullopt;
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 H = Tt.inverse() * Hn * Tf;
  if (!H.allFinite() || H.norm() < 1e-15) return std::nullopt;
  return normalize_homography(H);
}

Mat3 normalize_homography(const Mat3& H) {
  Mat3 out = H * (std::sqrt(3.0) / H.norm());
  if (out.determinant() < 0) out = -out;
  return out;
}

double homography_rotation_score(const Mat3& H) {
  const Mat3 Hn = normalize_homography(H);
  Eigen::JacobiSVD<Mat3> svd(Hn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 uv = svd.matrixU() * svd.matrixV().transpose();
  return (uv - Mat3::Identity()).squaredNorm();
}

double reprojection_error(const Mat3& H, const Vec2& from, const Vec2& to) {
  const Vec3 p = H * from.homogeneous();
  if (std::abs(p.z()) < 1e-12) return std::numeric_limits<double>::infinity();
  return (p.hnormalized() - to).norm();
}

std::optional<HomographyFit> estimate_homography(std::span<const Vec2> from,
                                                 std::span<const Vec2> to,
                                                 const HomographyConfig& cfg) {
  const std::size_t n = from.size();
  if (n < 4 || to.size() != n) return std::nullopt;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  auto inliers_of = [&](const Mat3& H, std::vector<bool>& flags) {
    flags.assign(n, false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (reprojection_error(H, from[i], to[i]) < cfg.inlier_threshold_px) {
        flags[i] = true;
        ++count;
      }
    }
    return count;
  };

  std::optional<Mat3> best;
  std::vector<bool> best_flags, flags;
  std::size_t best_count = 0;
  std::array<Vec2, 4> a, b;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::array<std::size_t, 4> idx;
    for (int k = 0; k < 4; ++k) {
      do {
        idx[k] = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + k, idx[k]) != idx.begin() + k);
      a[k] = from[idx[k]];
      b[k] = to[idx[k]];
    }
    const auto H = homography_dlt(a, b);
    if (!H) continue;
    const std::size_t count = inliers_of(*H, flags);
    if (count > best_count) {
      best_count = count;
      best = H;
      best_flags = flags;
    }
    if (best_count == n) break;
  }
  if (!best || best_count < 4) return std::nullopt;

  std::vector<Vec2> fa, ta;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_flags[i]) {
      fa.push_back(from[i]);
      ta.push_back(to[i]);
    }
  }
  if (auto refined = homography_dlt(fa, ta)) {
    const std::size_t count = inliers_of(*refined, flags);
    if (count >= best_count) {
      best = refined;
      best_count = count;
      best_flags = flags;
    }
  }
  return HomographyFit{*best, best_flags, best_count};
}

}  // namespace layoutforge
