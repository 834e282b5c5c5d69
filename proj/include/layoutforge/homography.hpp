#pragma once

#include "layoutforge/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace layoutforge {

struct HomographyConfig {
  int iterations = 500;
  double inlier_threshold_px = 3.0;
  std::uint64_t seed = 42;
};

struct HomographyFit {
  Mat3 H = Mat3::Identity();  // maps `from` to `to`, ||H||_F = sqrt(3), det > 0
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
};

// Normalized DLT on >= 4 pairs; nullopt when degenerate.
std::optional<Mat3> homography_dlt(std::span<const Vec2> from, std::span<const Vec2> to);

// RANSAC over minimal 4-point samples, refit on the best inlier set.
// nullopt when fewer than 4 pairs or no hypothesis reaches 4 inliers.
std::optional<HomographyFit> estimate_homography(std::span<const Vec2> from,
                                                 std::span<const Vec2> to,
                                                 const HomographyConfig& config = {});

// Scales to ||H||_F = sqrt(3) and flips the sign so det(H) > 0.
Mat3 normalize_homography(const Mat3& H);

// ||U V^T - I||_F^2 of the SVD of the normalized homography.
double homography_rotation_score(const Mat3& H);

double reprojection_error(const Mat3& H, const Vec2& from, const Vec2& to);

}  // namespace layoutforge
