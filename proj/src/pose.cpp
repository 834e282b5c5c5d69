#include "layoutforge/pose.hpp"

#include "layoutforge/kernels.hpp"
#include "layoutforge/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace layoutforge {

Correspondences match_patches(const PatchFeatureMap& tmpl, const PatchFeatureMap& query,
                              double min_cos) {
  Correspondences out;
  for (const PatchMatch& m : kernels::mutual_nearest_neighbors(tmpl, query, min_cos)) {
    out.pairs.push_back({tmpl.patch_center(m.tmpl), query.patch_center(m.query), m.cosine, false});
  }
  return out;
}

double sim_img(const Correspondences& corr) {
  double sum = 0;
  for (const Correspondence& c : corr.pairs) sum += c.cosine;
  return sum;
}

std::vector<ViewScore> coarse_select(std::span<const PatchFeatureMap> templates,
                                     const PatchFeatureMap& query, int k, double min_cos) {
  const std::vector<double> sims = kernels::view_similarities(templates, query, min_cos);
  std::vector<ViewScore> all;
  for (std::size_t v = 0; v < sims.size(); ++v) all.push_back({static_cast<int>(v), sims[v]});
  std::stable_sort(all.begin(), all.end(),
                   [](const ViewScore& a, const ViewScore& b) { return a.score > b.score; });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(k));
  return all;
}

std::vector<ViewScore> fine_select(const std::vector<ViewScore>& candidates,
                                   std::span<const PatchFeatureMap> templates,
                                   const PatchFeatureMap& query, int k,
                                   const HomographyConfig& config, double min_cos) {
  std::vector<ViewScore> kept;
  for (const ViewScore& c : candidates) {
    const Correspondences corr = match_patches(templates[c.view], query, min_cos);
    if (corr.pairs.size() < 4) continue;
    std::vector<Vec2> from, to;
    for (const Correspondence& p : corr.pairs) {
      from.push_back(p.tmpl_px);
      to.push_back(p.query_px);
    }
    const auto fit = estimate_homography(from, to, config);
    if (!fit || fit->inlier_count < 4) continue;
    kept.push_back({c.view, homography_rotation_score(fit->H)});
  }
  if (kept.empty()) {
    throw Error(ErrorCode::FineSelectionFailed, "no candidate view has a usable homography");
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const ViewScore& a, const ViewScore& b) { return a.score < b.score; });
  if (static_cast<int>(kept.size()) > k) kept.resize(static_cast<std::size_t>(k));
  return kept;
}

RotationEstimate geometric_enhance(const std::vector<Mat3>& visual,
                                   const std::optional<std::array<Mat3, 4>>& obb, double tau) {
  if (visual.empty()) throw Error(ErrorCode::Validation, "geometric_enhance: no visual candidates");
  RotationEstimate est;
  est.visual = visual;
  est.R_best = visual.front();
  est.visual_index = 0;
  if (!obb) {
    est.theta = std::numeric_limits<double>::infinity();
    return est;
  }
  double theta = std::numeric_limits<double>::infinity();
  int bi = -1, bj = -1;
  for (std::size_t j = 0; j < visual.size(); ++j) {
    for (int i = 0; i < 4; ++i) {
      const double a = geodesic_angle((*obb)[i], visual[j]);
      if (a < theta) {
        theta = a;
        bi = i;
        bj = static_cast<int>(j);
      }
    }
  }
  est.theta = theta;
  if (theta <= tau) {
    est.source = RotationSource::Geometric;
    est.R_best = (*obb)[bi];
    est.obb_index = bi;
    est.visual_index = bj;
  }
  return est;
}

RotationEstimate estimate_rotation(const Asset& asset, std::span<const PatchFeatureMap> templates,
                                   const PatchFeatureMap& query, const Mat3& world_from_virtual,
                                   const std::optional<Obb>& obb_world, const PoseConfig& cfg) {
  if (templates.size() != asset.template_views.size() || templates.empty()) {
    throw Error(ErrorCode::MissingFeature, "asset '" + asset.id + "': template features missing");
  }
  const std::vector<ViewScore> coarse = coarse_select(templates, query, cfg.coarse_k, cfg.min_cos);
  std::vector<ViewScore> fine;
  try {
    fine = fine_select(coarse, templates, query, cfg.fine_k, cfg.homography, cfg.min_cos);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::FineSelectionFailed) throw;
    fine.assign(coarse.begin(), coarse.begin() + std::min<std::ptrdiff_t>(cfg.fine_k, coarse.size()));
  }
  std::vector<Mat3> visual;
  for (const ViewScore& v : fine) {
    visual.push_back(orthonormalize(world_from_virtual * asset.template_views[v.view].rotation));
  }
  std::optional<std::array<Mat3, 4>> orientations;
  if (obb_world) {
    try {
      orientations = obb_vertical_orientations(*obb_world, Vec3::UnitZ());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotUpright) throw;
    }
  }
  RotationEstimate est = geometric_enhance(visual, orientations, cfg.tau);
  est.candidates = fine;
  return est;
}

Vec3 init_translation(const Obb& obb) { return obb.center; }

double scale_objective(const Vec3& extents, const Mat3& R, const Vec3& s, const Obb& target) {
  const Obb asset{target.center, R, 0.5 * s.cwiseProduct(extents)};
  const double inter = obb_intersection_volume(asset, target);
  return 2.0 * inter - asset.volume() - target.volume();
}

int scale_param_count(ScaleMode mode) { return mode == ScaleMode::FullyFree ? 3 : 2; }

namespace {

std::array<int, 3> axes_by_length(const Vec3& extents) {
  std::array<int, 3> idx{0, 1, 2};
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return extents[a] > extents[b]; });
  return idx;
}

}  // namespace

Vec3 scale_from_params(ScaleMode mode, const Vec3& extents, std::span<const double> p) {
  switch (mode) {
    case ScaleMode::HeightFree:
      return {p[0], p[0], p[1]};
    case ScaleMode::TwoLongAxes: {
      const auto idx = axes_by_length(extents);
      Vec3 s;
      s[idx[0]] = p[0];
      s[idx[1]] = p[1];
      s[idx[2]] = 0.5 * (p[0] + p[1]);
      return s;
    }
    case ScaleMode::FullyFree:
      break;
  }
  return {p[0], p[1], p[2]};
}

Vec3 optimize_scale(const Vec3& extents, ScaleMode mode, const Mat3& R, const Obb& target) {
  if ((target.half_extents.array() <= 0).any()) {
    throw Error(ErrorCode::NonPositiveExtent, "optimize_scale: target extents must be positive");
  }
  if ((extents.array() <= 0).any()) {
    throw Error(ErrorCode::NonPositiveExtent, "optimize_scale: asset extents must be positive");
  }
  const int n = scale_param_count(mode);
  using Params = std::array<double, 3>;
  auto f = [&](const Params& p) {
    return scale_objective(extents, R, scale_from_params(mode, extents, std::span(p.data(), n)), target);
  };
  auto clamp = [](double v) { return std::clamp(v, kScaleMin, kScaleMax); };

  // Per-axis ratios that make the boxes coincide when they are aligned.
  Vec3 ratio;
  for (int a = 0; a < 3; ++a) ratio[a] = clamp(target.radius_along(R.col(a)) / (0.5 * extents[a]));

  std::vector<Params> seeds;
  switch (mode) {
    case ScaleMode::HeightFree:
      seeds.push_back({ratio[0], ratio[2], 0});
      seeds.push_back({ratio[1], ratio[2], 0});
      seeds.push_back({clamp(0.5 * (ratio[0] + ratio[1])), ratio[2], 0});
      break;
    case ScaleMode::TwoLongAxes: {
      const auto idx = axes_by_length(extents);
      seeds.push_back({ratio[idx[0]], ratio[idx[1]], 0});
      break;
    }
    case ScaleMode::FullyFree:
      seeds.push_back({ratio[0], ratio[1], ratio[2]});
      break;
  }

  Params best = seeds.front();
  double best_f = f(best);
  for (const Params& s : seeds) {
    const double v = f(s);
    if (v > best_f) {
      best_f = v;
      best = s;
    }
  }
  const int grid = n == 3 ? 16 : 33;
  const double step = (kScaleMax - kScaleMin) / (grid - 1);
  {
    Params p{0, 0, 0};
    std::array<int, 3> i{0, 0, 0};
    const int total = n == 3 ? grid * grid * grid : grid * grid;
    for (int k = 0; k < total; ++k) {
      i = {k % grid, (k / grid) % grid, k / (grid * grid)};
      for (int a = 0; a < n; ++a) p[a] = kScaleMin + i[a] * step;
      const double v = f(p);
      if (v > best_f) {
        best_f = v;
        best = p;
      }
    }
  }

  // Pattern search: golden-section along axes and diagonals in a shrinking
  // window around the incumbent.
  std::vector<Params> dirs;
  for (int a = 0; a < n; ++a) {
    Params d{0, 0, 0};
    d[a] = 1;
    dirs.push_back(d);
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (double sb : {1.0, -1.0}) {
        Params d{0, 0, 0};
        d[a] = M_SQRT1_2;
        d[b] = sb * M_SQRT1_2;
        dirs.push_back(d);
      }
    }
  }
  if (n == 3) {
    for (double sy : {1.0, -1.0}) {
      for (double sz : {1.0, -1.0}) {
        const double c = 1.0 / std::sqrt(3.0);
        dirs.push_back({c, sy * c, sz * c});
      }
    }
  }
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double window = step;
  for (int round = 0; round < 400 && window > 1e-7; ++round) {
    bool improved = false;
    for (const Params& d : dirs) {
      double lo = -window, hi = window;
      for (int a = 0; a < n; ++a) {
        if (d[a] == 0) continue;
        const double t0 = (kScaleMin - best[a]) / d[a];
        const double t1 = (kScaleMax - best[a]) / d[a];
        lo = std::max(lo, std::min(t0, t1));
        hi = std::min(hi, std::max(t0, t1));
      }
      if (hi - lo < 1e-12) continue;
      auto at = [&](double t) {
        Params p = best;
        for (int a = 0; a < n; ++a) p[a] = clamp(best[a] + t * d[a]);
        return p;
      };
      double a = lo, b = hi;
      double c = b - invphi * (b - a), e = a + invphi * (b - a);
      double fc = f(at(c)), fe = f(at(e));
      for (int it = 0; it < 30; ++it) {
        if (fc >= fe) {
          b = e;
          e = c;
          fe = fc;
          c = b - invphi * (b - a);
          fc = f(at(c));
        } else {
          a = c;
          c = e;
          fc = fe;
          e = a + invphi * (b - a);
          fe = f(at(e));
        }
      }
      for (double t : {c, e, lo, hi}) {
        const Params p = at(t);
        const double v = f(p);
        if (v > best_f + 1e-15) {
          best_f = v;
          best = p;
          improved = true;
        }
      }
    }
    if (!improved) window *= 0.5;
  }
  return scale_from_params(mode, extents, std::span(best.data(), n));
}

}  // namespace layoutforge
