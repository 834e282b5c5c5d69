#include "layoutforge/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace layoutforge {

namespace {

std::size_t count_one(std::span<const Vec3> points, const Plane& plane, double thr) {
  std::size_t n = 0;
  for (const Vec3& p : points) {
    if (std::abs(plane.signed_distance(p)) < thr) ++n;
  }
  return n;
}

// Best match of row `i` of `from` among the valid patches of `to`; ties go
// to the lower index.
std::pair<int, double> best_match(const PatchFeatureMap& from, int i, const PatchFeatureMap& to) {
  int best = -1;
  double best_cos = -2;
  const auto a = from.at(i);
  for (int j = 0; j < to.size(); ++j) {
    if (!to.is_valid(j)) continue;
    const double c = cosine(a, to.at(j));
    if (c > best_cos) {
      best_cos = c;
      best = j;
    }
  }
  return {best, best_cos};
}

void check_dims(const PatchFeatureMap& a, const PatchFeatureMap& b) {
  if (a.dim != b.dim) {
    throw Error(ErrorCode::DimensionMismatch, "feature maps differ in descriptor dimension");
  }
}

std::vector<PatchMatch> mnn_from_best(const PatchFeatureMap& tmpl,
                                      const std::vector<std::pair<int, double>>& t2q,
                                      const std::vector<std::pair<int, double>>& q2t,
                                      double min_cos) {
  std::vector<PatchMatch> out;
  for (int i = 0; i < tmpl.size(); ++i) {
    if (!tmpl.is_valid(i)) continue;
    const auto [j, c] = t2q[i];
    if (j < 0 || c < min_cos) continue;
    if (q2t[j].first == i) out.push_back({i, j, c});
  }
  return out;
}

double mean_cos(const std::vector<GlobalFeature>& views, const GlobalFeature& query) {
  if (views.empty()) return 0.0;
  std::vector<double> cos;
  cos.reserve(views.size());
  for (const GlobalFeature& v : views) {
    if (v.vec.size() != query.vec.size()) {
      throw Error(ErrorCode::DimensionMismatch, "global features differ in dimension");
    }
    cos.push_back(cosine(v.vec, query.vec));
  }
  // Summed in sorted order so the mean does not depend on view order.
  std::sort(cos.begin(), cos.end());
  double sum = 0;
  for (double c : cos) sum += c;
  return sum / static_cast<double>(views.size());
}

}  // namespace

std::size_t sorted_intersection_size(std::span<const CellKey> a, std::span<const CellKey> b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

namespace kernels {

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

namespace serial {

std::vector<std::size_t> count_plane_inliers(std::span<const Vec3> points,
                                             std::span<const Plane> planes, double thr) {
  std::vector<std::size_t> out(planes.size());
  for (std::size_t h = 0; h < planes.size(); ++h) out[h] = count_one(points, planes[h], thr);
  return out;
}

std::vector<PatchMatch> mutual_nearest_neighbors(const PatchFeatureMap& tmpl,
                                                 const PatchFeatureMap& query, double min_cos) {
  check_dims(tmpl, query);
  std::vector<std::pair<int, double>> t2q(tmpl.size(), {-1, -2.0});
  std::vector<std::pair<int, double>> q2t(query.size(), {-1, -2.0});
  for (int i = 0; i < tmpl.size(); ++i) {
    if (tmpl.is_valid(i)) t2q[i] = best_match(tmpl, i, query);
  }
  for (int j = 0; j < query.size(); ++j) {
    if (query.is_valid(j)) q2t[j] = best_match(query, j, tmpl);
  }
  return mnn_from_best(tmpl, t2q, q2t, min_cos);
}

std::vector<double> view_similarities(std::span<const PatchFeatureMap> templates,
                                      const PatchFeatureMap& query, double min_cos) {
  std::vector<double> out(templates.size(), 0.0);
  for (std::size_t v = 0; v < templates.size(); ++v) {
    for (const PatchMatch& m : mutual_nearest_neighbors(templates[v], query, min_cos)) {
      out[v] += m.cosine;
    }
  }
  return out;
}

std::vector<double> mean_view_cosines(std::span<const std::vector<GlobalFeature>> views,
                                      const GlobalFeature& query) {
  std::vector<double> out(views.size());
  for (std::size_t a = 0; a < views.size(); ++a) out[a] = mean_cos(views[a], query);
  return out;
}

std::vector<std::pair<int, int>> overlapping_pairs(
    std::span<const std::vector<CellKey>> sorted_cells) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(sorted_cells.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (sorted_intersection_size(sorted_cells[i], sorted_cells[j]) > 0) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace serial

std::vector<std::size_t> count_plane_inliers(std::span<const Vec3> points,
                                             std::span<const Plane> planes, double thr) {
  std::vector<std::size_t> out(planes.size());
  const auto n = static_cast<std::ptrdiff_t>(planes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t h = 0; h < n; ++h) out[h] = count_one(points, planes[h], thr);
  return out;
}

std::vector<PatchMatch> mutual_nearest_neighbors(const PatchFeatureMap& tmpl,
                                                 const PatchFeatureMap& query, double min_cos) {
  check_dims(tmpl, query);
  std::vector<std::pair<int, double>> t2q(tmpl.size(), {-1, -2.0});
  std::vector<std::pair<int, double>> q2t(query.size(), {-1, -2.0});
  const int nt = tmpl.size(), nq = query.size();
#pragma omp parallel
  {
#pragma omp for schedule(static) nowait
    for (int i = 0; i < nt; ++i) {
      if (tmpl.is_valid(i)) t2q[i] = best_match(tmpl, i, query);
    }
#pragma omp for schedule(static)
    for (int j = 0; j < nq; ++j) {
      if (query.is_valid(j)) q2t[j] = best_match(query, j, tmpl);
    }
  }
  return mnn_from_best(tmpl, t2q, q2t, min_cos);
}

std::vector<double> view_similarities(std::span<const PatchFeatureMap> templates,
                                      const PatchFeatureMap& query, double min_cos) {
  std::vector<double> out(templates.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(templates.size());
  // One view per iteration; the inner matcher is the serial one so the
  // per-view sum order matches the reference exactly.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    double sum = 0;
    for (const PatchMatch& m : serial::mutual_nearest_neighbors(templates[v], query, min_cos)) {
      sum += m.cosine;
    }
    out[v] = sum;
  }
  return out;
}

std::vector<double> mean_view_cosines(std::span<const std::vector<GlobalFeature>> views,
                                      const GlobalFeature& query) {
  std::vector<double> out(views.size());
  const auto n = static_cast<std::ptrdiff_t>(views.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t a = 0; a < n; ++a) out[a] = mean_cos(views[a], query);
  return out;
}

std::vector<std::pair<int, int>> overlapping_pairs(
    std::span<const std::vector<CellKey>> sorted_cells) {
  const int n = static_cast<int>(sorted_cells.size());
  std::vector<std::vector<int>> partners(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (sorted_intersection_size(sorted_cells[i], sorted_cells[j]) > 0) partners[i].push_back(j);
    }
  }
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    for (int j : partners[i]) out.emplace_back(i, j);
  }
  return out;
}

}  // namespace kernels
}  // namespace layoutforge
