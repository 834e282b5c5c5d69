#include "layoutforge/retrieval.hpp"

#include "layoutforge/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace layoutforge {

double size_penalty(const Vec3& a, const Vec3& m) {
  if (!(a.z() > 0) || !(m.z() > 0)) {
    throw Error(ErrorCode::NonPositiveExtent, "size_penalty: heights must be positive");
  }
  return std::abs(a.x() / a.z() - m.x() / m.z()) + std::abs(a.y() / a.z() - m.y() / m.z());
}

Vec3 footprint_dims(const Vec3& e) {
  return {std::max(e.x(), e.y()), std::min(e.x(), e.y()), e.z()};
}

std::vector<RetrievalScore> retrieve(MaskId mask_id, const SceneBundle& bundle,
                                     const AssetLibrary& library, const RetrievalConfig& cfg,
                                     const std::optional<Vec3>& fallback_dims) {
  const Mask& mask = bundle.mask(mask_id);
  const std::set<std::string>& cats = library.manifest.categories.preimage(mask.category);
  std::vector<const Asset*> candidates;
  for (const Asset& a : library.manifest.assets) {
    if (cats.count(a.category)) candidates.push_back(&a);
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::EmptyCategory,
                "mask " + std::to_string(mask_id) + ": no asset for category '" + mask.category + "'");
  }
  auto q = bundle.query_globals.find(mask_id);
  if (q == bundle.query_globals.end()) {
    throw Error(ErrorCode::MissingFeature, "mask " + std::to_string(mask_id) + ": no global query feature");
  }
  std::optional<Vec3> query_dims;
  if (bundle.oracle) {
    auto it = bundle.oracle->object_dims.find(mask_id);
    if (it != bundle.oracle->object_dims.end()) query_dims = footprint_dims(it->second);
  }
  if (!query_dims && fallback_dims) query_dims = footprint_dims(*fallback_dims);

  std::vector<std::vector<GlobalFeature>> views;
  views.reserve(candidates.size());
  for (const Asset* a : candidates) {
    auto it = library.thumbnails.find(a->id);
    if (it == library.thumbnails.end() || it->second.empty()) {
      throw Error(ErrorCode::MissingFeature, "asset '" + a->id + "': no thumbnail features");
    }
    views.push_back(it->second);
  }
  const std::vector<double> sims = kernels::mean_view_cosines(views, q->second);

  std::vector<RetrievalScore> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    RetrievalScore s;
    s.asset_id = candidates[i]->id;
    s.sim_mean = sims[i];
    s.delta_s = query_dims ? size_penalty(footprint_dims(candidates[i]->extents), *query_dims) : 0.0;
    s.score = s.sim_mean - cfg.alpha * s.delta_s;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const RetrievalScore& a, const RetrievalScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.asset_id < b.asset_id;
  });
  return out;
}

}  // namespace layoutforge
