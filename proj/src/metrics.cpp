#include "layoutforge/metrics.hpp"

#include "layoutforge/collision.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace layoutforge {

namespace {

struct AlignedFrame {
  Vec2 a{1, 0}, b{0, 1};
  Vec2 center{0, 0};
};

Vec2 wall_axis(const RoomInfo& room) {
  int best = -1;
  double len = -1;
  for (std::size_t k = 0; k < room.walls.size(); ++k) {
    const double l = k < room.wall_lengths.size() ? room.wall_lengths[k] : 0.0;
    if (l > len) {
      len = l;
      best = static_cast<int>(k);
    }
  }
  if (best < 0) return {1, 0};
  Vec2 a(room.walls[best].n.x(), room.walls[best].n.y());
  if (a.norm() < 1e-9) return {1, 0};
  return a.normalized();
}

void check_floor(const LayoutDocument& l) {
  if (!std::isfinite(l.room.floor_height)) {
    throw Error(ErrorCode::NoFloor, "layout has no floor plane");
  }
}

AlignedFrame aligned_frame(const LayoutDocument& layout) {
  AlignedFrame f;
  f.a = wall_axis(layout.room);
  f.b = Vec2(-f.a.y(), f.a.x());
  double lo_a = std::numeric_limits<double>::infinity(), hi_a = -lo_a, lo_b = lo_a, hi_b = -lo_a;
  for (const LayoutObject& o : layout.objects) {
    for (const Vec3& c : o.obb().corners()) {
      const Vec2 p(c.x(), c.y());
      lo_a = std::min(lo_a, p.dot(f.a));
      hi_a = std::max(hi_a, p.dot(f.a));
      lo_b = std::min(lo_b, p.dot(f.b));
      hi_b = std::max(hi_b, p.dot(f.b));
    }
  }
  if (!layout.objects.empty()) f.center = {0.5 * (lo_a + hi_a), 0.5 * (lo_b + hi_b)};
  return f;
}

int transformed_index(int i, int j, int n, int rot, bool mirror) {
  if (mirror) i = n - 1 - i;
  for (int r = 0; r < rot; ++r) {
    const int ni = n - 1 - j, nj = i;
    i = ni;
    j = nj;
  }
  return j * n + i;
}

std::vector<double> degrees_thresholds(int cutoff) {
  std::vector<double> t;
  for (int k = 1; k <= cutoff; ++k) t.push_back(k);
  return t;
}

std::vector<double> meter_thresholds(double cutoff) {
  std::vector<double> t;
  const int n = static_cast<int>(std::lround(cutoff * 100.0));
  for (int k = 1; k <= n; ++k) t.push_back(k / 100.0);
  return t;
}

}  // namespace

int layout_grid_half_cells(const LayoutDocument& layout, double cell) {
  check_floor(layout);
  const AlignedFrame f = aligned_frame(layout);
  double r = 0;
  for (const LayoutObject& o : layout.objects) {
    for (const Vec3& c : o.obb().corners()) {
      const Vec2 p(c.x(), c.y());
      r = std::max({r, std::abs(p.dot(f.a) - f.center.x()), std::abs(p.dot(f.b) - f.center.y())});
    }
  }
  return std::max(1, static_cast<int>(std::ceil(r / cell - 1e-9)));
}

LayoutGrid rasterize_layout(const LayoutDocument& layout, int half, double cell) {
  check_floor(layout);
  const AlignedFrame f = aligned_frame(layout);
  LayoutGrid g;
  g.cell = cell;
  g.n = 2 * half;
  g.labels.assign(static_cast<std::size_t>(g.n) * g.n, "");
  std::vector<double> top(g.labels.size(), -std::numeric_limits<double>::infinity());
  for (const LayoutObject& o : layout.objects) {
    const Obb box = o.obb();
    const double zt = box.max_along(Vec3::UnitZ());
    for (int j = 0; j < g.n; ++j) {
      for (int i = 0; i < g.n; ++i) {
        const double u = f.center.x() + (i - half + 0.5) * cell;
        const double v = f.center.y() + (j - half + 0.5) * cell;
        const Vec2 xy = u * f.a + v * f.b;
        const Vec3 local = box.axes.transpose() * (Vec3(xy.x(), xy.y(), box.center.z()) - box.center);
        if (std::abs(local.x()) > box.half_extents.x() || std::abs(local.y()) > box.half_extents.y()) {
          continue;
        }
        const std::size_t k = static_cast<std::size_t>(j) * g.n + i;
        if (zt > top[k]) {
          top[k] = zt;
          g.labels[k] = o.category;
        }
      }
    }
  }
  return g;
}

double grid_similarity(const LayoutGrid& a, const LayoutGrid& b) {
  if (a.n != b.n) throw Error(ErrorCode::DimensionMismatch, "grid_similarity: grids differ in size");
  const int n = a.n;
  double best = 0;
  bool any = false;
  for (int mirror = 0; mirror < 2; ++mirror) {
    for (int rot = 0; rot < 4; ++rot) {
      std::size_t match = 0, labeled = 0;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const std::string& la = a.at(i, j);
          const std::string& lb = b.labels[transformed_index(i, j, n, rot, mirror != 0)];
          if (la.empty() && lb.empty()) continue;
          ++labeled;
          if (la == lb) ++match;
        }
      }
      if (labeled == 0) return 1.0;
      any = true;
      best = std::max(best, static_cast<double>(match) / static_cast<double>(labeled));
    }
  }
  return any ? best : 1.0;
}

double layout_similarity(const LayoutDocument& a, const LayoutDocument& b, double cell) {
  const int half = std::max(layout_grid_half_cells(a, cell), layout_grid_half_cells(b, cell));
  return grid_similarity(rasterize_layout(a, half, cell), rasterize_layout(b, half, cell));
}

double map_at(std::span<const double> errors, double threshold) {
  if (errors.empty()) throw Error(ErrorCode::Validation, "map_at: empty error list");
  std::size_t k = 0;
  for (double e : errors) k += e <= threshold ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(errors.size());
}

std::vector<std::pair<double, double>> map_curve(std::span<const double> errors,
                                                 std::span<const double> thresholds) {
  std::vector<std::pair<double, double>> out;
  for (double t : thresholds) out.emplace_back(t, map_at(errors, t));
  return out;
}

double rotation_auc(std::span<const double> errors, int cutoff) {
  double s = 0;
  for (const auto& [t, m] : map_curve(errors, degrees_thresholds(cutoff))) s += m;
  return s / cutoff;
}

double translation_auc(std::span<const double> errors, double cutoff) {
  const auto curve = map_curve(errors, meter_thresholds(cutoff));
  double s = 0;
  for (const auto& [t, m] : curve) s += m;
  return s / static_cast<double>(curve.size());
}

SceneGraph graph_from_layout(const LayoutDocument& layout) {
  SceneGraph g;
  for (const LayoutObject& o : layout.objects) {
    switch (o.support.kind) {
      case SupportKind::Floor:
        g.parent[o.source_mask] = {kFloorId, 0.0};
        break;
      case SupportKind::Contact:
      case SupportKind::Internal:
        g.parent[o.source_mask] = {o.support.parent, o.support.d_vertical};
        break;
      case SupportKind::Ceiling:
        g.ceiling_set.insert(o.source_mask);
        break;
      case SupportKind::None:
        g.excluded.insert(o.source_mask);
        break;
    }
    if (o.wall) g.wall_edges.emplace_back(o.source_mask, *o.wall);
  }
  return g;
}

SceneCheck scene_checks(const LayoutDocument& layout, const SceneGraph& graph,
                        const AssetLibrary* library, double cell) {
  SceneCheck out;
  const ShapeSet shapes(layout.objects, library, cell);
  std::map<MaskId, std::size_t> idx;
  for (std::size_t i = 0; i < layout.objects.size(); ++i) idx[layout.objects[i].source_mask] = i;
  int edges = 0, ok = 0;
  for (const auto& [id, e] : graph.parent) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    ++edges;
    const LayoutObject& c = layout.objects[it->second];
    bool good = false;
    if (e.parent == kFloorId) {
      good = std::abs(z_min(c) - layout.room.floor_height) <= cell;
    } else if (auto pit = idx.find(e.parent); pit != idx.end()) {
      const auto h = support_height_under(c, shapes.grid(it->second), layout.objects[pit->second],
                                          shapes.grid(pit->second), cell);
      good = h && std::abs(z_min(c) - *h) <= cell;
    }
    if (good) {
      ++ok;
    } else {
      out.unsupported.push_back(id);
    }
  }
  out.support_correct_pct = edges ? 100.0 * ok / edges : 100.0;
  out.intersection_pairs = static_cast<int>(intersecting_pairs(layout.objects, shapes, cell).size());
  return out;
}

bool is_primary(const LayoutObject& o, const RoomInfo& room, double wall_distance) {
  if (o.support.kind == SupportKind::Floor || o.support.kind == SupportKind::Ceiling) return true;
  const Obb box = o.obb();
  for (const Plane& w : room.walls) {
    if (set_distance(box, w) < wall_distance) return true;
  }
  return false;
}

Recovery recovery_rates(const LayoutDocument& pred, const LayoutDocument& gt, double gate) {
  struct Pair {
    double d;
    std::size_t p, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < pred.objects.size(); ++p) {
    for (std::size_t g = 0; g < gt.objects.size(); ++g) {
      if (pred.objects[p].category != gt.objects[g].category) continue;
      const double d =
          (pred.to_camera(pred.objects[p].t) - gt.to_camera(gt.objects[g].t)).norm();
      if (d <= gate) pairs.push_back({d, p, g});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.d != y.d) return x.d < y.d;
    if (x.g != y.g) return x.g < y.g;
    return x.p < y.p;
  });
  Recovery r;
  std::vector<bool> used_p(pred.objects.size(), false), used_g(gt.objects.size(), false);
  for (const Pair& x : pairs) {
    if (used_p[x.p] || used_g[x.g]) continue;
    used_p[x.p] = used_g[x.g] = true;
    r.matches.emplace_back(x.p, x.g);
  }
  std::sort(r.matches.begin(), r.matches.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<int> match_of(gt.objects.size(), -1);
  for (const auto& [p, g] : r.matches) match_of[g] = static_cast<int>(p);
  for (std::size_t g = 0; g < gt.objects.size(); ++g) {
    RecoveryStats& s = is_primary(gt.objects[g], gt.room) ? r.primary : r.secondary;
    for (RecoveryStats* t : {&s, &r.overall}) {
      ++t->gt;
      if (match_of[g] >= 0) {
        ++t->matched;
        if (pred.objects[match_of[g]].asset_category == gt.objects[g].asset_category) ++t->preserved;
      }
    }
  }
  return r;
}

double support_edge_accuracy(const LayoutDocument& pred, const LayoutDocument& gt) {
  auto kind_class = [](SupportKind k) {
    switch (k) {
      case SupportKind::Ceiling:
        return 1;
      case SupportKind::None:
        return 2;
      default:
        return 0;
    }
  };
  int n = 0, ok = 0;
  for (const LayoutObject& g : gt.objects) {
    ++n;
    const LayoutObject* p = pred.find(g.source_mask);
    if (!p) continue;
    if (kind_class(p->support.kind) != kind_class(g.support.kind)) continue;
    if (kind_class(g.support.kind) == 0 && p->support.parent != g.support.parent) continue;
    ++ok;
  }
  return n ? 100.0 * ok / n : 100.0;
}

EvalReport evaluate(const LayoutDocument& pred, const LayoutDocument& gt,
                    const AssetLibrary* library, double voxel_cell) {
  EvalReport rep;
  const SceneCheck sc = scene_checks(pred, graph_from_layout(pred), library, voxel_cell);
  rep.support_correct_pct = sc.support_correct_pct;
  rep.intersection_pairs = sc.intersection_pairs;
  rep.recovery = recovery_rates(pred, gt);
  for (const auto& [p, g] : rep.recovery.matches) {
    const Mat3 rp = pred.camera_R * pred.objects[p].R;
    const Mat3 rg = gt.camera_R * gt.objects[g].R;
    rep.rotation_errors_deg.push_back(geodesic_angle(rp, rg) * 180.0 / 3.14159265358979323846);
    rep.translation_errors_m.push_back(
        (pred.to_camera(pred.objects[p].t) - gt.to_camera(gt.objects[g].t)).norm());
  }
  if (!rep.rotation_errors_deg.empty()) {
    rep.rotation_auc60 = rotation_auc(rep.rotation_errors_deg, 60);
    rep.translation_auc05 = translation_auc(rep.translation_errors_m, 0.5);
    rep.rotation_map_curve = map_curve(rep.rotation_errors_deg, degrees_thresholds(60));
    rep.translation_map_curve = map_curve(rep.translation_errors_m, meter_thresholds(0.5));
  }
  rep.layout_similarity = layout_similarity(pred, gt);
  rep.support_edge_accuracy_pct = support_edge_accuracy(pred, gt);
  return rep;
}

std::string EvalReport::to_json() const {
  using nlohmann::json;
  auto stats = [](const RecoveryStats& s) {
    return json{{"gt", s.gt},
                {"matched", s.matched},
                {"preserved", s.preserved},
                {"recovery_pct", s.recovery_pct()},
                {"category_preservation_pct", s.preservation_pct()}};
  };
  json j;
  j["support_correct_pct"] = support_correct_pct;
  j["intersection_pairs"] = intersection_pairs;
  j["recovery"] = {{"primary", stats(recovery.primary)},
                   {"secondary", stats(recovery.secondary)},
                   {"overall", stats(recovery.overall)}};
  j["rotation_auc60"] = rotation_auc60;
  j["translation_auc05"] = translation_auc05;
  j["layout_similarity"] = layout_similarity;
  j["support_edge_accuracy_pct"] = support_edge_accuracy_pct;
  json rc = json::array(), tc = json::array();
  for (const auto& [t, m] : rotation_map_curve) rc.push_back({t, m});
  for (const auto& [t, m] : translation_map_curve) tc.push_back({t, m});
  j["map_curve"] = {{"rotation_deg", rc}, {"translation_m", tc}};
  return j.dump(2) + "\n";
}

void write_map_csv(const EvalReport& rep, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << "kind,threshold,map\n";
  for (const auto& [t, m] : rep.rotation_map_curve) f << "rotation_deg," << t << ',' << m << '\n';
  for (const auto& [t, m] : rep.translation_map_curve) f << "translation_m," << t << ',' << m << '\n';
}

}  // namespace layoutforge
