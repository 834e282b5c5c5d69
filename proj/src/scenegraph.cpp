#include "layoutforge/scenegraph.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace layoutforge {

namespace {

double zmin(const Obb& b) { return b.min_along(Vec3::UnitZ()); }
double zmax(const Obb& b) { return b.max_along(Vec3::UnitZ()); }

// Rebuilds the box with its most vertical axis as exact +z; the footprint is
// refit so the new box still covers every corner of the old one.
Obb make_upright(const Obb& box) {
  int up = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(box.axes.col(i).z()) > std::abs(box.axes.col(up).z())) up = i;
  }
  const int first = up == 0 ? 1 : 0;
  Mat3 axes = snap_upright([&] {
    Mat3 r;
    const Vec3 x = box.axes.col(first);
    Vec3 z = box.axes.col(up);
    if (z.z() < 0) z = -z;
    r << x, z.cross(x), z;
    return r;
  }(), Vec3::UnitZ());
  Obb out;
  out.axes = axes;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& c : box.corners()) {
    const Vec3 q = axes.transpose() * c;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  out.center = axes * (0.5 * (lo + hi));
  out.half_extents = (0.5 * (hi - lo)).cwiseMax(1e-6);
  return out;
}

// Moves the vertical range of an upright box to [lo, hi].
void set_vertical_range(Obb& box, double lo, double hi) {
  box.center.z() = 0.5 * (lo + hi);
  box.half_extents.z() = 0.5 * (hi - lo);
}

}  // namespace

std::vector<MaskId> SceneGraph::children(MaskId id) const {
  std::vector<MaskId> out;
  for (const auto& [child, edge] : parent) {
    if (edge.parent == id) out.push_back(child);
  }
  return out;
}

std::vector<MaskId> SceneGraph::top_down() const {
  std::vector<MaskId> out;
  std::deque<MaskId> queue;
  for (MaskId c : children(kFloorId)) queue.push_back(c);
  while (!queue.empty()) {
    const MaskId id = queue.front();
    queue.pop_front();
    out.push_back(id);
    for (MaskId c : children(id)) queue.push_back(c);
  }
  return out;
}

int SceneGraph::depth(MaskId id) const {
  int d = 0;
  for (auto it = parent.find(id); it != parent.end(); it = parent.find(it->second.parent)) {
    ++d;
    if (d > static_cast<int>(parent.size())) break;
  }
  return d;
}

std::vector<MaskId> SceneGraph::subtree(MaskId id) const {
  std::vector<MaskId> out{id};
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (MaskId c : children(out[i])) out.push_back(c);
  }
  return out;
}

SupportVerdict supported_relationship(MaskId a_id, const Obb& a, MaskId b_id, const Obb& b,
                                      const OracleRecord& oracle, double eps) {
  if (std::abs(zmax(a) - zmin(b)) < eps) return {true, 0.0};
  if (obb_contains(a, b)) {
    const double mid = 0.5 * (zmax(b) + zmin(b));
    return {true, (mid - zmin(a)) / (zmax(a) - zmin(a))};
  }
  auto it = oracle.occlusion_support.find({a_id, b_id});
  if (it == oracle.occlusion_support.end()) {
    throw Error(ErrorCode::MissingOracle, "no occlusion_support answer for (" +
                                              std::to_string(a_id) + ", " + std::to_string(b_id) +
                                              ")");
  }
  return {it->second, 0.0};
}

SceneGraph build_support_tree(const OracleRecord& oracle, const std::map<MaskId, Obb>& obbs,
                              const std::vector<Plane>& room_walls, const GraphConfig& cfg,
                              std::vector<std::string>* warnings) {
  SceneGraph g;
  auto usable = [&](MaskId id) { return obbs.count(id) && !oracle.excluded.count(id); };

  std::vector<MaskId> level;
  for (MaskId id : oracle.floor_supported) {
    if (usable(id)) {
      g.parent[id] = {kFloorId, 0.0};
      level.push_back(id);
    }
  }
  for (MaskId id : oracle.ceiling_supported) {
    if (usable(id)) g.ceiling_set.insert(id);
  }
  std::vector<MaskId> candidates;
  for (const auto& [id, box] : obbs) {
    if (usable(id) && !g.in_tree(id) && !g.ceiling_set.count(id)) candidates.push_back(id);
  }

  while (!level.empty()) {
    struct Claim {
      double dist;
      MaskId parent;
      SupportVerdict verdict;
    };
    std::map<MaskId, Claim> claims;
    for (MaskId m : level) {
      const Obb& pm = obbs.at(m);
      for (MaskId n : candidates) {
        if (g.in_tree(n)) continue;
        const double dist = set_distance(obbs.at(n), pm);
        if (!(dist < cfg.eps)) continue;
        const SupportVerdict v = supported_relationship(m, pm, n, obbs.at(n), oracle, cfg.eps);
        if (!v.supported) continue;
        auto it = claims.find(n);
        if (it == claims.end() || dist < it->second.dist ||
            (dist == it->second.dist && m < it->second.parent)) {
          claims[n] = {dist, m, v};
        }
      }
    }
    level.clear();
    for (const auto& [child, claim] : claims) {
      g.parent[child] = {claim.parent, claim.verdict.d_vertical};
      level.push_back(child);
    }
  }

  for (const auto& [id, wall] : oracle.wall_contacts) {
    if (!usable(id) || room_walls.empty()) continue;
    // Recorded wall ids need not match the fitted wall order: take the
    // nearest fitted wall and check it is actually in contact.
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < room_walls.size(); ++w) {
      const double d = set_distance(obbs.at(id), room_walls[w]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(w);
      }
    }
    if (best_d <= cfg.wall_snap_tolerance) {
      g.wall_edges.emplace_back(id, best);
    } else if (warnings) {
      warnings->push_back("mask " + std::to_string(id) + ": wall contact " + std::to_string(wall) +
                          " not confirmed (nearest wall " + std::to_string(best_d) + " m away)");
    }
  }

  g.excluded = oracle.excluded;
  for (const auto& [id, box] : obbs) {
    if (!g.in_tree(id) && !g.ceiling_set.count(id)) g.excluded.insert(id);
  }
  return g;
}

std::map<MaskId, Obb> refine_obbs(const SceneGraph& graph, const std::map<MaskId, Obb>& obbs,
                                  const RoomInfo& room) {
  std::map<MaskId, Obb> out = obbs;
  for (MaskId id : graph.top_down()) {
    Obb box = make_upright(out.at(id));
    const TreeEdge& e = graph.parent.at(id);
    const double top = zmax(box);
    const double height = top - zmin(box);
    double base;
    if (e.parent == kFloorId) {
      base = room.floor_height;
    } else if (e.d_vertical == 0.0) {
      base = zmax(out.at(e.parent));
    } else {
      out[id] = box;
      continue;
    }
    // Extend down to the support; an object entirely below it keeps its
    // height and is lifted instead.
    if (top > base + 1e-3) {
      set_vertical_range(box, base, top);
    } else {
      set_vertical_range(box, base, base + height);
    }
    out[id] = box;
  }
  for (MaskId id : graph.ceiling_set) {
    Obb box = make_upright(out.at(id));
    if (room.ceiling_height) {
      const double c = *room.ceiling_height;
      const double bottom = zmin(box);
      const double height = zmax(box) - bottom;
      if (bottom < c - 1e-3) {
        set_vertical_range(box, bottom, c);
      } else {
        set_vertical_range(box, c - height, c);
      }
    }
    out[id] = box;
  }
  return out;
}

OracleRecord GeometricOracle::answer(const std::map<MaskId, Obb>& boxes,
                                     const std::map<MaskId, MaskId>& parents,
                                     const RoomInfo& room) const {
  OracleRecord o;
  for (const auto& [id, box] : boxes) {
    if (std::abs(zmin(box) - room.floor_height) < eps) o.floor_supported.insert(id);
    if (room.ceiling_height && std::abs(zmax(box) - *room.ceiling_height) < eps &&
        !o.floor_supported.count(id)) {
      o.ceiling_supported.insert(id);
    }
    for (std::size_t w = 0; w < room.walls.size(); ++w) {
      if (set_distance(box, room.walls[w]) < eps) {
        o.wall_contacts.emplace(id, static_cast<int>(w));
        break;
      }
    }
    Vec3 dims = 2.0 * box.half_extents;
    if (dims.x() < dims.y()) std::swap(dims.x(), dims.y());
    o.object_dims[id] = dims;
    for (const auto& [other, unused] : boxes) {
      if (other == id) continue;
      auto it = parents.find(id);
      o.occlusion_support[{other, id}] = it != parents.end() && it->second == other;
    }
  }
  return o;
}

std::string graph_to_json(const SceneGraph& g) {
  using nlohmann::json;
  json nodes = json::array(), edges = json::array(), walls = json::array();
  for (const auto& [id, e] : g.parent) {
    nodes.push_back(id);
    edges.push_back({{"parent", e.parent}, {"child", id}, {"d_vertical", e.d_vertical}});
  }
  for (const auto& [id, w] : g.wall_edges) walls.push_back({{"mask", id}, {"wall", w}});
  json j = {{"root", kFloorId},
            {"nodes", nodes},
            {"edges", edges},
            {"ceiling", g.ceiling_set},
            {"wall_edges", walls},
            {"excluded", g.excluded}};
  return j.dump(2) + "\n";
}

}  // namespace layoutforge
