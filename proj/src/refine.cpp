#include "layoutforge/refine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace layoutforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

std::map<MaskId, std::size_t> index_by_mask(const LayoutDocument& layout) {
  std::map<MaskId, std::size_t> out;
  for (std::size_t i = 0; i < layout.objects.size(); ++i) out[layout.objects[i].source_mask] = i;
  return out;
}

std::vector<std::size_t> subtree_indices(const SceneGraph& graph, MaskId id,
                                         const std::map<MaskId, std::size_t>& idx) {
  std::vector<std::size_t> out;
  if (!graph.in_tree(id)) {
    if (auto it = idx.find(id); it != idx.end()) out.push_back(it->second);
    return out;
  }
  for (MaskId m : graph.subtree(id)) {
    if (auto it = idx.find(m); it != idx.end()) out.push_back(it->second);
  }
  return out;
}

void shift(LayoutDocument& layout, const std::vector<std::size_t>& members, const Vec3& d) {
  for (std::size_t k : members) layout.objects[k].t += d;
}

int dominant_axis(const Vec3& n) {
  int a = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) > std::abs(n[a])) a = i;
  }
  return a;
}

double wall_penetration(const LayoutObject& o, const std::vector<Plane>& walls) {
  double p = 0;
  const Obb box = o.obb();
  for (const Plane& w : walls) p += std::max(0.0, -signed_plane_gap(box, w));
  return p;
}

// Highest parent surface under the child, or the parent's box top when the
// child hangs past every occupied column.
double support_top(const LayoutObject& child, const VoxelGrid& cg, const LayoutObject& parent,
                   const VoxelGrid& pg) {
  LayoutObject lifted = child;
  lifted.t.z() = z_max(parent) + child.obb().radius_along(Vec3::UnitZ()) + 1.0;
  const auto h = support_height_under(lifted, cg, parent, pg, 0.0);
  return h ? *h : z_max(parent);
}

}  // namespace

void RefineConfig::validate() const {
  if (!(lambda1 > 0) || !(voxel_cell > 0) || !(wall_snap_tolerance > 0) || !(anneal.T0 > 0) ||
      !(anneal.step_sigma > 0) || anneal.iters < 0 || !(wall_yaw_snap_deg > 0)) {
    throw Error(ErrorCode::Validation, "refine config: parameters must be positive");
  }
  if (!(anneal.cooling > 0 && anneal.cooling < 1)) {
    throw Error(ErrorCode::Validation, "refine config: cooling must lie in (0, 1)");
  }
}

LayoutDocument local_refine(LayoutDocument layout, const SceneGraph& graph, const RefineConfig& cfg) {
  const auto idx = index_by_mask(layout);
  for (MaskId id : graph.top_down()) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    LayoutObject& o = layout.objects[it->second];
    o.R = snap_upright(o.R, Vec3::UnitZ());
    const TreeEdge& e = graph.parent.at(id);
    o.support.parent = e.parent;
    o.support.d_vertical = e.d_vertical;
    o.support.kind = e.parent == kFloorId ? SupportKind::Floor
                     : e.d_vertical > 0   ? SupportKind::Internal
                                          : SupportKind::Contact;
  }
  for (MaskId id : graph.ceiling_set) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    LayoutObject& o = layout.objects[it->second];
    o.R = snap_upright(o.R, Vec3::UnitZ());
    o.support = {SupportKind::Ceiling, kFloorId, 0.0};
  }
  const double snap = cfg.wall_yaw_snap_deg * kPi / 180.0;
  for (const auto& [id, w] : graph.wall_edges) {
    auto it = idx.find(id);
    if (it == idx.end() || w < 0 || w >= static_cast<int>(layout.room.walls.size())) continue;
    LayoutObject& o = layout.objects[it->second];
    o.wall = w;
    const Vec3& n = layout.room.walls[w].n;
    if (std::abs(o.R.col(2).dot(Vec3::UnitZ())) < 1.0 - 1e-9) o.R = snap_upright(o.R, Vec3::UnitZ());
    double d = yaw_of(o.R) - std::atan2(n.y(), n.x());
    d -= (kPi / 2) * std::floor(d / (kPi / 2) + 0.5);
    if (std::abs(d) <= snap) o.R = orthonormalize(rot_z(-d) * o.R);
    o.R = snap_upright(o.R, Vec3::UnitZ());
  }
  return layout;
}

int nearest_subspace(const Asset& asset, double d_vertical) {
  if (asset.subspaces.empty()) {
    throw Error(ErrorCode::NoSubspace, "asset '" + asset.id + "' has no internal subspaces");
  }
  int best = 0;
  double best_d = kInf;
  for (std::size_t k = 0; k < asset.subspaces.size(); ++k) {
    const Subspace& s = asset.subspaces[k];
    const double frac = (0.5 * (s.lo.z() + s.hi.z()) + 0.5 * asset.extents.z()) / asset.extents.z();
    const double d = std::abs(frac - d_vertical);
    // Distances within rounding count as a tie.
    if (d < best_d - 1e-12) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::pair<Vec3, Vec3> place_internal(const LayoutObject& child, const LayoutObject& parent,
                                     const Asset& parent_asset, double d_vertical) {
  const Subspace& sub = parent_asset.subspaces[nearest_subspace(parent_asset, d_vertical)];
  const Vec3 lo = parent.s.cwiseProduct(sub.lo);
  const Vec3 hi = parent.s.cwiseProduct(sub.hi);
  const Vec3 room = (hi - lo).cwiseAbs();
  const Mat3 rel = parent.R.transpose() * child.R;
  Vec3 half = rel.cwiseAbs() * (0.5 * child.s.cwiseProduct(child.extents));
  double f = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (2.0 * half[a] > 0.95 * room[a]) f = std::min(f, 0.95 * room[a] / (2.0 * half[a]));
  }
  half *= f;
  Vec3 c = 0.5 * (lo + hi);
  c.z() = std::min(lo.z(), hi.z()) + half.z();
  return {parent.R * c + parent.t, f * child.s};
}

OptState apply_hard_constraints(LayoutDocument& layout, const SceneGraph& graph,
                                const AssetLibrary* library, const RefineConfig& cfg) {
  cfg.validate();
  const auto idx = index_by_mask(layout);
  const std::size_t n = layout.objects.size();
  OptState st;
  st.frozen.assign(n, {false, false, false});
  st.locked.assign(n, false);
  const ShapeSet shapes(layout.objects, library, cfg.voxel_cell);
  auto warn = [&](const std::string& w) {
    st.warnings.push_back(w);
    layout.warnings.push_back(w);
  };

  for (MaskId id : graph.top_down()) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    const std::size_t i = it->second;
    LayoutObject& o = layout.objects[i];
    const TreeEdge& e = graph.parent.at(id);
    const auto members = subtree_indices(graph, id, idx);
    double target_zmin = layout.room.floor_height;
    if (e.parent != kFloorId) {
      auto pit = idx.find(e.parent);
      if (pit == idx.end()) {
        warn("object " + std::to_string(id) + ": parent " + std::to_string(e.parent) +
             " has no placed asset; support left as is");
        continue;
      }
      const LayoutObject& p = layout.objects[pit->second];
      if (e.d_vertical > 0) {
        const Asset* pa = library ? library->manifest.find(p.asset_id) : nullptr;
        if (pa && !pa->subspaces.empty()) {
          const auto [t, s] = place_internal(o, p, *pa, e.d_vertical);
          // Descendants follow the child and keep their offsets.
          shift(layout, members, t - o.t);
          o.s = s;
          st.frozen[i] = {false, false, true};
          st.locked[i] = true;
          continue;
        }
        warn("object " + std::to_string(id) + ": parent asset has no subspace; placed on top");
      }
      target_zmin = support_top(o, shapes.grid(i), p, shapes.grid(pit->second));
    }
    shift(layout, members, Vec3(0, 0, target_zmin - z_min(o)));
    st.frozen[i][2] = true;
  }

  for (MaskId id : graph.ceiling_set) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    LayoutObject& o = layout.objects[it->second];
    if (!layout.room.ceiling_height) {
      warn("object " + std::to_string(id) + ": ceiling height unknown; ceiling constraint relaxed");
      st.relaxed = true;
      continue;
    }
    o.t.z() += *layout.room.ceiling_height - z_max(o);
    st.frozen[it->second][2] = true;
    if (z_min(o) < layout.room.floor_height) {
      warn("object " + std::to_string(id) + ": taller than the room");
      st.relaxed = true;
    }
  }

  if (layout.room.ceiling_height) {
    for (MaskId id : graph.top_down()) {
      auto it = idx.find(id);
      if (it == idx.end()) continue;
      if (z_max(layout.objects[it->second]) > *layout.room.ceiling_height + 1e-9) {
        warn("object " + std::to_string(id) + ": reaches above the ceiling");
        st.relaxed = true;
      }
    }
  }

  for (const auto& [id, w] : graph.wall_edges) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    if (w < 0 || w >= static_cast<int>(layout.room.walls.size())) {
      warn("object " + std::to_string(id) + ": unknown wall " + std::to_string(w));
      st.relaxed = true;
      continue;
    }
    const Plane& wall = layout.room.walls[w];
    LayoutObject& o = layout.objects[it->second];
    const double gap = signed_plane_gap(o.obb(), wall);
    shift(layout, subtree_indices(graph, id, idx), -gap * wall.n);
    st.frozen[it->second][dominant_axis(wall.n)] = true;
  }

  st.t_update.reserve(n);
  for (const LayoutObject& o : layout.objects) st.t_update.push_back(o.t);
  st.overlap = layout_overlap(layout, library, cfg.voxel_cell);
  return st;
}

TranslationProblem::TranslationProblem(const LayoutDocument& layout, const SceneBundle& bundle,
                                       const AssetLibrary* library, const RefineConfig& cfg)
    : camera_R_(layout.camera_R),
      camera_t_(layout.camera_t),
      K_(bundle.camera),
      cfg_(cfg),
      shapes_(layout.objects, library, cfg.voxel_cell) {
  const std::size_t npix = static_cast<std::size_t>(K_.width) * static_cast<std::size_t>(K_.height);
  cover_.assign(npix, 0);
  for (const Mask& m : bundle.masks) {
    if (m.bitmap.bits.size() != npix) throw Error(ErrorCode::DimensionMismatch, "mask size differs from camera");
    for (std::size_t p = 0; p < npix; ++p) cover_[p] += m.bitmap.bits[p] ? 1 : 0;
  }
  stamp_.assign(npix, 0);
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    faces_.push_back(exposed_faces(shapes_.grid(i), layout.objects[i].extents));
    const MaskId id = layout.objects[i].source_mask;
    const Bitmap* b = bundle.has_mask(id) ? &bundle.mask(id).bitmap : nullptr;
    masks_.push_back(b);
    mask_area_.push_back(b ? static_cast<std::size_t>(std::count_if(b->bits.begin(), b->bits.end(),
                                                                    [](auto v) { return v != 0; }))
                           : 0);
  }
}

template <class Visit>
void TranslationProblem::raster(const LayoutObject& obj, std::size_t i, Visit&& visit) const {
  const Pose p = obj.pose();
  const Mat3 A = camera_R_ * p.R;
  const Mat3 M = A * p.s.asDiagonal();
  const Vec3 b = camera_R_ * p.t + camera_t_;
  const Vec3 inv_s = p.s.cwiseInverse();
  for (const VoxelFace& f : faces_[i]) {
    std::array<Vec3, 4> c;
    bool in_front = true;
    for (int k = 0; k < 4; ++k) {
      c[k] = M * f.corners[k] + b;
      in_front = in_front && c[k].z() > 1e-6;
    }
    if (!in_front) continue;
    const Vec3 n = A * f.normal.cwiseProduct(inv_s);
    if (n.dot(c[0]) >= 0) continue;
    std::array<Vec2, 4> q;
    double u_lo = 1e300, u_hi = -1e300, v_lo = 1e300, v_hi = -1e300;
    for (int k = 0; k < 4; ++k) {
      q[k] = K_.project(c[k]);
      u_lo = std::min(u_lo, q[k].x());
      u_hi = std::max(u_hi, q[k].x());
      v_lo = std::min(v_lo, q[k].y());
      v_hi = std::max(v_hi, q[k].y());
    }
    const int u0 = std::max(0, static_cast<int>(std::ceil(u_lo)));
    const int u1 = std::min(K_.width - 1, static_cast<int>(std::floor(u_hi)));
    const int v0 = std::max(0, static_cast<int>(std::ceil(v_lo)));
    const int v1 = std::min(K_.height - 1, static_cast<int>(std::floor(v_hi)));
    if (u0 > u1 || v0 > v1) continue;
    double area = 0;
    for (int k = 0; k < 4; ++k) {
      const Vec2& a = q[k];
      const Vec2& e = q[(k + 1) % 4];
      area += a.x() * e.y() - e.x() * a.y();
    }
    const double orient = area > 0 ? 1.0 : -1.0;
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        bool inside = true;
        for (int k = 0; k < 4 && inside; ++k) {
          const Vec2& a = q[k];
          const Vec2& e = q[(k + 1) % 4];
          inside = orient * ((e.x() - a.x()) * (v - a.y()) - (e.y() - a.y()) * (u - a.x())) >= 0;
        }
        if (inside) visit(static_cast<std::size_t>(v) * static_cast<std::size_t>(K_.width) + static_cast<std::size_t>(u));
      }
    }
  }
}

PixelSet TranslationProblem::render(const LayoutObject& obj, std::size_t i) const {
  PixelSet out;
  raster(obj, i, [&](std::size_t px) { out.push_back(static_cast<std::uint32_t>(px)); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double TranslationProblem::mask_term(std::size_t i, const LayoutObject& obj) const {
  if (mask_area_[i] == 0) return 0.0;
  const std::vector<std::uint8_t>& own = masks_[i]->bits;
  if (++generation_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0u);
    generation_ = 1;
  }
  std::size_t hit = 0, stray = 0;
  raster(obj, i, [&](std::size_t px) {
    if (stamp_[px] == generation_) return;
    stamp_[px] = generation_;
    if (own[px]) {
      ++hit;
    } else if (cover_[px] == 0) {
      ++stray;
    }
  });
  return static_cast<double>(mask_area_[i] - hit + stray) / static_cast<double>(mask_area_[i]);
}

std::vector<CellKey> TranslationProblem::cells(const LayoutObject& obj, std::size_t i) const {
  return object_cells(obj, shapes_.grid(i), cfg_.voxel_cell);
}

double objective(const OptState& state, const LayoutDocument& layout, const SceneBundle& bundle,
                 const AssetLibrary* library, const RefineConfig& cfg) {
  const TranslationProblem prob(layout, bundle, library, cfg);
  double disp = 0, mask = 0;
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    if (i < state.t_update.size()) disp += (layout.objects[i].t - state.t_update[i]).squaredNorm();
    mask += prob.mask_term(i, layout.objects[i]);
  }
  return cfg.lambda1 * disp + mask;
}

std::size_t layout_overlap(const LayoutDocument& layout, const AssetLibrary* library,
                           double voxel_cell) {
  const ShapeSet shapes(layout.objects, library, voxel_cell);
  OccupancyMap occ;
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    occ.add(object_cells(layout.objects[i], shapes.grid(i), voxel_cell));
  }
  return occ.overlap();
}

OptState anneal_translations(OptState st, LayoutDocument& layout, const SceneGraph& graph,
                             const SceneBundle& bundle, const AssetLibrary* library,
                             const RefineConfig& cfg) {
  cfg.validate();
  const std::size_t n = layout.objects.size();
  if (st.t_update.size() != n || st.frozen.size() != n || st.locked.size() != n) {
    throw Error(ErrorCode::Validation, "anneal: state does not match the layout");
  }
  const auto idx = index_by_mask(layout);
  const TranslationProblem prob(layout, bundle, library, cfg);

  std::vector<std::vector<CellKey>> cells(n);
  std::vector<double> mask(n), disp(n);
  OccupancyMap occ;
  for (std::size_t i = 0; i < n; ++i) {
    cells[i] = prob.cells(layout.objects[i], i);
    occ.add(cells[i]);
    mask[i] = prob.mask_term(i, layout.objects[i]);
    disp[i] = (layout.objects[i].t - st.t_update[i]).squaredNorm();
  }
  auto raw_total = [&] {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += cfg.lambda1 * disp[i] + mask[i];
    return s;
  };
  auto constrained = [](std::size_t omega, double raw) { return omega > 0 ? kInf : raw; };

  // Proposals move one object; its subtree rides along, so an axis frozen
  // anywhere in the subtree stays fixed.
  struct Move {
    std::size_t object;
    std::vector<std::size_t> members;
    std::array<bool, 3> frozen;
    std::optional<std::size_t> support_parent;  // contact parent whose footprint bounds the center
  };
  std::vector<Move> moves;
  for (std::size_t i = 0; i < n; ++i) {
    if (st.locked[i]) continue;
    const MaskId id = layout.objects[i].source_mask;
    Move m{i, subtree_indices(graph, id, idx), {false, false, false}, std::nullopt};
    for (std::size_t k : m.members) {
      for (int a = 0; a < 3; ++a) m.frozen[a] = m.frozen[a] || st.frozen[k][a];
    }
    if (m.frozen[0] && m.frozen[1] && m.frozen[2]) continue;
    if (graph.in_tree(id)) {
      const MaskId p = graph.parent.at(id).parent;
      if (p != kFloorId) {
        if (auto pit = idx.find(p); pit != idx.end()) m.support_parent = pit->second;
      }
    }
    moves.push_back(std::move(m));
  }

  double raw = raw_total();
  st.overlap = occ.overlap();
  st.objective = constrained(st.overlap, raw);
  std::vector<Vec3> best_t;
  for (const LayoutObject& o : layout.objects) best_t.push_back(o.t);
  std::size_t best_omega = st.overlap;
  double best_raw = raw;

  std::mt19937_64 rng(cfg.anneal.seed);
  std::normal_distribution<double> step(0.0, cfg.anneal.step_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double T = cfg.anneal.T0;

  for (int it = 0; it < cfg.anneal.iters && !moves.empty(); ++it, T *= cfg.anneal.cooling) {
    const Move& mv = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
    Vec3 d(step(rng), step(rng), step(rng));
    for (int a = 0; a < 3; ++a) {
      if (mv.frozen[a]) d[a] = 0.0;
    }
    TraceRow row{it, T, layout.objects[mv.object].source_mask, false, st.objective};

    bool ok = true;
    if (mv.support_parent) {
      const Obb pb = layout.objects[*mv.support_parent].obb();
      const Vec3 local = pb.axes.transpose() * (layout.objects[mv.object].t + d - pb.center);
      ok = std::abs(local.x()) <= pb.half_extents.x() && std::abs(local.y()) <= pb.half_extents.y();
    }
    double pen_before = 0, pen_after = 0;
    if (ok) {
      for (std::size_t k : mv.members) pen_before += wall_penetration(layout.objects[k], layout.room.walls);
      shift(layout, mv.members, d);
      for (std::size_t k : mv.members) pen_after += wall_penetration(layout.objects[k], layout.room.walls);
      if (pen_after > pen_before + 1e-12) {
        shift(layout, mv.members, -d);
        ok = false;
      }
    }
    if (!ok) {
      st.trace.push_back(row);
      continue;
    }

    const std::size_t omega_before = occ.overlap();
    std::vector<std::vector<CellKey>> new_cells;
    for (std::size_t k : mv.members) occ.remove(cells[k]);
    for (std::size_t k : mv.members) {
      new_cells.push_back(prob.cells(layout.objects[k], k));
      occ.add(new_cells.back());
    }
    const std::size_t omega = occ.overlap();
    auto undo = [&] {
      for (const auto& c : new_cells) occ.remove(c);
      for (std::size_t k : mv.members) occ.add(cells[k]);
      shift(layout, mv.members, -d);
    };
    if (omega > omega_before) {
      undo();
      st.trace.push_back(row);
      continue;
    }
    std::vector<double> new_mask, new_disp;
    double new_raw = raw;
    for (std::size_t k : mv.members) {
      new_mask.push_back(prob.mask_term(k, layout.objects[k]));
      new_disp.push_back((layout.objects[k].t - st.t_update[k]).squaredNorm());
      new_raw += new_mask.back() - mask[k] + cfg.lambda1 * (new_disp.back() - disp[k]);
    }
    const double delta = new_raw - raw;
    const bool accept = omega < omega_before || delta <= 0 || unit(rng) < std::exp(-delta / T);
    if (!accept) {
      undo();
      st.trace.push_back(row);
      continue;
    }
    for (std::size_t j = 0; j < mv.members.size(); ++j) {
      const std::size_t k = mv.members[j];
      cells[k] = std::move(new_cells[j]);
      mask[k] = new_mask[j];
      disp[k] = new_disp[j];
    }
    raw = new_raw;
    st.overlap = omega;
    st.objective = constrained(omega, raw);
    row.accepted = true;
    row.objective = st.objective;
    st.trace.push_back(row);
    if (omega < best_omega || (omega == best_omega && raw < best_raw)) {
      best_omega = omega;
      best_raw = raw;
      for (std::size_t i = 0; i < n; ++i) best_t[i] = layout.objects[i].t;
    }
  }

  for (std::size_t i = 0; i < n; ++i) layout.objects[i].t = best_t[i];
  st.overlap = best_omega;
  st.objective = constrained(best_omega, best_raw);
  return st;
}

LayoutDocument settle(LayoutDocument layout, const SceneGraph& graph, const AssetLibrary* library,
                      const RefineConfig& cfg) {
  const auto idx = index_by_mask(layout);
  const ShapeSet shapes(layout.objects, library, cfg.voxel_cell);
  const double tol = 1e-9;
  for (MaskId id : graph.top_down()) {
    auto it = idx.find(id);
    if (it == idx.end()) continue;
    const std::size_t i = it->second;
    const TreeEdge& e = graph.parent.at(id);
    double ground = layout.room.floor_height;
    if (e.parent != kFloorId) {
      auto pit = idx.find(e.parent);
      if (pit == idx.end()) continue;
      const auto h = support_height_under(layout.objects[i], shapes.grid(i),
                                          layout.objects[pit->second], shapes.grid(pit->second),
                                          1e-6);
      if (!h) {
        layout.warnings.push_back("settle: object " + std::to_string(id) +
                                  " is not above its support");
        continue;
      }
      ground = *h;
    }
    const double gap = z_min(layout.objects[i]) - ground;
    if (gap > tol) shift(layout, subtree_indices(graph, id, idx), Vec3(0, 0, -gap));
  }
  return layout;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << "iteration,temperature,proposal,accepted,objective\n";
  f.precision(17);
  for (const TraceRow& r : trace) {
    f << r.iteration << ',' << r.temperature << ',' << r.proposal << ',' << (r.accepted ? 1 : 0)
      << ',' << r.objective << '\n';
  }
}

}  // namespace layoutforge
